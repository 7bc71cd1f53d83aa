// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genex/error.hpp"
#include "genex/filter.hpp"
#include "genex/rank.hpp"
#include "genex/text.hpp"

namespace genex {

struct GoldLabel {
  std::string exemplarId;
  std::optional<bool> validInstantiation;
  std::optional<bool> validException;

  std::optional<bool> forKind(ExemplarKind k) const {
    return k == ExemplarKind::Exception ? validException : validInstantiation;
  }
};

using LabelSet = std::map<std::string, GoldLabel>;

// Lines {"exemplarId", "kind", "valid"}; two lines for one id may carry both
// labels.
inline LabelSet labelsFromJsonl(std::string_view content, const std::string& origin = "labels") {
  LabelSet out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (j.contains("schema")) continue;
      auto id = j.at("exemplarId").get<std::string>();
      auto kind = parseExemplarKind(j.at("kind").get<std::string>());
      bool valid = j.at("valid").get<bool>();
      auto& l = out[id];
      l.exemplarId = id;
      (kind == ExemplarKind::Exception ? l.validException : l.validInstantiation) = valid;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidInput, origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline LabelSet loadLabels(const std::filesystem::path& path) {
  return labelsFromJsonl(text::readFile(path), path.string());
}

// Whether an exemplar is labeled valid for its own kind; nullopt if unlabeled.
inline std::optional<bool> labelFor(const LabelSet& labels, const Exemplar& e) {
  auto it = labels.find(e.id);
  if (it == labels.end()) return std::nullopt;
  return it->second.forKind(e.kind);
}

inline void requireLabels(const LabelSet& labels, const std::vector<const Exemplar*>& items) {
  std::vector<std::string> missing;
  for (const auto* e : items) {
    if (!labelFor(labels, *e)) missing.push_back(e->id);
  }
  if (!missing.empty()) throw Error(ErrorCode::MissingLabel, "no label for: " + text::join(missing, ", "));
}

// ---------------------------------------------------------------------------
// Ranked system output

// Per generic, the exemplars in system order.
using RankedLists = std::map<std::string, std::vector<Exemplar>>;

// Groups exemplars by generic (optionally only SelectedValid ones, optionally
// one kind) and orders each group by validity probability descending, then
// combined rank, then id.
inline RankedLists rankedByGeneric(const std::vector<Exemplar>& exs, bool selected_only = true,
                                   std::optional<ExemplarKind> kind = std::nullopt) {
  RankedLists out;
  for (const auto& e : exs) {
    if (selected_only && e.status != ExemplarStatus::SelectedValid) continue;
    if (kind && e.kind != *kind) continue;
    out[e.genericId].push_back(e);
  }
  for (auto& [gid, list] : out) {
    std::sort(list.begin(), list.end(), [](const Exemplar& a, const Exemplar& b) {
      double va = a.validity ? a.validity->probability : 0.0;
      double vb = b.validity ? b.validity->probability : 0.0;
      if (va != vb) return va > vb;
      if (a.combinedRank != b.combinedRank) return a.combinedRank < b.combinedRank;
      return a.id < b.id;
    });
  }
  return out;
}

struct PrecisionResult {
  double precision = 0.0;
  int valid = 0;
  int counted = 0;
};

// Pooled (micro) precision over each generic's top-k items.
inline PrecisionResult precisionAtKDetail(const RankedLists& ranked, const LabelSet& labels, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidInput, "k must be >= 1");
  std::vector<const Exemplar*> counted;
  for (const auto& [gid, list] : ranked) {
    for (std::size_t i = 0; i < list.size() && i < static_cast<std::size_t>(k); ++i) counted.push_back(&list[i]);
  }
  requireLabels(labels, counted);
  PrecisionResult r;
  r.counted = static_cast<int>(counted.size());
  for (const auto* e : counted) r.valid += *labelFor(labels, *e) ? 1 : 0;
  r.precision = r.counted ? static_cast<double>(r.valid) / r.counted : 0.0;
  return r;
}

inline double precisionAtK(const RankedLists& ranked, const LabelSet& labels, int k) {
  return precisionAtKDetail(ranked, labels, k).precision;
}

struct TemplateValidity {
  double validFraction = 0.0;
  int nGens = 0;
  int nValid = 0;
};

// Per template, the first min(n_per_template, available) exemplars in system
// order are counted. Templates without generations are absent.
inline std::map<std::string, TemplateValidity> perTemplateValidity(const std::vector<Exemplar>& exs,
                                                                   const LabelSet& labels, int n_per_template) {
  if (n_per_template < 1) throw Error(ErrorCode::InvalidInput, "nPerTemplate must be >= 1");
  std::map<std::string, std::vector<const Exemplar*>> by_template;
  for (const auto& e : exs) by_template[e.templateId].push_back(&e);
  std::map<std::string, TemplateValidity> out;
  for (auto& [tid, list] : by_template) {
    std::sort(list.begin(), list.end(), [](const Exemplar* a, const Exemplar* b) {
      double va = a->validity ? a->validity->probability : 0.0;
      double vb = b->validity ? b->validity->probability : 0.0;
      if (va != vb) return va > vb;
      if (a->combinedRank != b->combinedRank) return a->combinedRank < b->combinedRank;
      return a->id < b->id;
    });
    if (list.size() > static_cast<std::size_t>(n_per_template)) list.resize(static_cast<std::size_t>(n_per_template));
    requireLabels(labels, list);
    TemplateValidity tv;
    tv.nGens = static_cast<int>(list.size());
    for (const auto* e : list) tv.nValid += *labelFor(labels, *e) ? 1 : 0;
    tv.validFraction = static_cast<double>(tv.nValid) / tv.nGens;
    out[tid] = tv;
  }
  return out;
}

struct DatasetStats {
  int nGenerics = 0;
  int nExceptions = 0;
  int nInstantiations = 0;
  int nTotal = 0;
  std::map<std::string, int> byTemplate;

  bool operator==(const DatasetStats&) const = default;
};

inline DatasetStats datasetStats(const std::vector<Exemplar>& exs) {
  DatasetStats s;
  std::set<std::string> generics;
  for (const auto& e : exs) {
    generics.insert(e.genericId);
    (e.kind == ExemplarKind::Exception ? s.nExceptions : s.nInstantiations)++;
    s.byTemplate[e.templateId]++;
  }
  s.nGenerics = static_cast<int>(generics.size());
  s.nTotal = s.nExceptions + s.nInstantiations;
  return s;
}

inline nlohmann::json toJson(const DatasetStats& s) {
  return {{"nGenerics", s.nGenerics},
          {"nExceptions", s.nExceptions},
          {"nInstantiations", s.nInstantiations},
          {"nTotal", s.nTotal},
          {"byTemplate", s.byTemplate}};
}

inline DatasetStats statsFromJson(const nlohmann::json& j) {
  DatasetStats s;
  s.nGenerics = j.at("nGenerics").get<int>();
  s.nExceptions = j.at("nExceptions").get<int>();
  s.nInstantiations = j.at("nInstantiations").get<int>();
  s.nTotal = j.at("nTotal").get<int>();
  if (j.contains("byTemplate")) s.byTemplate = j.at("byTemplate").get<std::map<std::string, int>>();
  return s;
}

// ---------------------------------------------------------------------------
// Ablations

struct AblationRow {
  std::string metric;
  std::string kind;  // "all", "exception" or "instantiation"
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;  // b - a
};

inline std::size_t uniqueGenerations(const std::vector<Exemplar>& exs, std::optional<ExemplarKind> kind = std::nullopt) {
  std::set<std::string> seen;
  for (const auto& e : exs) {
    if (!kind || e.kind == *kind) seen.insert(text::normalizeForUniqueness(e.text));
  }
  return seen.size();
}

// Precision over labeled exemplars of a kind that the NLI mode keeps;
// unlabeled exemplars are ignored. Returns nullopt when nothing is counted.
inline std::optional<double> filteredPrecision(const std::vector<Exemplar>& exs, const LabelSet& labels,
                                               std::optional<ExemplarKind> kind, NliFilterMode mode) {
  int valid = 0, counted = 0;
  for (const auto& e : exs) {
    if (kind && e.kind != *kind) continue;
    auto l = labelFor(labels, e);
    if (!l || !nliKeeps(e.nli, e.kind, mode)) continue;
    ++counted;
    valid += *l ? 1 : 0;
  }
  if (!counted) return std::nullopt;
  return static_cast<double>(valid) / counted;
}

inline std::set<std::string> genericIds(const std::vector<Exemplar>& exs) {
  std::set<std::string> out;
  for (const auto& e : exs) out.insert(e.genericId);
  return out;
}

// Compares two runs over the same generics. Rows: unique normalized
// generations; with labels, the labeled-valid proportion, the precision kept
// by each NLI filter mode and that mode's gain over no filtering.
inline std::vector<AblationRow> ablationReport(const std::vector<Exemplar>& run_a, const std::vector<Exemplar>& run_b,
                                               const LabelSet* labels = nullptr) {
  auto ga = genericIds(run_a), gb = genericIds(run_b);
  if (ga != gb) {
    std::vector<std::string> diff;
    std::set_symmetric_difference(ga.begin(), ga.end(), gb.begin(), gb.end(), std::back_inserter(diff));
    throw Error(ErrorCode::InputMismatch, "runs cover different generics: " + text::join(diff, ", "));
  }
  const std::vector<std::pair<std::string, std::optional<ExemplarKind>>> kinds = {
      {"all", std::nullopt}, {"exception", ExemplarKind::Exception}, {"instantiation", ExemplarKind::Instantiation}};
  std::vector<AblationRow> rows;
  auto add = [&](std::string metric, const std::string& kind, double a, double b) {
    rows.push_back({std::move(metric), kind, a, b, b - a});
  };
  for (const auto& [name, kind] : kinds) {
    add("unique-generations", name, static_cast<double>(uniqueGenerations(run_a, kind)),
        static_cast<double>(uniqueGenerations(run_b, kind)));
  }
  if (!labels) return rows;
  for (const auto& [name, kind] : kinds) {
    auto base_a = filteredPrecision(run_a, *labels, kind, NliFilterMode::None);
    auto base_b = filteredPrecision(run_b, *labels, kind, NliFilterMode::None);
    if (!base_a && !base_b) continue;
    add("valid-proportion", name, base_a.value_or(0.0), base_b.value_or(0.0));
    for (auto mode : {NliFilterMode::NliSim, NliFilterMode::NliNeu, NliFilterMode::NliSimPlusNeu}) {
      auto pa = filteredPrecision(run_a, *labels, kind, mode).value_or(0.0);
      auto pb = filteredPrecision(run_b, *labels, kind, mode).value_or(0.0);
      add("precision[" + std::string(nliFilterModeName(mode)) + "]", name, pa, pb);
      add("precision-gain[" + std::string(nliFilterModeName(mode)) + "]", name, pa - base_a.value_or(0.0),
          pb - base_b.value_or(0.0));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Reports

struct EvalReport {
  std::map<int, double> precisionAtK;
  std::map<std::string, std::map<int, double>> precisionAtKByKind;
  std::map<std::string, TemplateValidity> perTemplate;
  DatasetStats stats;
  std::vector<AblationRow> ablationRows;
  bool labeled = false;
};

inline nlohmann::json toJson(const EvalReport& r) {
  nlohmann::json j;
  j["schema"] = "genex.eval-report";
  j["version"] = 1;
  j["stats"] = toJson(r.stats);
  if (r.labeled) {
    nlohmann::json p = nlohmann::json::object();
    for (auto [k, v] : r.precisionAtK) p[std::to_string(k)] = v;
    j["precisionAtK"] = p;
    nlohmann::json pk = nlohmann::json::object();
    for (const auto& [kind, m] : r.precisionAtKByKind) {
      for (auto [k, v] : m) pk[kind][std::to_string(k)] = v;
    }
    j["precisionAtKByKind"] = pk;
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [tid, tv] : r.perTemplate) {
      t[tid] = {{"validFraction", tv.validFraction}, {"nGens", tv.nGens}, {"nValid", tv.nValid}};
    }
    j["perTemplate"] = t;
  }
  if (!r.ablationRows.empty()) {
    j["ablation"] = nlohmann::json::array();
    for (const auto& row : r.ablationRows) {
      j["ablation"].push_back({{"metric", row.metric}, {"kind", row.kind}, {"a", row.a}, {"b", row.b}, {"delta", row.delta}});
    }
  }
  return j;
}

// Plain-text table with left-aligned first columns and right-aligned numbers.
inline std::string alignedTable(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                                std::size_t text_columns = 1) {
  std::vector<std::size_t> width(header.size(), 0);
  auto widen = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  };
  widen(header);
  for (const auto& r : rows) widen(r);
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < width.size(); ++i) {
      const auto cell = i < r.size() ? r[i] : std::string();
      auto pad = std::string(width[i] - cell.size(), ' ');
      if (i) out << "  ";
      out << (i < text_columns ? cell + pad : pad + cell);
    }
    out << "\n";
  };
  emit(header);
  std::vector<std::string> rule;
  for (auto w : width) rule.emplace_back(w, '-');
  emit(rule);
  for (const auto& r : rows) emit(r);
  return out.str();
}

inline std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string toText(const EvalReport& r) {
  std::ostringstream out;
  out << "Dataset statistics\n";
  std::vector<std::vector<std::string>> srows = {{"generics", std::to_string(r.stats.nGenerics)},
                                                 {"exceptions", std::to_string(r.stats.nExceptions)},
                                                 {"instantiations", std::to_string(r.stats.nInstantiations)},
                                                 {"total", std::to_string(r.stats.nTotal)}};
  for (const auto& [tid, n] : r.stats.byTemplate) srows.push_back({"template " + tid, std::to_string(n)});
  out << alignedTable({"count", "value"}, srows);
  if (r.labeled) {
    out << "\nPrecision at k\n";
    std::vector<std::vector<std::string>> prows;
    for (auto [k, v] : r.precisionAtK) prows.push_back({"all", std::to_string(k), fmt(v)});
    for (const auto& [kind, m] : r.precisionAtKByKind) {
      for (auto [k, v] : m) prows.push_back({kind, std::to_string(k), fmt(v)});
    }
    out << alignedTable({"kind", "k", "precision"}, prows);
    out << "\nPer-template validity\n";
    std::vector<std::vector<std::string>> trows;
    for (const auto& [tid, tv] : r.perTemplate) {
      trows.push_back({tid, std::to_string(tv.nValid), std::to_string(tv.nGens), fmt(tv.validFraction)});
    }
    out << alignedTable({"template", "valid", "n", "fraction"}, trows);
  }
  if (!r.ablationRows.empty()) {
    out << "\nAblation (delta = B - A)\n";
    std::vector<std::vector<std::string>> arows;
    for (const auto& row : r.ablationRows) arows.push_back({row.metric, row.kind, fmt(row.a), fmt(row.b), fmt(row.delta)});
    out << alignedTable({"metric", "kind", "A", "B", "delta"}, arows, 2);
  }
  return out.str();
}

inline std::string ablationText(const std::vector<AblationRow>& rows) {
  std::vector<std::vector<std::string>> arows;
  for (const auto& row : rows) arows.push_back({row.metric, row.kind, fmt(row.a), fmt(row.b), fmt(row.delta)});
  return alignedTable({"metric", "kind", "A", "B", "delta"}, arows, 2);
}

// Full report over a run's selected output. Without labels only statistics are
// filled in.
inline EvalReport evaluate(const std::vector<Exemplar>& exs, const LabelSet* labels, const std::vector<int>& ks = {1, 5},
                           int n_per_template = 10) {
  EvalReport r;
  std::vector<Exemplar> selected;
  for (const auto& e : exs) {
    if (e.status == ExemplarStatus::SelectedValid) selected.push_back(e);
  }
  r.stats = datasetStats(selected);
  if (!labels) return r;
  r.labeled = true;
  for (int k : ks) {
    r.precisionAtK[k] = precisionAtK(rankedByGeneric(selected), *labels, k);
    for (auto kind : {ExemplarKind::Exception, ExemplarKind::Instantiation}) {
      auto lists = rankedByGeneric(selected, true, kind);
      if (!lists.empty()) r.precisionAtKByKind[std::string(exemplarKindName(kind))][k] = precisionAtK(lists, *labels, k);
    }
  }
  r.perTemplate = perTemplateValidity(selected, *labels, n_per_template);
  return r;
}

}  // namespace genex
