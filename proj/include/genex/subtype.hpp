// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "genex/error.hpp"
#include "genex/lexicon.hpp"
#include "genex/text.hpp"

namespace genex {

enum class SubtypeSource { KB, LMPrompt, MLMInfill };

inline std::string_view subtypeSourceName(SubtypeSource s) {
  switch (s) {
    case SubtypeSource::KB: return "kb";
    case SubtypeSource::LMPrompt: return "lm";
    case SubtypeSource::MLMInfill: return "mlm";
  }
  return "";
}

inline SubtypeSource parseSubtypeSource(std::string_view s) {
  auto k = text::toLower(s);
  if (k == "kb" || k == "conceptnet" || k == "cn") return SubtypeSource::KB;
  if (k == "lm" || k == "lmprompt" || k == "g3") return SubtypeSource::LMPrompt;
  if (k == "mlm" || k == "mlminfill") return SubtypeSource::MLMInfill;
  throw Error(ErrorCode::ConfigurationError, "unknown subtype source '" + std::string(s) + "'");
}

struct SubtypeRecord {
  std::string term;
  std::string parent;
  SubtypeSource source = SubtypeSource::KB;
  double score = 0.0;

  bool operator==(const SubtypeRecord&) const = default;
};

// Total order used for every subtype list: score descending, then term.
inline void sortSubtypes(std::vector<SubtypeRecord>& recs) {
  std::sort(recs.begin(), recs.end(), [](const SubtypeRecord& a, const SubtypeRecord& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.term < b.term;
  });
}

// Keeps the best-scored record per lemma and drops any record whose lemma is
// the parent's.
inline std::vector<SubtypeRecord> dedupeSubtypes(std::vector<SubtypeRecord> recs, const Lexicon& lex) {
  sortSubtypes(recs);
  std::set<std::string> seen;
  std::vector<SubtypeRecord> out;
  for (auto& r : recs) {
    auto l = lex.lemma(r.term);
    if (l.empty() || l == lex.lemma(r.parent) || !seen.insert(l).second) continue;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Knowledge-base edges

struct KbEdge {
  std::string start;
  std::string relationLabel;
  std::string end;
  double weight = 1.0;
};

// Read-only edge store over a tab-separated file (start, relation, end,
// weight). Edges with labels outside the configured set are ignored.
class EdgeStore {
 public:
  explicit EdgeStore(std::set<std::string> labels = {"IsA", "InstanceOf", "Synonym"})
      : labels_(std::move(labels)) {}

  static EdgeStore load(const std::filesystem::path& path,
                        std::set<std::string> labels = {"IsA", "InstanceOf", "Synonym"}) {
    EdgeStore store(std::move(labels));
    std::size_t line_no = 0;
    for (const auto& line : text::readDataLines(path)) {
      ++line_no;
      auto cols = text::split(line, '\t');
      if (cols.size() < 3) {
        throw Error(ErrorCode::InvalidInput, path.string() + ": malformed edge on data line " + std::to_string(line_no));
      }
      KbEdge e{text::trim(cols[0]), text::trim(cols[1]), text::trim(cols[2]), 1.0};
      if (cols.size() > 3) {
        try {
          e.weight = std::stod(cols[3]);
        } catch (const std::exception&) {
          throw Error(ErrorCode::InvalidInput, path.string() + ": bad weight on data line " + std::to_string(line_no));
        }
      }
      store.add(std::move(e));
    }
    return store;
  }

  void add(KbEdge e) {
    if (!labels_.count(e.relationLabel) || e.weight < 0) return;
    max_weight_ = std::max(max_weight_, e.weight);
    auto idx = edges_.size();
    by_end_[text::toLower(e.end)].push_back(idx);
    by_start_[text::toLower(e.start)].push_back(idx);
    edges_.push_back(std::move(e));
  }

  const std::vector<KbEdge>& edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }

  double normalized(const KbEdge& e) const { return max_weight_ > 0 ? e.weight / max_weight_ : 0.0; }

  std::vector<const KbEdge*> incoming(const std::string& key) const { return lookup(by_end_, key); }
  std::vector<const KbEdge*> outgoing(const std::string& key) const { return lookup(by_start_, key); }

 private:
  std::vector<const KbEdge*> lookup(const std::unordered_map<std::string, std::vector<std::size_t>>& index,
                                    const std::string& key) const {
    std::vector<const KbEdge*> out;
    if (auto it = index.find(key); it != index.end()) {
      for (auto i : it->second) out.push_back(&edges_[i]);
    }
    return out;
  }

  std::set<std::string> labels_;
  std::vector<KbEdge> edges_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_end_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_start_;
  double max_weight_ = 0.0;
};

// Terms t with a directed IsA/InstanceOf path t -> ... -> term of length at
// most max_depth, plus Synonym neighbours of term. A record's score is the
// product of normalized edge weights along its best path.
inline std::vector<SubtypeRecord> kbSubtypes(const std::string& term, const EdgeStore& kb, int max_depth,
                                             const Lexicon& lex = {}) {
  if (max_depth < 1) throw Error(ErrorCode::InvalidInput, "maxDepth must be >= 1");
  std::vector<std::string> roots = {text::toLower(term)};
  if (auto l = lex.lemma(term); l != roots[0]) roots.push_back(l);

  std::map<std::string, double> best;  // lowercased term -> best path score
  std::map<std::string, std::string> surface;
  std::map<std::string, int> shallowest;
  std::deque<std::tuple<std::string, double, int>> frontier;
  for (const auto& r : roots) frontier.emplace_back(r, 1.0, 0);
  while (!frontier.empty()) {
    auto [node, score, depth] = frontier.front();
    frontier.pop_front();
    if (depth >= max_depth) continue;
    for (const auto* e : kb.incoming(node)) {
      if (e->relationLabel == "Synonym") continue;
      auto key = text::toLower(e->start);
      double s = score * kb.normalized(*e);
      auto it = best.find(key);
      auto dit = shallowest.find(key);
      bool better = it == best.end() || s > it->second;
      bool shallower = dit == shallowest.end() || depth + 1 < dit->second;
      if (!better && !shallower) continue;
      if (better) {
        best[key] = s;
        surface[key] = e->start;
      }
      if (shallower) shallowest[key] = depth + 1;
      frontier.emplace_back(key, s, depth + 1);
    }
  }
  for (const auto& r : roots) {
    for (const auto* e : kb.incoming(r)) {
      if (e->relationLabel != "Synonym") continue;
      auto key = text::toLower(e->start);
      if (best[key] < kb.normalized(*e)) best[key] = kb.normalized(*e), surface[key] = e->start;
    }
    for (const auto* e : kb.outgoing(r)) {
      if (e->relationLabel != "Synonym") continue;
      auto key = text::toLower(e->end);
      if (best[key] < kb.normalized(*e)) best[key] = kb.normalized(*e), surface[key] = e->end;
    }
  }
  std::vector<SubtypeRecord> out;
  for (const auto& [key, score] : best) {
    out.push_back({surface[key], term, SubtypeSource::KB, score});
  }
  return dedupeSubtypes(std::move(out), lex);
}

// ---------------------------------------------------------------------------
// Kind categories

enum class KindCategory { Person, Animal, OtherLiving, Location, Temporal, Other };

inline std::string_view kindCategoryName(KindCategory k) {
  switch (k) {
    case KindCategory::Person: return "person";
    case KindCategory::Animal: return "animal";
    case KindCategory::OtherLiving: return "other_living";
    case KindCategory::Location: return "location";
    case KindCategory::Temporal: return "temporal";
    case KindCategory::Other: return "other";
  }
  return "";
}

inline KindCategory parseKindCategory(std::string_view s) {
  auto k = text::enumKey(s);
  if (k == "person") return KindCategory::Person;
  if (k == "animal") return KindCategory::Animal;
  if (k == "otherliving") return KindCategory::OtherLiving;
  if (k == "location") return KindCategory::Location;
  if (k == "temporal") return KindCategory::Temporal;
  if (k == "other") return KindCategory::Other;
  throw Error(ErrorCode::ConfigurationError, "unknown kind category '" + std::string(s) + "'");
}

using KindSeedLists = std::map<KindCategory, std::set<std::string>>;

inline KindCategory assignKindCategory(const std::string& term, const KindSeedLists& seeds,
                                       const std::string& generic_text) {
  auto lw = text::lowerWords(term);
  std::set<std::string> keys = {text::toLower(term)};
  if (!lw.empty()) {
    auto sg = lw;
    sg.back() = Lexicon::singular(sg.back());
    keys.insert(text::join(sg, " "));
  }
  auto in = [&](KindCategory k) {
    auto it = seeds.find(k);
    if (it == seeds.end()) return false;
    return std::any_of(keys.begin(), keys.end(), [&](const std::string& key) { return it->second.count(key) != 0; });
  };
  auto first = text::lowerWords(generic_text);
  if (!first.empty()) {
    if (first[0] == "during") return KindCategory::Temporal;
    if (first[0] == "on" || first[0] == "in" || first[0] == "at") {
      return in(KindCategory::Temporal) ? KindCategory::Temporal : KindCategory::Location;
    }
  }
  for (auto k : {KindCategory::Person, KindCategory::Animal, KindCategory::OtherLiving, KindCategory::Location,
                 KindCategory::Temporal}) {
    if (in(k)) return k;
  }
  return KindCategory::Other;
}

// ---------------------------------------------------------------------------
// Language-model subtype providers

class TextCompletionProvider {
 public:
  virtual ~TextCompletionProvider() = default;
  virtual std::vector<std::string> complete(const std::string& prompt, int n_sequences) const = 0;
  virtual int maxInFlight() const { return 1; }
};

class MaskInfillProvider {
 public:
  virtual ~MaskInfillProvider() = default;
  // Fills for the single "<MASK>" in text, with probabilities.
  virtual std::vector<std::pair<std::string, double>> infill(const std::string& text, int k) const = 0;
  virtual int maxInFlight() const { return 1; }
};

// Few-shot exemplar per kind category: one type and five of its subtypes.
struct SubtypePromptExemplar {
  std::string type;
  std::vector<std::string> subtypes;
};

using SubtypePromptConfig = std::map<KindCategory, SubtypePromptExemplar>;

// Lines of the form "animal = bird: sparrow, penguin, owl, hawk, robin".
inline SubtypePromptConfig parseSubtypePromptConfig(std::string_view content) {
  SubtypePromptConfig out;
  for (const auto& [key, value] : text::parseKeyValue(content)) {
    auto colon = value.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::ConfigurationError, "subtype prompt entry '" + key + "' needs 'type: s1, ..., s5'");
    }
    SubtypePromptExemplar ex{text::trim(value.substr(0, colon)), {}};
    for (const auto& s : text::split(value.substr(colon + 1), ',')) {
      if (auto t = text::trim(s); !t.empty()) ex.subtypes.push_back(t);
    }
    if (ex.subtypes.size() != 5) {
      throw Error(ErrorCode::ConfigurationError, "subtype prompt entry '" + key + "' needs exactly five subtypes");
    }
    out[parseKindCategory(key)] = std::move(ex);
  }
  return out;
}

inline std::string subtypePrompt(const SubtypePromptExemplar& ex, const std::string& term) {
  return "Kinds of " + ex.type + ": " + text::join(ex.subtypes, ", ") + "\nKinds of " + term + ":";
}

inline std::vector<SubtypeRecord> lmSubtypes(const std::string& term, KindCategory category,
                                             const TextCompletionProvider& provider, int n_sequences,
                                             const SubtypePromptConfig& prompts, const Lexicon& lex = {}) {
  if (category == KindCategory::Person) {
    throw Error(ErrorCode::SubtypeProviderError, "person kinds are not subtyped");
  }
  auto it = prompts.find(category);
  if (it == prompts.end()) it = prompts.find(KindCategory::Other);
  if (it == prompts.end()) {
    throw Error(ErrorCode::ConfigurationError, "no subtype prompt for category " + std::string(kindCategoryName(category)));
  }
  std::vector<std::string> completions;
  try {
    completions = provider.complete(subtypePrompt(it->second, term), n_sequences);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SubtypeProviderError) throw;
    throw Error(ErrorCode::SubtypeProviderError, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::SubtypeProviderError, e.what());
  }
  // Score: share of returned sequences mentioning the subtype.
  std::map<std::string, std::pair<std::string, int>> counts;
  for (const auto& c : completions) {
    std::set<std::string> in_seq;
    std::string flat = c;
    std::replace(flat.begin(), flat.end(), '\n', ',');
    for (const auto& part : text::split(flat, ',')) {
      auto t = text::toLower(text::trim(part));
      while (!t.empty() && text::isPunct(t.back())) t.pop_back();
      t = text::trim(t);
      if (t.empty()) continue;
      auto l = lex.lemma(t);
      if (!in_seq.insert(l).second) continue;
      auto& slot = counts[l];
      if (slot.first.empty()) slot.first = t;
      ++slot.second;
    }
  }
  std::vector<SubtypeRecord> out;
  double denom = std::max<std::size_t>(1, completions.size());
  for (const auto& [l, entry] : counts) {
    out.push_back({entry.first, term, SubtypeSource::LMPrompt, std::min(1.0, entry.second / denom)});
  }
  return dedupeSubtypes(std::move(out), lex);
}

inline std::vector<SubtypeRecord> mlmSubtypes(const std::string& term, const MaskInfillProvider& provider, int k,
                                              const Lexicon& lex = {}) {
  if (k < 1) throw Error(ErrorCode::InvalidInput, "k must be >= 1");
  const std::vector<std::string> templates = {"<MASK> is a kind of " + term + ".",
                                              "<MASK> are a kind of " + Lexicon::plural(term) + "."};
  std::vector<SubtypeRecord> recs;
  for (const auto& t : templates) {
    std::vector<std::pair<std::string, double>> fills;
    try {
      fills = provider.infill(t, k);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::SubtypeProviderError, e.what());
    }
    for (auto& [fill, p] : fills) {
      auto f = text::toLower(text::trim(fill));
      if (!f.empty()) recs.push_back({f, term, SubtypeSource::MLMInfill, std::clamp(p, 0.0, 1.0)});
    }
  }
  auto out = dedupeSubtypes(std::move(recs), lex);
  if (out.size() > static_cast<std::size_t>(k)) out.resize(static_cast<std::size_t>(k));
  return out;
}

}  // namespace genex
