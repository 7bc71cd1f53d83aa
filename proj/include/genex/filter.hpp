// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "genex/error.hpp"
#include "genex/rank.hpp"
#include "genex/templates.hpp"
#include "genex/text.hpp"

namespace genex {

enum class DiscriminatorKind { Viability, ValidityInstantiation, ValidityException };

inline std::string_view discriminatorKindName(DiscriminatorKind k) {
  switch (k) {
    case DiscriminatorKind::Viability: return "viability";
    case DiscriminatorKind::ValidityInstantiation: return "validity-instantiation";
    case DiscriminatorKind::ValidityException: return "validity-exception";
  }
  return "";
}

inline DiscriminatorKind parseDiscriminatorKind(std::string_view s) {
  auto k = text::enumKey(s);
  if (k == "viability") return DiscriminatorKind::Viability;
  if (k == "validityinstantiation") return DiscriminatorKind::ValidityInstantiation;
  if (k == "validityexception") return DiscriminatorKind::ValidityException;
  throw Error(ErrorCode::ConfigurationError, "unknown discriminator kind '" + std::string(s) + "'");
}

inline DiscriminatorKind validityKindFor(ExemplarKind k) {
  return k == ExemplarKind::Exception ? DiscriminatorKind::ValidityException : DiscriminatorKind::ValidityInstantiation;
}

struct DiscriminatorScore {
  double probability = 0.0;
  std::string modelId;
  DiscriminatorKind kind = DiscriminatorKind::Viability;

  bool operator==(const DiscriminatorScore&) const = default;
};

enum class ExemplarStatus { Candidate, Viable, SelectedValid, Rejected };

enum class RejectStage { Nli, Viability, ScorerUnavailable, Validity };

inline std::string_view exemplarStatusName(ExemplarStatus s) {
  switch (s) {
    case ExemplarStatus::Candidate: return "candidate";
    case ExemplarStatus::Viable: return "viable";
    case ExemplarStatus::SelectedValid: return "selected-valid";
    case ExemplarStatus::Rejected: return "rejected";
  }
  return "";
}

inline std::string_view rejectStageName(RejectStage s) {
  switch (s) {
    case RejectStage::Nli: return "nli";
    case RejectStage::Viability: return "viability";
    case RejectStage::ScorerUnavailable: return "scorer-unavailable";
    case RejectStage::Validity: return "validity";
  }
  return "";
}

struct Exemplar {
  std::string id;
  std::string genericId;
  std::string genericText;
  std::string templateId;
  std::string promptId;
  ExemplarKind kind = ExemplarKind::Instantiation;
  std::string text;
  double combinedRank = 0.0;
  double perplexity = 0.0;
  NliJudgment nli;
  std::optional<DiscriminatorScore> viability;
  std::optional<DiscriminatorScore> validity;
  ExemplarStatus status = ExemplarStatus::Candidate;
  std::optional<RejectStage> rejectedAt;
  // Set when a scorer outage was passed through under failOpen.
  bool viabilityUnscored = false;

  void reject(RejectStage stage) {
    status = ExemplarStatus::Rejected;
    rejectedAt = stage;
  }
};

class DiscriminatorProvider {
 public:
  virtual ~DiscriminatorProvider() = default;
  virtual DiscriminatorKind kind() const = 0;
  virtual std::string modelId() const = 0;
  virtual double score(const std::string& generic, const std::string& exemplar) const = 0;
};

// Keyword-rule stand-in for a trained discriminator. The first rule whose
// phrase occurs in the lowercased exemplar decides; otherwise the default
// applies. A non-zero jitter adds a deterministic per-text offset in
// [-jitter, +jitter] so otherwise equal scores stay distinguishable.
class RuleDiscriminator : public DiscriminatorProvider {
 public:
  struct Rule {
    std::string phrase;
    double probability = 0.0;
  };

  RuleDiscriminator(DiscriminatorKind kind, std::string model_id, std::vector<Rule> rules, double default_probability,
                    double jitter = 0.0)
      : kind_(kind),
        model_id_(std::move(model_id)),
        rules_(std::move(rules)),
        default_(default_probability),
        jitter_(jitter) {
    for (auto& r : rules_) r.phrase = text::toLower(r.phrase);
  }

  static RuleDiscriminator constant(DiscriminatorKind kind, double p) {
    return RuleDiscriminator(kind, "stub-constant", {}, p);
  }

  // Lines "phrase<TAB>probability"; the phrase "*" sets the default and
  // "~jitter" the jitter amplitude.
  static RuleDiscriminator load(DiscriminatorKind kind, const std::filesystem::path& path) {
    std::vector<Rule> rules;
    double def = 0.5, jitter = 0.0;
    for (const auto& line : text::readDataLines(path)) {
      auto cols = text::split(line, '\t');
      if (cols.size() != 2) throw Error(ErrorCode::InvalidInput, path.string() + ": rule rows need 2 columns");
      double v = std::stod(cols[1]);
      auto phrase = text::trim(cols[0]);
      if (phrase == "*") {
        def = v;
      } else if (phrase == "~jitter") {
        jitter = v;
      } else {
        rules.push_back({phrase, v});
      }
    }
    return RuleDiscriminator(kind, "stub-rules:" + path.filename().string(), std::move(rules), def, jitter);
  }

  DiscriminatorKind kind() const override { return kind_; }
  std::string modelId() const override { return model_id_; }

  double score(const std::string&, const std::string& exemplar) const override {
    auto padded = " " + text::join(text::lowerWords(exemplar), " ") + " ";
    double p = default_;
    for (const auto& r : rules_) {
      if (padded.find(" " + r.phrase + " ") != std::string::npos) {
        p = r.probability;
        break;
      }
    }
    if (jitter_ > 0) {
      auto h = text::fnv1a64(text::normalizeForUniqueness(exemplar));
      p += jitter_ * (static_cast<double>(h % 20001) / 10000.0 - 1.0);
    }
    return std::clamp(p, 0.0, 1.0);
  }

 private:
  DiscriminatorKind kind_;
  std::string model_id_;
  std::vector<Rule> rules_;
  double default_;
  double jitter_;
};

// Scores every Candidate and marks it Viable (probability >= threshold) or
// Rejected(Viability); other exemplars pass through untouched. On scorer
// failure the exemplar is Rejected(ScorerUnavailable), or with fail_open it is
// passed as Viable with viabilityUnscored set. Input order is preserved.
inline std::vector<Exemplar> viabilityFilter(std::vector<Exemplar> exs, const DiscriminatorProvider& scorer,
                                             double threshold = 0.5, bool fail_open = false) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorCode::ConfigurationError, "threshold must be in [0,1]");
  if (scorer.kind() != DiscriminatorKind::Viability) {
    throw Error(ErrorCode::ConfigurationError, "viability filter needs a viability discriminator");
  }
  for (auto& e : exs) {
    if (e.status != ExemplarStatus::Candidate) continue;
    double p = 0.0;
    try {
      p = scorer.score(e.genericText, e.text);
      if (!std::isfinite(p)) throw Error(ErrorCode::ScorerUnavailable, "non-finite score");
    } catch (const std::exception&) {
      if (fail_open) {
        e.status = ExemplarStatus::Viable;
        e.viabilityUnscored = true;
      } else {
        e.reject(RejectStage::ScorerUnavailable);
      }
      continue;
    }
    e.viability = DiscriminatorScore{p, scorer.modelId(), DiscriminatorKind::Viability};
    if (p >= threshold) {
      e.status = ExemplarStatus::Viable;
    } else {
      e.reject(RejectStage::Viability);
    }
  }
  return exs;
}

struct ValidityScorers {
  const DiscriminatorProvider* instantiation = nullptr;
  const DiscriminatorProvider* exception = nullptr;

  const DiscriminatorProvider& forKind(ExemplarKind k) const {
    const auto* p = k == ExemplarKind::Exception ? exception : instantiation;
    if (!p) {
      throw Error(ErrorCode::ConfigurationError,
                  "no validity discriminator for " + std::string(exemplarKindName(k)) + " exemplars");
    }
    if (p->kind() != validityKindFor(k)) {
      throw Error(ErrorCode::ConfigurationError, std::string(discriminatorKindName(p->kind())) +
                                                     " discriminator cannot score " +
                                                     std::string(exemplarKindName(k)) + " exemplars");
    }
    return *p;
  }
};

// Scores Viable exemplars with the kind-matched validity discriminator and,
// per (generic, kind), marks the top_n with probability >= threshold as
// SelectedValid (probability descending, then id); the rest become
// Rejected(Validity). Other exemplars pass through. Input order is preserved.
inline std::vector<Exemplar> validitySelect(std::vector<Exemplar> exs, const ValidityScorers& scorers, int top_n = 10,
                                            double threshold = 0.5) {
  if (top_n < 1) throw Error(ErrorCode::ConfigurationError, "topN must be >= 1");
  std::map<std::pair<std::string, ExemplarKind>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < exs.size(); ++i) {
    auto& e = exs[i];
    if (e.status != ExemplarStatus::Viable) continue;
    const auto& scorer = scorers.forKind(e.kind);
    double p = scorer.score(e.genericText, e.text);
    if (!std::isfinite(p)) throw Error(ErrorCode::ScorerUnavailable, e.id + ": non-finite validity score");
    e.validity = DiscriminatorScore{p, scorer.modelId(), scorer.kind()};
    groups[{e.genericId, e.kind}].push_back(i);
  }
  for (auto& [key, idx] : groups) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      double pa = exs[a].validity->probability, pb = exs[b].validity->probability;
      if (pa != pb) return pa > pb;
      return exs[a].id < exs[b].id;
    });
    int taken = 0;
    for (auto i : idx) {
      auto& e = exs[i];
      if (taken < top_n && e.validity->probability >= threshold) {
        e.status = ExemplarStatus::SelectedValid;
        ++taken;
      } else {
        e.reject(RejectStage::Validity);
      }
    }
  }
  return exs;
}

// ---------------------------------------------------------------------------
// Persistence: JSON lines with a leading header record.

inline constexpr int kExemplarSchemaVersion = 1;

inline nlohmann::json toJson(const NliJudgment& j) {
  return {{"entail", j.entail}, {"neutral", j.neutral}, {"contradict", j.contradict}};
}

inline NliJudgment nliFromJson(const nlohmann::json& j) {
  return {j.at("entail").get<double>(), j.at("neutral").get<double>(), j.at("contradict").get<double>()};
}

inline nlohmann::json toJson(const DiscriminatorScore& s) {
  return {{"probability", s.probability}, {"modelId", s.modelId}, {"kind", discriminatorKindName(s.kind)}};
}

inline DiscriminatorScore scoreFromJson(const nlohmann::json& j) {
  return {j.at("probability").get<double>(), j.at("modelId").get<std::string>(),
          parseDiscriminatorKind(j.at("kind").get<std::string>())};
}

inline nlohmann::json toJson(const Exemplar& e) {
  nlohmann::json j = {{"id", e.id},
                      {"genericId", e.genericId},
                      {"genericText", e.genericText},
                      {"templateId", e.templateId},
                      {"promptId", e.promptId},
                      {"kind", exemplarKindName(e.kind)},
                      {"text", e.text},
                      {"combinedRank", e.combinedRank},
                      {"perplexity", e.perplexity},
                      {"nli", toJson(e.nli)},
                      {"status", exemplarStatusName(e.status)}};
  j["viability"] = e.viability ? toJson(*e.viability) : nlohmann::json(nullptr);
  j["validity"] = e.validity ? toJson(*e.validity) : nlohmann::json(nullptr);
  j["rejectedAt"] = e.rejectedAt ? nlohmann::json(rejectStageName(*e.rejectedAt)) : nlohmann::json(nullptr);
  if (e.viabilityUnscored) j["viabilityUnscored"] = true;
  return j;
}

inline ExemplarStatus parseExemplarStatus(std::string_view s) {
  for (auto st : {ExemplarStatus::Candidate, ExemplarStatus::Viable, ExemplarStatus::SelectedValid,
                  ExemplarStatus::Rejected}) {
    if (exemplarStatusName(st) == s) return st;
  }
  throw Error(ErrorCode::InvalidInput, "unknown exemplar status '" + std::string(s) + "'");
}

inline RejectStage parseRejectStage(std::string_view s) {
  for (auto st : {RejectStage::Nli, RejectStage::Viability, RejectStage::ScorerUnavailable, RejectStage::Validity}) {
    if (rejectStageName(st) == s) return st;
  }
  throw Error(ErrorCode::InvalidInput, "unknown reject stage '" + std::string(s) + "'");
}

inline Exemplar exemplarFromJson(const nlohmann::json& j) {
  Exemplar e;
  e.id = j.at("id").get<std::string>();
  e.genericId = j.at("genericId").get<std::string>();
  e.genericText = j.value("genericText", "");
  e.templateId = j.at("templateId").get<std::string>();
  e.promptId = j.value("promptId", "");
  e.kind = parseExemplarKind(j.at("kind").get<std::string>());
  e.text = j.at("text").get<std::string>();
  e.combinedRank = j.value("combinedRank", 0.0);
  e.perplexity = j.value("perplexity", 0.0);
  if (j.contains("nli") && !j.at("nli").is_null()) e.nli = nliFromJson(j.at("nli"));
  if (j.contains("viability") && !j.at("viability").is_null()) e.viability = scoreFromJson(j.at("viability"));
  if (j.contains("validity") && !j.at("validity").is_null()) e.validity = scoreFromJson(j.at("validity"));
  e.status = parseExemplarStatus(j.value("status", "candidate"));
  if (j.contains("rejectedAt") && !j.at("rejectedAt").is_null()) {
    e.rejectedAt = parseRejectStage(j.at("rejectedAt").get<std::string>());
  }
  e.viabilityUnscored = j.value("viabilityUnscored", false);
  return e;
}

inline nlohmann::json exemplarHeader() {
  return {{"schema", "genex.exemplars"}, {"version", kExemplarSchemaVersion}};
}

inline std::string exemplarsToJsonl(const std::vector<Exemplar>& exs) {
  std::string out = exemplarHeader().dump() + "\n";
  for (const auto& e : exs) out += toJson(e).dump() + "\n";
  return out;
}

inline std::vector<Exemplar> exemplarsFromJsonl(std::string_view content, const std::string& origin = "exemplars") {
  std::vector<Exemplar> out;
  bool header = false;
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (!header) {
        if (j.value("schema", "") != "genex.exemplars") {
          throw Error(ErrorCode::InvalidInput, origin + ": missing exemplar header record");
        }
        if (j.value("version", 0) != kExemplarSchemaVersion) {
          throw Error(ErrorCode::InvalidInput, origin + ": unsupported exemplar schema version");
        }
        header = true;
        continue;
      }
      out.push_back(exemplarFromJson(j));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidInput, origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header) throw Error(ErrorCode::InvalidInput, origin + ": empty exemplar file");
  return out;
}

inline std::vector<Exemplar> loadExemplars(const std::filesystem::path& path) {
  return exemplarsFromJsonl(text::readFile(path), path.string());
}

}  // namespace genex
