// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "genex/corpus.hpp"
#include "genex/decode.hpp"
#include "genex/error.hpp"
#include "genex/lm.hpp"
#include "genex/templates.hpp"
#include "genex/text.hpp"

namespace genex {

enum class NliLabel { Entailment, Neutral, Contradiction };

inline std::string_view nliLabelName(NliLabel l) {
  switch (l) {
    case NliLabel::Entailment: return "entailment";
    case NliLabel::Neutral: return "neutral";
    case NliLabel::Contradiction: return "contradiction";
  }
  return "";
}

struct NliJudgment {
  double entail = 0.0;
  double neutral = 1.0;
  double contradict = 0.0;

  bool valid() const {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    double s = entail + neutral + contradict;
    return in01(entail) && in01(neutral) && in01(contradict) && std::abs(s - 1.0) <= 1e-3;
  }

  // Ties resolve in the order entailment, neutral, contradiction.
  NliLabel argmax() const {
    if (entail >= neutral && entail >= contradict) return NliLabel::Entailment;
    if (neutral >= contradict) return NliLabel::Neutral;
    return NliLabel::Contradiction;
  }

  double probability(NliLabel l) const {
    switch (l) {
      case NliLabel::Entailment: return entail;
      case NliLabel::Neutral: return neutral;
      case NliLabel::Contradiction: return contradict;
    }
    return 0.0;
  }

  bool operator==(const NliJudgment&) const = default;
};

inline NliLabel relevantLabel(ExemplarKind k) {
  return k == ExemplarKind::Exception ? NliLabel::Contradiction : NliLabel::Entailment;
}

class NliProvider {
 public:
  virtual ~NliProvider() = default;
  virtual NliJudgment judge(const std::string& premise, const std::string& hypothesis) const = 0;
};

// Deterministic stand-in for an NLI model. Exact (premise, hypothesis) pairs
// from the table win; otherwise a hypothesis carrying a negation cue that the
// premise lacks reads as contradiction, one sharing a content word with the
// premise as entailment, and anything else as neutral.
class HeuristicNli : public NliProvider {
 public:
  using Table = std::map<std::pair<std::string, std::string>, NliJudgment>;

  explicit HeuristicNli(Table table = {}) : table_(std::move(table)) {}

  // Tab-separated lines: premise, hypothesis, entail, neutral, contradict.
  static HeuristicNli load(const std::filesystem::path& path) {
    Table t;
    for (const auto& line : text::readDataLines(path)) {
      auto cols = text::split(line, '\t');
      if (cols.size() != 5) throw Error(ErrorCode::InvalidInput, path.string() + ": NLI table rows need 5 columns");
      NliJudgment j{std::stod(cols[2]), std::stod(cols[3]), std::stod(cols[4])};
      if (!j.valid()) throw Error(ErrorCode::InvalidInput, path.string() + ": judgment is not a distribution");
      t[{normalize(cols[0]), normalize(cols[1])}] = j;
    }
    return HeuristicNli(std::move(t));
  }

  NliJudgment judge(const std::string& premise, const std::string& hypothesis) const override {
    if (auto it = table_.find({normalize(premise), normalize(hypothesis)}); it != table_.end()) return it->second;
    auto pw = text::lowerWords(premise);
    auto hw = text::lowerWords(hypothesis);
    if (negated(hw) != negated(pw)) return {0.1, 0.2, 0.7};
    std::size_t shared = 0;
    for (const auto& w : hw) {
      if (w.size() > 3 && std::find(pw.begin(), pw.end(), w) != pw.end()) ++shared;
    }
    if (shared > 0) return {0.6, 0.3, 0.1};
    return {0.2, 0.6, 0.2};
  }

 private:
  static std::string normalize(std::string_view s) { return text::normalizeForUniqueness(s); }

  static bool negated(const std::vector<std::string>& ws) {
    static const std::set<std::string> kCues = {"not", "cannot", "never", "no", "n't", "don't", "doesn't", "can't"};
    return std::any_of(ws.begin(), ws.end(), [](const std::string& w) { return kCues.count(w) != 0; });
  }

  Table table_;
};

// ---------------------------------------------------------------------------
// Prompt selection

// Number of prompts kept out of n: k_p when at least k_p exist, otherwise
// half rounded up.
inline std::size_t promptsToKeep(std::size_t n, int k_p) {
  auto kp = static_cast<std::size_t>(k_p);
  return n >= kp ? kp : (n + 1) / 2;
}

// Words the scorer sees for a prompt or exemplar.
inline std::vector<TokenId> encodeText(const Vocabulary& vocab, std::string_view s) {
  return vocab.encode(text::lowerWords(s));
}

// Orders prompts by their perplexity field (ascending, then id) and keeps the
// promptsToKeep() best.
inline std::vector<Prompt> selectScoredPrompts(std::vector<Prompt> prompts, int k_p) {
  std::sort(prompts.begin(), prompts.end(), [](const Prompt& a, const Prompt& b) {
    if (a.perplexity != b.perplexity) return a.perplexity < b.perplexity;
    return a.id < b.id;
  });
  prompts.resize(promptsToKeep(prompts.size(), k_p));
  return prompts;
}

inline std::vector<Prompt> selectPrompts(std::vector<Prompt> prompts, const LmScorer& lm, const DecoderConfig& cfg) {
  for (auto& p : prompts) {
    auto ids = encodeText(lm.vocabulary(), p.text);
    p.perplexity = perplexity(lm, std::span<const TokenId>(ids));
  }
  return selectScoredPrompts(std::move(prompts), cfg.topKPrompts);
}

// ---------------------------------------------------------------------------
// Output ranking

struct RankInput {
  std::string text;
  std::string promptId;
  double perplexity = 0.0;
  double nliProbability = 0.0;  // probability of the kind's relevant label
  NliJudgment nli;
};

struct RankedOutput {
  std::string text;
  std::string promptId;
  std::string templateId;
  int pplRank = 1;
  int nliRank = 1;
  double combined = 1.0;
  double perplexity = 0.0;
  NliJudgment nli;
};

// 1-based dense ranks: equal values share a rank and ranks have no gaps.
inline std::vector<int> denseRanks(const std::vector<double>& values, bool ascending) {
  std::vector<double> distinct = values;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (!ascending) std::reverse(distinct.begin(), distinct.end());
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values) {
    auto it = ascending ? std::lower_bound(distinct.begin(), distinct.end(), v)
                        : std::lower_bound(distinct.begin(), distinct.end(), v, std::greater<double>());
    out.push_back(static_cast<int>(it - distinct.begin()) + 1);
  }
  return out;
}

// Ranks one (generic, template) group from precomputed scores and applies the
// k_r and per-prompt caps. Order: combined rank, then pplRank, then text,
// then prompt id.
inline std::vector<RankedOutput> rankScored(const std::vector<RankInput>& items, const std::string& template_id,
                                            const DecoderConfig& cfg) {
  std::vector<double> ppl, nli;
  for (const auto& it : items) {
    if (!std::isfinite(it.perplexity)) throw Error(ErrorCode::RankingError, "non-finite perplexity for '" + it.text + "'");
    ppl.push_back(it.perplexity);
    nli.push_back(it.nliProbability);
  }
  auto pr = denseRanks(ppl, true);
  auto nr = denseRanks(nli, false);
  std::vector<RankedOutput> all;
  for (std::size_t i = 0; i < items.size(); ++i) {
    RankedOutput r;
    r.text = items[i].text;
    r.promptId = items[i].promptId;
    r.templateId = template_id;
    r.pplRank = pr[i];
    r.nliRank = nr[i];
    r.combined = (pr[i] + nr[i]) / 2.0;
    r.perplexity = items[i].perplexity;
    r.nli = items[i].nli;
    all.push_back(std::move(r));
  }
  std::sort(all.begin(), all.end(), [](const RankedOutput& a, const RankedOutput& b) {
    if (a.combined != b.combined) return a.combined < b.combined;
    if (a.pplRank != b.pplRank) return a.pplRank < b.pplRank;
    if (a.text != b.text) return a.text < b.text;
    return a.promptId < b.promptId;
  });
  std::vector<RankedOutput> out;
  std::map<std::string, int> per_prompt;
  for (auto& r : all) {
    if (out.size() >= static_cast<std::size_t>(cfg.topKOutputs)) break;
    if (++per_prompt[r.promptId] > cfg.perPromptCap) continue;
    out.push_back(std::move(r));
  }
  return out;
}

struct DecodedOutput {
  std::string text;
  std::string promptId;
};

inline std::vector<RankedOutput> rankOutputs(const std::vector<DecodedOutput>& outs, const std::string& template_id,
                                             const LmScorer& lm, const NliProvider& nli, const Generic& generic,
                                             ExemplarKind kind, const DecoderConfig& cfg) {
  std::vector<RankInput> items;
  for (const auto& o : outs) {
    RankInput in;
    in.text = o.text;
    in.promptId = o.promptId;
    auto ids = encodeText(lm.vocabulary(), o.text);
    in.perplexity = perplexity(lm, std::span<const TokenId>(ids));
    try {
      in.nli = nli.judge(generic.text, o.text);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::RankingError, generic.id + "/" + template_id + ": NLI provider failed: " + e.what());
    }
    if (!in.nli.valid()) throw Error(ErrorCode::RankingError, generic.id + "/" + template_id + ": invalid NLI judgment");
    in.nliProbability = in.nli.probability(relevantLabel(kind));
    items.push_back(std::move(in));
  }
  return rankScored(items, template_id, cfg);
}

// ---------------------------------------------------------------------------
// NLI label filter

enum class NliFilterMode { None, NliSim, NliNeu, NliSimPlusNeu };

inline std::string_view nliFilterModeName(NliFilterMode m) {
  switch (m) {
    case NliFilterMode::None: return "none";
    case NliFilterMode::NliSim: return "nli-sim";
    case NliFilterMode::NliNeu: return "nli-neu";
    case NliFilterMode::NliSimPlusNeu: return "nli-sim+neu";
  }
  return "";
}

inline NliFilterMode parseNliFilterMode(std::string_view s) {
  auto k = text::enumKey(s);
  if (k == "none" || k.empty()) return NliFilterMode::None;
  if (k == "nlisim" || k == "sim") return NliFilterMode::NliSim;
  if (k == "nlineu" || k == "neu") return NliFilterMode::NliNeu;
  if (k == "nlisim+neu" || k == "nlisimplusneu" || k == "sim+neu") return NliFilterMode::NliSimPlusNeu;
  throw Error(ErrorCode::ConfigurationError, "unknown NLI filter mode '" + std::string(s) + "'");
}

inline bool nliKeeps(const NliJudgment& j, ExemplarKind kind, NliFilterMode mode) {
  auto label = j.argmax();
  bool sim = label == relevantLabel(kind);
  bool neu = label == NliLabel::Neutral;
  switch (mode) {
    case NliFilterMode::None: return true;
    case NliFilterMode::NliSim: return sim;
    case NliFilterMode::NliNeu: return neu;
    case NliFilterMode::NliSimPlusNeu: return sim || neu;
  }
  return false;
}

template <typename T>
std::vector<std::pair<T, NliJudgment>> nliFilter(const std::vector<std::pair<T, NliJudgment>>& items, ExemplarKind kind,
                                                 NliFilterMode mode) {
  std::vector<std::pair<T, NliJudgment>> out;
  for (const auto& it : items) {
    if (nliKeeps(it.second, kind, mode)) out.push_back(it);
  }
  return out;
}

}  // namespace genex
