// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "genex/constraints.hpp"
#include "genex/error.hpp"
#include "genex/lm.hpp"

namespace genex {

struct DecoderConfig {
  int beamSize = 10;
  int maxLen = 50;
  int satisfactionTolerance = 3;
  int lookaheadSteps = 3;
  int topKPrompts = 10;   // k_p
  int topKOutputs = 10;   // k_r
  int perPromptCap = 2;
  std::uint64_t seed = 0;
  // 0 selects candidates deterministically by log-probability; a positive
  // value samples each hypothesis' candidates from the tempered softmax.
  double temperature = 0.0;
  // Symbols that end a hypothesis once emitted, in addition to EOS. The
  // symbol stays part of the output.
  std::vector<std::string> stopSymbols;

  void validate() const {
    auto positive = [](int v, const char* name) {
      if (v <= 0) throw Error(ErrorCode::ConfigurationError, std::string(name) + " must be positive");
    };
    positive(beamSize, "beamSize");
    positive(topKPrompts, "topKPrompts");
    positive(topKOutputs, "topKOutputs");
    positive(perPromptCap, "perPromptCap");
    if (maxLen < 0 || satisfactionTolerance < 0 || lookaheadSteps < 0) {
      throw Error(ErrorCode::ConfigurationError, "maxLen, satisfactionTolerance and lookaheadSteps must be >= 0");
    }
    if (perPromptCap > topKOutputs) throw Error(ErrorCode::ConfigurationError, "perPromptCap must be <= topKOutputs");
    if (temperature < 0) throw Error(ErrorCode::ConfigurationError, "temperature must be >= 0");
  }
};

// Incremental match state of one clause. Each active partial match is kept as
// (ngram index, words matched so far).
struct ClauseState {
  int clauseIndex = 0;
  bool matched = false;
  std::vector<std::pair<std::uint16_t, std::uint16_t>> partial;

  std::vector<int> partialMatchLengths() const {
    std::vector<int> out;
    for (auto [n, len] : partial) out.push_back(len);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  bool operator==(const ClauseState&) const = default;
};

struct Hypothesis {
  std::vector<TokenId> tokens;  // completion only, EOS included when emitted
  double logProb = 0.0;
  std::vector<ClauseState> clauseStates;
  int satisfiedCount = 0;
  bool violatedExclusion = false;
  bool finished = false;

  double normalizedLogProb() const {
    return tokens.empty() ? 0.0 : logProb / static_cast<double>(tokens.size());
  }

  // Completion words without the end-of-sequence symbol.
  std::vector<std::string> words(const Vocabulary& vocab) const {
    std::vector<std::string> out;
    for (auto t : tokens) {
      if (t != vocab.eos()) out.push_back(vocab.symbol(t));
    }
    return out;
  }

  bool allSatisfied(const ConstraintSet& cs) const {
    return satisfiedCount == static_cast<int>(cs.size());
  }

  std::vector<bool> satisfiedMask(const ConstraintSet& cs) const {
    std::vector<bool> out;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      bool m = clauseStates[i].matched;
      out.push_back(cs.clauses[i].mode == ClauseMode::Inclusion ? m : !m);
    }
    return out;
  }
};

// Called after every step with the live beam; used for instrumentation.
using BeamObserver = std::function<void(int step, const std::vector<Hypothesis>& beam)>;

namespace detail {

inline void validatePrompt(const LmScorer& lm, std::span<const TokenId> prompt) {
  if (lm.vocabulary().empty()) throw Error(ErrorCode::ScorerMismatch, "scorer has an empty vocabulary");
  for (auto t : prompt) {
    if (t >= lm.vocabulary().size()) throw Error(ErrorCode::ScorerMismatch, "prompt symbol outside vocabulary");
  }
}

// Per-call memo of next-token distributions keyed by full prefix.
class LogProbCache {
 public:
  LogProbCache(const LmScorer& lm, std::span<const TokenId> prompt) : lm_(lm), prompt_(prompt.begin(), prompt.end()) {}

  const std::vector<double>& next(const std::vector<TokenId>& completion) {
    std::string key;
    key.reserve(completion.size() * 4);
    for (auto t : completion) key.append(reinterpret_cast<const char*>(&t), sizeof(t));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::vector<TokenId> full = prompt_;
    full.insert(full.end(), completion.begin(), completion.end());
    auto lp = lm_.nextLogProbs(full);
    if (lp.size() != lm_.vocabulary().size()) {
      throw Error(ErrorCode::ScorerMismatch, "scorer returned a vector of the wrong size");
    }
    return cache_.emplace(std::move(key), std::move(lp)).first->second;
  }

 private:
  const LmScorer& lm_;
  std::vector<TokenId> prompt_;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

// Clause automaton over lowercase words.
class ClauseTracker {
 public:
  ClauseTracker(const ConstraintSet& cs, const Vocabulary& vocab, const std::vector<std::string>& stop_symbols = {})
      : cs_(cs), vocab_(vocab), stop_(vocab.size(), false) {
    for (const auto& s : stop_symbols) {
      if (auto id = vocab.find(s)) stop_[*id] = true;
    }
    lower_.reserve(vocab.size());
    for (const auto& s : vocab.symbols()) lower_.push_back(text::toLower(s));
    // Tokens that begin or continue some inclusion n-gram.
    std::unordered_map<std::string, TokenId> by_word;
    for (TokenId i = 0; i < vocab.size(); ++i) by_word.emplace(lower_[i], i);
    for (const auto& c : cs.clauses) {
      if (c.mode != ClauseMode::Inclusion) continue;
      for (const auto& n : c.ngrams) {
        for (const auto& w : n) {
          if (auto it = by_word.find(w); it != by_word.end()) inclusion_words_.push_back(it->second);
        }
      }
    }
    std::sort(inclusion_words_.begin(), inclusion_words_.end());
    inclusion_words_.erase(std::unique(inclusion_words_.begin(), inclusion_words_.end()), inclusion_words_.end());
  }

  Hypothesis initial() const {
    Hypothesis h;
    for (std::size_t i = 0; i < cs_.size(); ++i) h.clauseStates.push_back({static_cast<int>(i), false, {}});
    h.satisfiedCount = countSatisfied(h);
    return h;
  }

  Hypothesis extend(const Hypothesis& h, TokenId tok, double lp) const {
    Hypothesis out = h;
    out.tokens.push_back(tok);
    out.logProb += lp;
    if (tok == vocab_.eos()) {
      out.finished = true;
      return out;
    }
    const auto& w = lower_[tok];
    for (std::size_t ci = 0; ci < cs_.size(); ++ci) {
      auto& st = out.clauseStates[ci];
      if (st.matched) {
        st.partial.clear();
        continue;
      }
      const auto& ngrams = cs_.clauses[ci].ngrams;
      std::vector<std::pair<std::uint16_t, std::uint16_t>> next;
      auto advance = [&](std::uint16_t n, std::uint16_t len) {
        if (ngrams[n][len] != w) return;
        if (static_cast<std::size_t>(len + 1) == ngrams[n].size()) {
          st.matched = true;
        } else {
          next.emplace_back(n, static_cast<std::uint16_t>(len + 1));
        }
      };
      for (auto [n, len] : st.partial) advance(n, len);
      for (std::uint16_t n = 0; n < ngrams.size(); ++n) advance(n, 0);
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      st.partial = st.matched ? decltype(next){} : std::move(next);
      if (st.matched && cs_.clauses[ci].mode == ClauseMode::Exclusion) out.violatedExclusion = true;
    }
    out.satisfiedCount = countSatisfied(out);
    out.finished = stop_[tok];
    return out;
  }

  int countSatisfied(const Hypothesis& h) const {
    int n = 0;
    for (std::size_t i = 0; i < cs_.size(); ++i) {
      bool m = h.clauseStates[i].matched;
      n += (cs_.clauses[i].mode == ClauseMode::Inclusion ? m : !m) ? 1 : 0;
    }
    return n;
  }

  int matchedInclusions(const Hypothesis& h) const {
    int n = 0;
    for (std::size_t i = 0; i < cs_.size(); ++i) {
      if (cs_.clauses[i].mode == ClauseMode::Inclusion && h.clauseStates[i].matched) ++n;
    }
    return n;
  }

  bool hasOpenInclusion(const Hypothesis& h) const {
    for (std::size_t i = 0; i < cs_.size(); ++i) {
      if (cs_.clauses[i].mode == ClauseMode::Inclusion && !h.clauseStates[i].matched) return true;
    }
    return false;
  }

  const std::vector<TokenId>& inclusionWords() const { return inclusion_words_; }

 private:
  const ConstraintSet& cs_;
  const Vocabulary& vocab_;
  std::vector<bool> stop_;
  std::vector<std::string> lower_;
  std::vector<TokenId> inclusion_words_;
};

inline bool lexLess(const Vocabulary& v, const std::vector<TokenId>& a, const std::vector<TokenId>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      [&](TokenId x, TokenId y) { return v.symbol(x) < v.symbol(y); });
}

struct Scored {
  Hypothesis hyp;
  int estimate = 0;  // satisfiedCount + lookahead
};

}  // namespace detail

// Lexically constrained beam search. Each step expands every live hypothesis
// with its top-beamSize next symbols plus any symbol that starts or continues
// an open inclusion n-gram, drops hypotheses that hit an exclusion, prunes
// those more than satisfactionTolerance clauses behind the best, and refills
// the beam keyed by (satisfied + lookahead, length-normalized log-prob),
// taking the best hypothesis of every distinct satisfied-clause set first.
// Finished hypotheses are returned fully-satisfying first, then by raw
// log-probability, truncated to beamSize.
inline std::vector<Hypothesis> constrainedDecode(const LmScorer& lm, std::span<const TokenId> prompt,
                                                 const ConstraintSet& cs, const DecoderConfig& cfg,
                                                 const BeamObserver& observer = {}) {
  cfg.validate();
  if (prompt.empty()) throw Error(ErrorCode::InvalidInput, "prompt must be non-empty");
  detail::validatePrompt(lm, prompt);
  const auto& vocab = lm.vocabulary();
  detail::ClauseTracker tracker(cs, vocab, cfg.stopSymbols);
  detail::LogProbCache cache(lm, prompt);
  std::mt19937_64 rng(cfg.seed);

  std::vector<Hypothesis> finished;
  std::vector<Hypothesis> beam = {tracker.initial()};
  if (cfg.maxLen == 0) return beam;

  auto lookahead = [&](const Hypothesis& h) {
    if (cfg.lookaheadSteps == 0 || !tracker.hasOpenInclusion(h)) return 0;
    int before = tracker.matchedInclusions(h);
    Hypothesis cur = h;
    for (int s = 0; s < cfg.lookaheadSteps && static_cast<int>(cur.tokens.size()) < cfg.maxLen; ++s) {
      const auto& lp = cache.next(cur.tokens);
      auto best = static_cast<TokenId>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      if (lp[best] == kNegInf || best == vocab.eos()) break;
      cur = tracker.extend(cur, best, lp[best]);
      if (cur.violatedExclusion || cur.finished) break;
    }
    return tracker.matchedInclusions(cur) - before;
  };

  for (int step = 0; step < cfg.maxLen && !beam.empty(); ++step) {
    std::vector<detail::Scored> candidates;
    for (const auto& h : beam) {
      const auto& lp = cache.next(h.tokens);
      std::vector<TokenId> order;
      for (TokenId i = 0; i < lp.size(); ++i) {
        if (lp[i] != kNegInf) order.push_back(i);
      }
      std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.beamSize), order.size());
      if (cfg.temperature > 0) {
        // Gumbel top-k draws k symbols without replacement from softmax(lp / T).
        std::extreme_value_distribution<double> gumbel(0.0, 1.0);
        std::vector<double> key(lp.size(), kNegInf);
        for (auto i : order) key[i] = lp[i] / cfg.temperature + gumbel(rng);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                          [&](TokenId a, TokenId b) { return key[a] != key[b] ? key[a] > key[b] : a < b; });
      } else {
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                          [&](TokenId a, TokenId b) { return lp[a] != lp[b] ? lp[a] > lp[b] : a < b; });
      }
      order.resize(k);
      if (tracker.hasOpenInclusion(h)) {
        for (auto t : tracker.inclusionWords()) {
          if (lp[t] != kNegInf && std::find(order.begin(), order.end(), t) == order.end()) order.push_back(t);
        }
      }
      for (auto t : order) {
        auto next = tracker.extend(h, t, lp[t]);
        if (next.violatedExclusion) continue;
        if (next.finished || static_cast<int>(next.tokens.size()) >= cfg.maxLen) {
          next.finished = true;
          finished.push_back(std::move(next));
        } else {
          candidates.push_back({std::move(next), 0});
        }
      }
    }
    if (candidates.empty()) {
      beam.clear();
      break;
    }

    int best_sat = 0;
    for (const auto& c : candidates) best_sat = std::max(best_sat, c.hyp.satisfiedCount);
    std::erase_if(candidates, [&](const detail::Scored& c) {
      return c.hyp.satisfiedCount < best_sat - cfg.satisfactionTolerance;
    });
    for (auto& c : candidates) c.estimate = c.hyp.satisfiedCount + lookahead(c.hyp);

    std::sort(candidates.begin(), candidates.end(), [&](const detail::Scored& a, const detail::Scored& b) {
      if (a.estimate != b.estimate) return a.estimate > b.estimate;
      double na = a.hyp.normalizedLogProb(), nb = b.hyp.normalizedLogProb();
      if (na != nb) return na > nb;
      return detail::lexLess(vocab, a.hyp.tokens, b.hyp.tokens);
    });

    std::vector<bool> taken(candidates.size(), false);
    std::vector<Hypothesis> next_beam;
    std::map<std::vector<bool>, bool> groups_seen;
    for (std::size_t i = 0; i < candidates.size() && next_beam.size() < static_cast<std::size_t>(cfg.beamSize); ++i) {
      if (groups_seen.emplace(candidates[i].hyp.satisfiedMask(cs), true).second) {
        taken[i] = true;
        next_beam.push_back(candidates[i].hyp);
      }
    }
    for (std::size_t i = 0; i < candidates.size() && next_beam.size() < static_cast<std::size_t>(cfg.beamSize); ++i) {
      if (!taken[i]) next_beam.push_back(candidates[i].hyp);
    }
    beam = std::move(next_beam);
    if (observer) observer(step, beam);

    // Extensions only lower log-probability, so once beamSize fully
    // satisfying finished hypotheses all beat every live one the result is
    // fixed.
    std::vector<double> done;
    for (const auto& h : finished) {
      if (h.allSatisfied(cs)) done.push_back(h.logProb);
    }
    if (done.size() >= static_cast<std::size_t>(cfg.beamSize)) {
      std::nth_element(done.begin(), done.begin() + (cfg.beamSize - 1), done.end(), std::greater<double>());
      double bar = done[static_cast<std::size_t>(cfg.beamSize - 1)];
      bool live_can_win = std::any_of(beam.begin(), beam.end(), [&](const Hypothesis& h) { return h.logProb >= bar; });
      if (!live_can_win) break;
    }
  }

  std::sort(finished.begin(), finished.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    bool sa = a.allSatisfied(cs), sb = b.allSatisfied(cs);
    if (sa != sb) return sa;
    if (a.logProb != b.logProb) return a.logProb > b.logProb;
    return detail::lexLess(vocab, a.tokens, b.tokens);
  });
  if (finished.size() > static_cast<std::size_t>(cfg.beamSize)) finished.resize(static_cast<std::size_t>(cfg.beamSize));
  return finished;
}

// Unconstrained beam search: the constrained decoder with no clauses, where
// pruning, lookahead and grouping are no-ops.
inline std::vector<Hypothesis> beamDecode(const LmScorer& lm, std::span<const TokenId> prompt,
                                          const DecoderConfig& cfg, const BeamObserver& observer = {}) {
  static const ConstraintSet kNone;
  return constrainedDecode(lm, prompt, kNone, cfg, observer);
}

inline double perplexity(const LmScorer& lm, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw Error(ErrorCode::InvalidInput, "perplexity needs at least one token");
  detail::validatePrompt(lm, tokens);
  double sum = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto lp = lm.nextLogProbs(tokens.subspan(0, i));
    sum += lp.at(tokens[i]);
  }
  return std::exp(-sum / static_cast<double>(tokens.size()));
}

inline double perplexity(const LmScorer& lm, const std::vector<std::string>& words) {
  auto ids = lm.vocabulary().encode(words);
  return perplexity(lm, std::span<const TokenId>(ids));
}

}  // namespace genex
