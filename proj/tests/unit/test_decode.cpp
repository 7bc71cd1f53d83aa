// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "genex/decode.hpp"
#include "support/oracles.hpp"

namespace genex {
namespace {

using testing::bruteForceBest;
using testing::completionCount;
using testing::letters;
using testing::naiveSatisfies;
using testing::RandomScorer;

std::vector<std::string> letterWords(const Vocabulary& v) {
  std::vector<std::string> out;
  for (const auto& s : v.symbols()) {
    if (s != "</s>") out.push_back(s);
  }
  return out;
}

ConstraintSet clauses(std::initializer_list<std::pair<std::set<std::string>, ClauseMode>> cs) {
  ConstraintSet out;
  for (const auto& [p, m] : cs) out.clauses.push_back(ConstraintClause::fromPhrases(p, m));
  return out;
}

// penguins cannot -> fly (0.5) | swim (0.3) | . (0.1) | </s> (0.1); then "." and EOS.
TableScorer penguinScorer() {
  return TableScorer::fromJson(nlohmann::json::parse(R"({
    "format": "genex-toy-lm", "version": 1,
    "vocabulary": ["penguins", "cannot", "fly", "swim", ".", "</s>"], "eos": "</s>",
    "context": "exact",
    "table": {
      "penguins cannot": {"fly": 0.5, "swim": 0.3, ".": 0.1, "</s>": 0.1, "penguins": 0, "cannot": 0},
      "penguins cannot fly": {".": 0.9, "</s>": 0.1, "penguins": 0, "cannot": 0, "fly": 0, "swim": 0},
      "penguins cannot swim": {".": 0.9, "</s>": 0.1, "penguins": 0, "cannot": 0, "fly": 0, "swim": 0},
      "penguins cannot fly .": {"</s>": 1.0},
      "penguins cannot swim .": {"</s>": 1.0},
      "penguins cannot .": {"</s>": 1.0}
    }})"));
}

std::vector<TokenId> encode(const LmScorer& lm, const std::string& s) {
  return lm.vocabulary().encode(text::splitWhitespace(s));
}

DecoderConfig smallConfig(int beam, int max_len) {
  DecoderConfig cfg;
  cfg.beamSize = beam;
  cfg.maxLen = max_len;
  return cfg;
}

TEST(ConstrainedDecode, InclusionSelectsSecondLikeliestContinuation) {
  auto lm = penguinScorer();
  auto prompt = encode(lm, "penguins cannot");
  auto free = beamDecode(lm, prompt, smallConfig(4, 4));
  ASSERT_FALSE(free.empty());
  EXPECT_EQ(free[0].words(lm.vocabulary()), (std::vector<std::string>{"fly", "."}));

  auto cs = clauses({{{"swim"}, ClauseMode::Inclusion}});
  auto out = constrainedDecode(lm, prompt, cs, smallConfig(4, 4));
  ASSERT_FALSE(out.empty());
  EXPECT_EQ(out[0].words(lm.vocabulary()), (std::vector<std::string>{"swim", "."}));
  EXPECT_TRUE(out[0].allSatisfied(cs));
  auto oracle = bruteForceBest(lm, prompt, cs, 4);
  ASSERT_TRUE(oracle);
  EXPECT_EQ(out[0].tokens, oracle->tokens);
  EXPECT_NEAR(out[0].logProb, std::log(0.3 * 0.9), 1e-12);
}

TEST(ConstrainedDecode, EmptyConstraintSetEqualsBeamDecode) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RandomScorer lm(letters(5), seed);
    std::vector<TokenId> prompt = {0};
    auto cfg = smallConfig(3, 5);
    auto a = constrainedDecode(lm, prompt, ConstraintSet{}, cfg);
    auto b = beamDecode(lm, prompt, cfg);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].tokens, b[i].tokens);
      EXPECT_EQ(a[i].logProb, b[i].logProb);
    }
  }
}

TEST(ConstrainedDecode, AllContinuationsViolatingExclusionGiveNothing) {
  auto lm = TableScorer::fromJson(nlohmann::json::parse(R"({
    "format": "genex-toy-lm", "vocabulary": ["birds", "fly", "</s>"], "eos": "</s>",
    "table": {"birds": {"fly": 1.0, "birds": 0, "</s>": 0}}})"));
  auto cs = clauses({{{"fly"}, ClauseMode::Exclusion}});
  EXPECT_TRUE(constrainedDecode(lm, encode(lm, "birds"), cs, smallConfig(5, 4)).empty());
}

TEST(ConstrainedDecode, DeterministicScorerGivesForcedSequence) {
  auto lm = TableScorer::fromJson(nlohmann::json::parse(R"({
    "format": "genex-toy-lm", "vocabulary": ["a", "b", "c", "</s>"], "eos": "</s>",
    "table": {"a": {"b": 1.0}, "a b": {"c": 1.0}, "a b c": {"</s>": 1.0}}})"));
  auto out = beamDecode(lm, encode(lm, "a"), smallConfig(4, 10));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].words(lm.vocabulary()), (std::vector<std::string>{"b", "c"}));
  EXPECT_DOUBLE_EQ(out[0].logProb, 0.0);
}

TEST(ConstrainedDecode, MaxLenZeroGivesEmptyCompletion) {
  RandomScorer lm(letters(4), 3);
  std::vector<TokenId> prompt = {0};
  auto out = beamDecode(lm, prompt, smallConfig(2, 0));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].tokens.empty());
  EXPECT_EQ(out[0].logProb, 0.0);
}

TEST(ConstrainedDecode, InputErrors) {
  RandomScorer lm(letters(4), 3);
  std::vector<TokenId> empty, bad = {99};
  EXPECT_THROW(beamDecode(lm, empty, smallConfig(2, 3)), Error);
  try {
    beamDecode(lm, bad, smallConfig(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ScorerMismatch);
  }
  std::vector<TokenId> prompt = {0};
  auto cfg = smallConfig(0, 3);
  EXPECT_THROW(beamDecode(lm, prompt, cfg), Error);
  cfg = smallConfig(2, 3);
  cfg.perPromptCap = 20;
  EXPECT_THROW(beamDecode(lm, prompt, cfg), Error);
}

TEST(ConstrainedDecode, MatchesExhaustiveSearchWhenBeamCoversEverything) {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int inst = 0; inst < 25; ++inst) {
    std::size_t v = 3 + inst % 4;
    int max_len = 1 + inst % 4;
    auto vocab = letters(v);
    RandomScorer lm(vocab, 100 + static_cast<std::uint64_t>(inst), 0.1);
    auto cs = testing::randomConstraints(rng, letterWords(vocab), 3);
    auto cfg = smallConfig(static_cast<int>(completionCount(v, max_len)), max_len);
    std::vector<TokenId> prompt = {0};
    auto out = constrainedDecode(lm, prompt, cs, cfg);
    auto oracle = bruteForceBest(lm, prompt, cs, max_len);
    if (oracle) {
      ASSERT_FALSE(out.empty()) << inst;
      EXPECT_TRUE(out[0].allSatisfied(cs)) << inst;
      EXPECT_EQ(out[0].tokens, oracle->tokens) << inst;
      EXPECT_NEAR(out[0].logProb, oracle->logProb, 1e-9) << inst;
      ++checked;
    } else {
      EXPECT_TRUE(out.empty() || !out[0].allSatisfied(cs)) << inst;
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(ConstrainedDecode, SatisfiedCountMatchesRecount) {
  std::mt19937_64 rng(5);
  for (int inst = 0; inst < 30; ++inst) {
    auto vocab = letters(6);
    RandomScorer lm(vocab, static_cast<std::uint64_t>(inst));
    auto cs = testing::randomConstraints(rng, letterWords(vocab), 5);
    auto check = [&](const Hypothesis& h) {
      auto mask = naiveSatisfies(cs, h.words(vocab));
      EXPECT_EQ(h.satisfiedCount, std::count(mask.begin(), mask.end(), true));
      EXPECT_EQ(h.satisfiedMask(cs), mask);
    };
    std::vector<TokenId> prompt = {1};
    auto out = constrainedDecode(lm, prompt, cs, smallConfig(4, 6), [&](int, const std::vector<Hypothesis>& beam) {
      for (const auto& h : beam) check(h);
    });
    for (const auto& h : out) check(h);
  }
}

TEST(ConstrainedDecode, TolerancePrunesLaggingHypotheses) {
  std::mt19937_64 rng(9);
  for (int tolerance : {0, 1, 3}) {
    for (int inst = 0; inst < 20; ++inst) {
      auto vocab = letters(7);
      RandomScorer lm(vocab, 500 + static_cast<std::uint64_t>(inst));
      auto cs = testing::randomConstraints(rng, letterWords(vocab), 6, 0.0);
      auto cfg = smallConfig(6, 6);
      cfg.satisfactionTolerance = tolerance;
      std::vector<TokenId> prompt = {0};
      constrainedDecode(lm, prompt, cs, cfg, [&](int step, const std::vector<Hypothesis>& beam) {
        int best = 0;
        for (const auto& h : beam) best = std::max(best, h.satisfiedCount);
        for (const auto& h : beam) {
          EXPECT_GE(h.satisfiedCount, best - tolerance) << "step " << step;
          EXPECT_FALSE(h.violatedExclusion);
        }
      });
    }
  }
}

TEST(ConstrainedDecode, AddingInclusionNeverRaisesTopProbability) {
  std::mt19937_64 rng(31);
  for (int inst = 0; inst < 15; ++inst) {
    auto vocab = letters(5);
    RandomScorer lm(vocab, 900 + static_cast<std::uint64_t>(inst));
    auto words = letterWords(vocab);
    auto cs = testing::randomConstraints(rng, words, 2, 0.0);
    auto more = cs;
    more.clauses.push_back(ConstraintClause::fromPhrases({words[static_cast<std::size_t>(inst) % words.size()]},
                                                         ClauseMode::Inclusion));
    auto cfg = smallConfig(static_cast<int>(completionCount(5, 3)), 3);
    std::vector<TokenId> prompt = {0};
    auto a = constrainedDecode(lm, prompt, cs, cfg);
    auto b = constrainedDecode(lm, prompt, more, cfg);
    if (!b.empty() && b[0].allSatisfied(more)) {
      ASSERT_FALSE(a.empty());
      EXPECT_LE(b[0].logProb, a[0].logProb + 1e-12);
    }
  }
}

TEST(ConstrainedDecode, DeterministicAcrossCalls) {
  std::mt19937_64 rng(77);
  auto vocab = letters(8);
  RandomScorer lm(vocab, 4242);
  auto cs = testing::randomConstraints(rng, letterWords(vocab), 3);
  std::vector<TokenId> prompt = {2, 3};
  for (double temperature : {0.0, 1.0}) {
    auto cfg = smallConfig(5, 6);
    cfg.temperature = temperature;
    cfg.seed = 19;
    auto a = constrainedDecode(lm, prompt, cs, cfg);
    auto b = constrainedDecode(lm, prompt, cs, cfg);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].tokens, b[i].tokens);
      EXPECT_EQ(a[i].logProb, b[i].logProb);
    }
  }
}

TEST(ConstrainedDecode, StopSymbolEndsHypothesis) {
  auto lm = penguinScorer();
  auto cfg = smallConfig(4, 6);
  cfg.stopSymbols = {"."};
  for (const auto& h : beamDecode(lm, encode(lm, "penguins cannot"), cfg)) {
    auto ws = h.words(lm.vocabulary());
    auto dot = std::find(ws.begin(), ws.end(), ".");
    if (dot != ws.end()) {
      EXPECT_EQ(dot + 1, ws.end());
      EXPECT_NE(h.tokens.back(), lm.vocabulary().eos());
    }
  }
}

TEST(ClauseState, PartialMatchesTrackOpenNgrams) {
  auto lm = TableScorer::fromJson(nlohmann::json::parse(R"({
    "format": "genex-toy-lm", "vocabulary": ["seismic", "waves", "x", "</s>"], "eos": "</s>",
    "table": {"x": {"seismic": 0.9, "waves": 0.05, "x": 0.05, "</s>": 0}}}
  )"));
  auto cs = clauses({{{"seismic waves"}, ClauseMode::Inclusion}});
  bool saw_partial = false;
  constrainedDecode(lm, encode(lm, "x"), cs, smallConfig(3, 3), [&](int step, const std::vector<Hypothesis>& beam) {
    if (step != 0) return;
    for (const auto& h : beam) {
      if (h.words(lm.vocabulary()) == std::vector<std::string>{"seismic"}) {
        EXPECT_EQ(h.clauseStates[0].partialMatchLengths(), std::vector<int>{1});
        EXPECT_FALSE(h.clauseStates[0].matched);
        saw_partial = true;
      }
    }
  });
  EXPECT_TRUE(saw_partial);
}

TEST(Perplexity, AnalyticCases) {
  UniformScorer uniform(letters(4));
  EXPECT_NEAR(perplexity(uniform, std::vector<std::string>{"a", "b", "c"}), 4.0, 1e-12);
  auto lm = TableScorer::fromJson(nlohmann::json::parse(R"({
    "format": "genex-toy-lm", "vocabulary": ["a", "b", "</s>"], "eos": "</s>",
    "table": {"": {"a": 0.5, "b": 0.5, "</s>": 0}, "a": {"b": 0.5, "a": 0.5, "</s>": 0}}})"));
  EXPECT_NEAR(perplexity(lm, std::vector<std::string>{"a", "b"}), 2.0, 1e-12);
  EXPECT_THROW(perplexity(lm, std::vector<std::string>{"zzz"}), Error);
  EXPECT_THROW(perplexity(lm, std::vector<std::string>{}), Error);
}

TEST(Perplexity, MatchesDirectSummation) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto vocab = letters(6);
    RandomScorer lm(vocab, seed);
    std::vector<TokenId> seq = {1, 4, 2, 0, 3};
    double sum = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      std::vector<TokenId> prefix(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(i));
      sum += lm.nextLogProbs(prefix)[seq[i]];
    }
    EXPECT_NEAR(perplexity(lm, std::span<const TokenId>(seq)), std::exp(-sum / 5.0), 1e-9);
  }
}

TEST(TableScorer, LogProbsNormalizedAndSuffixBackoff) {
  auto lm = TableScorer::load(testing::dataDir() / "fixture/toy_lm.json");
  const auto& v = lm.vocabulary();
  for (const auto& ctx : {std::vector<std::string>{}, {"birds"}, {"birds", "can"}, {"penguins", "cannot", "fly"}}) {
    auto lp = lm.nextLogProbs(v.encode(ctx));
    double z = 0;
    for (double x : lp) z += std::exp(x);
    EXPECT_NEAR(z, 1.0, 1e-6);
  }
  EXPECT_THROW(TableScorer::fromJson(nlohmann::json{{"format", "other"}}), Error);
}

}  // namespace
}  // namespace genex
