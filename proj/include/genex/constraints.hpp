// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "genex/text.hpp"

namespace genex {

enum class ClauseMode { Inclusion, Exclusion };

using Ngram = std::vector<std::string>;

// A lexical clause: satisfied when some n-gram occurs contiguously in the
// completion (Inclusion) or when none does (Exclusion). N-grams are lowercase
// word sequences of 1..4 words, kept sorted and unique.
struct ConstraintClause {
  std::vector<Ngram> ngrams;
  ClauseMode mode = ClauseMode::Inclusion;

  static constexpr std::size_t kMaxNgramWords = 4;

  static ConstraintClause fromPhrases(const std::set<std::string>& phrases, ClauseMode mode) {
    ConstraintClause c;
    c.mode = mode;
    for (const auto& p : phrases) {
      auto ws = text::lowerWords(p);
      if (ws.empty() || ws.size() > kMaxNgramWords) continue;
      c.ngrams.push_back(std::move(ws));
    }
    std::sort(c.ngrams.begin(), c.ngrams.end());
    c.ngrams.erase(std::unique(c.ngrams.begin(), c.ngrams.end()), c.ngrams.end());
    return c;
  }

  std::vector<std::string> phrases() const {
    std::vector<std::string> out;
    for (const auto& n : ngrams) out.push_back(text::join(n, " "));
    return out;
  }

  bool operator==(const ConstraintClause&) const = default;
};

struct ConstraintSet {
  std::vector<ConstraintClause> clauses;

  bool empty() const { return clauses.empty(); }
  std::size_t size() const { return clauses.size(); }
  bool operator==(const ConstraintSet&) const = default;
};

inline bool containsNgram(const std::vector<std::string>& words, const Ngram& ngram) {
  if (ngram.empty() || ngram.size() > words.size()) return false;
  return std::search(words.begin(), words.end(), ngram.begin(), ngram.end()) != words.end();
}

// Per-clause satisfaction of a completion given as lowercase word tokens.
inline std::vector<bool> satisfies(const ConstraintSet& cs, const std::vector<std::string>& words) {
  std::vector<bool> out;
  out.reserve(cs.clauses.size());
  for (const auto& c : cs.clauses) {
    bool any = std::any_of(c.ngrams.begin(), c.ngrams.end(), [&](const Ngram& n) { return containsNgram(words, n); });
    out.push_back(c.mode == ClauseMode::Inclusion ? any : !any);
  }
  return out;
}

inline std::vector<bool> satisfies(const ConstraintSet& cs, std::string_view text_in) {
  return satisfies(cs, text::lowerWords(text_in));
}

inline bool satisfiesAll(const ConstraintSet& cs, const std::vector<std::string>& words) {
  auto v = satisfies(cs, words);
  return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
}

}  // namespace genex
