// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "genex/error.hpp"
#include "genex/text.hpp"

namespace genex {

using TokenId = std::uint32_t;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Finite symbol set with a designated end-of-sequence symbol.
class Vocabulary {
 public:
  Vocabulary() = default;

  Vocabulary(std::vector<std::string> symbols, const std::string& eos) : symbols_(std::move(symbols)) {
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (!index_.emplace(symbols_[i], static_cast<TokenId>(i)).second) {
        throw Error(ErrorCode::InvalidInput, "duplicate vocabulary symbol '" + symbols_[i] + "'");
      }
    }
    auto it = index_.find(eos);
    if (it == index_.end()) throw Error(ErrorCode::InvalidInput, "end-of-sequence symbol '" + eos + "' not in vocabulary");
    eos_ = it->second;
  }

  std::size_t size() const { return symbols_.size(); }
  bool empty() const { return symbols_.empty(); }
  TokenId eos() const { return eos_; }
  const std::string& symbol(TokenId id) const { return symbols_.at(id); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  std::optional<TokenId> find(const std::string& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  TokenId require(const std::string& s) const {
    auto id = find(s);
    if (!id) throw Error(ErrorCode::ScorerMismatch, "symbol '" + s + "' is not in the scorer vocabulary");
    return *id;
  }

  std::vector<TokenId> encode(const std::vector<std::string>& words) const {
    std::vector<TokenId> out;
    out.reserve(words.size());
    for (const auto& w : words) out.push_back(require(w));
    return out;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId eos_ = 0;
};

// Next-symbol log-probabilities over a fixed vocabulary. Implementations are
// deterministic for a fixed prefix and safe for concurrent const use.
class LmScorer {
 public:
  virtual ~LmScorer() = default;
  virtual const Vocabulary& vocabulary() const = 0;
  virtual std::vector<double> nextLogProbs(std::span<const TokenId> prefix) const = 0;
};

class UniformScorer : public LmScorer {
 public:
  explicit UniformScorer(Vocabulary vocab) : vocab_(std::move(vocab)) {}

  const Vocabulary& vocabulary() const override { return vocab_; }

  std::vector<double> nextLogProbs(std::span<const TokenId>) const override {
    return std::vector<double>(vocab_.size(), -std::log(static_cast<double>(vocab_.size())));
  }

 private:
  Vocabulary vocab_;
};

// Table-driven scorer loaded from the toy-scorer JSON fixture:
//
//   {"format": "genex-toy-lm", "version": 1,
//    "vocabulary": [...], "eos": "</s>",
//    "context": "exact" | "suffix",
//    "table": {"<prefix symbols joined by one space>": {"<symbol>": prob, ...}}}
//
// An entry's unlisted symbols share its remaining mass uniformly; an entry
// listing every symbol is renormalized. A prefix without an entry gets the
// uniform distribution; with context "suffix" the longest suffix of the
// prefix that has an entry is used first.
class TableScorer : public LmScorer {
 public:
  TableScorer(Vocabulary vocab, std::map<std::string, std::map<std::string, double>> table, bool suffix_context)
      : vocab_(std::move(vocab)), suffix_context_(suffix_context) {
    if (vocab_.empty()) throw Error(ErrorCode::ScorerMismatch, "empty vocabulary");
    for (const auto& [key, dist] : table) {
      std::vector<double> lp(vocab_.size(), kNegInf);
      double listed = 0.0;
      std::vector<bool> seen(vocab_.size(), false);
      for (const auto& [sym, p] : dist) {
        auto id = vocab_.find(sym);
        if (!id) throw Error(ErrorCode::ScorerMismatch, "table symbol '" + sym + "' not in vocabulary");
        if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidInput, "bad probability for '" + sym + "'");
        lp[*id] = p;
        seen[*id] = true;
        listed += p;
      }
      if (listed > 1.0 + 1e-9) throw Error(ErrorCode::InvalidInput, "entry '" + key + "' sums to more than 1");
      std::size_t unlisted = vocab_.size() - dist.size();
      double rest = unlisted > 0 ? (1.0 - listed) / static_cast<double>(unlisted) : 0.0;
      double norm = unlisted > 0 ? 1.0 : listed;
      if (norm <= 0) throw Error(ErrorCode::InvalidInput, "entry '" + key + "' has no mass");
      for (std::size_t i = 0; i < lp.size(); ++i) {
        double p = seen[i] ? lp[i] / norm : rest;
        lp[i] = p > 0 ? std::log(p) : kNegInf;
      }
      table_.emplace(key, std::move(lp));
      max_key_words_ = std::max(max_key_words_, text::splitWhitespace(key).size());
    }
  }

  static TableScorer fromJson(const nlohmann::json& j) {
    if (j.value("format", "") != "genex-toy-lm") {
      throw Error(ErrorCode::InvalidInput, "toy scorer fixture must have format 'genex-toy-lm'");
    }
    Vocabulary vocab(j.at("vocabulary").get<std::vector<std::string>>(), j.at("eos").get<std::string>());
    auto context = j.value("context", "exact");
    if (context != "exact" && context != "suffix") {
      throw Error(ErrorCode::InvalidInput, "context must be 'exact' or 'suffix'");
    }
    std::map<std::string, std::map<std::string, double>> table;
    if (j.contains("table")) {
      table = j.at("table").get<std::map<std::string, std::map<std::string, double>>>();
    }
    return TableScorer(std::move(vocab), std::move(table), context == "suffix");
  }

  static TableScorer load(const std::filesystem::path& path) {
    try {
      return fromJson(nlohmann::json::parse(text::readFile(path)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidInput, path.string() + ": " + e.what());
    }
  }

  const Vocabulary& vocabulary() const override { return vocab_; }

  std::vector<double> nextLogProbs(std::span<const TokenId> prefix) const override {
    for (auto id : prefix) {
      if (id >= vocab_.size()) throw Error(ErrorCode::ScorerMismatch, "token id out of range");
    }
    auto key_of = [&](std::size_t from) {
      std::string key;
      for (std::size_t i = from; i < prefix.size(); ++i) {
        if (i > from) key += ' ';
        key += vocab_.symbol(prefix[i]);
      }
      return key;
    };
    if (auto it = table_.find(key_of(0)); it != table_.end()) return it->second;
    if (suffix_context_) {
      std::size_t first = prefix.size() > max_key_words_ ? prefix.size() - max_key_words_ : 1;
      for (std::size_t from = std::max<std::size_t>(first, 1); from <= prefix.size(); ++from) {
        if (auto it = table_.find(key_of(from)); it != table_.end()) return it->second;
      }
    }
    return std::vector<double>(vocab_.size(), -std::log(static_cast<double>(vocab_.size())));
  }

 private:
  Vocabulary vocab_;
  std::unordered_map<std::string, std::vector<double>> table_;
  std::size_t max_key_words_ = 0;
  bool suffix_context_ = false;
};

}  // namespace genex
