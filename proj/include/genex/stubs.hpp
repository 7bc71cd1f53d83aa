// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "genex/error.hpp"
#include "genex/lexicon.hpp"
#include "genex/subtype.hpp"
#include "genex/text.hpp"

namespace genex {

// Completion provider replaying canned completions per queried term. The term
// is read from the prompt's last "Kinds of <term>:" line.
class TableCompletionProvider : public TextCompletionProvider {
 public:
  explicit TableCompletionProvider(std::map<std::string, std::vector<std::string>> table) : table_(std::move(table)) {}

  // Lines "term<TAB>completion"; repeated terms add sequences.
  static TableCompletionProvider load(const std::filesystem::path& path) {
    std::map<std::string, std::vector<std::string>> t;
    for (const auto& line : text::readDataLines(path)) {
      auto cols = text::split(line, '\t');
      if (cols.size() != 2) throw Error(ErrorCode::InvalidInput, path.string() + ": completion rows need 2 columns");
      t[text::toLower(text::trim(cols[0]))].push_back(text::trim(cols[1]));
    }
    return TableCompletionProvider(std::move(t));
  }

  std::vector<std::string> complete(const std::string& prompt, int n_sequences) const override {
    auto lines = text::split(prompt, '\n');
    std::string last = lines.empty() ? "" : text::trim(lines.back());
    static constexpr std::string_view kLead = "Kinds of ";
    if (!text::startsWith(last, kLead) || !text::endsWith(last, ":")) {
      throw Error(ErrorCode::SubtypeProviderError, "prompt does not end with a 'Kinds of <term>:' line");
    }
    auto term = text::toLower(last.substr(kLead.size(), last.size() - kLead.size() - 1));
    auto it = table_.find(term);
    if (it == table_.end()) return {};
    std::vector<std::string> out;
    for (int i = 0; i < n_sequences && static_cast<std::size_t>(i) < it->second.size(); ++i) {
      out.push_back(it->second[static_cast<std::size_t>(i)]);
    }
    return out;
  }

 private:
  std::map<std::string, std::vector<std::string>> table_;
};

// Infill provider answering "<MASK> is a kind of <term>." queries from a
// table of (term, fill, probability) rows.
class TableInfillProvider : public MaskInfillProvider {
 public:
  using Fills = std::vector<std::pair<std::string, double>>;

  explicit TableInfillProvider(std::map<std::string, Fills> table) : table_(std::move(table)) {}

  // Lines "term<TAB>fill<TAB>probability".
  static TableInfillProvider load(const std::filesystem::path& path) {
    std::map<std::string, Fills> t;
    for (const auto& line : text::readDataLines(path)) {
      auto cols = text::split(line, '\t');
      if (cols.size() != 3) throw Error(ErrorCode::InvalidInput, path.string() + ": infill rows need 3 columns");
      t[text::toLower(text::trim(cols[0]))].emplace_back(text::trim(cols[1]), std::stod(cols[2]));
    }
    return TableInfillProvider(std::move(t));
  }

  Fills infill(const std::string& query, int k) const override {
    for (std::string_view marker : {" is a kind of ", " are a kind of "}) {
      auto pos = query.find(marker);
      if (pos == std::string::npos) continue;
      auto term = text::toLower(query.substr(pos + marker.size()));
      while (!term.empty() && text::isPunct(term.back())) term.pop_back();
      auto ws = text::splitWhitespace(term);
      if (ws.empty()) return {};
      ws.back() = Lexicon::singular(ws.back());
      auto it = table_.find(text::join(ws, " "));
      if (it == table_.end()) it = table_.find(term);
      if (it == table_.end()) return {};
      Fills out = it->second;
      std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
      if (out.size() > static_cast<std::size_t>(k)) out.resize(static_cast<std::size_t>(k));
      return out;
    }
    throw Error(ErrorCode::SubtypeProviderError, "query has no 'is a kind of' frame");
  }

 private:
  std::map<std::string, Fills> table_;
};

}  // namespace genex
