// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "genex/text.hpp"

namespace genex {

// Rule-based English morphology plus a synonym table. Read-only after
// construction, so one instance can be shared across worker threads.
class Lexicon {
 public:
  Lexicon() = default;

  Lexicon(std::unordered_set<std::string> verbs,
          std::map<std::string, std::vector<std::string>> synonyms = {})
      : verbs_(std::move(verbs)), synonyms_(std::move(synonyms)) {}

  // verbs: one lemma per line. synonyms: term<TAB>syn[<TAB>syn...], where a
  // column may also hold a comma-separated list. Either path may be empty.
  static Lexicon load(const std::filesystem::path& verbs_path,
                      const std::filesystem::path& synonyms_path = {}) {
    std::unordered_set<std::string> verbs;
    if (!verbs_path.empty()) {
      for (const auto& line : text::readDataLines(verbs_path)) verbs.insert(text::toLower(line));
    }
    std::map<std::string, std::vector<std::string>> synonyms;
    if (!synonyms_path.empty()) {
      for (const auto& line : text::readDataLines(synonyms_path)) {
        auto cols = text::split(line, '\t');
        if (cols.size() < 2) continue;
        auto key = text::toLower(text::trim(cols[0]));
        for (std::size_t i = 1; i < cols.size(); ++i) {
          for (const auto& s : text::split(cols[i], ',')) {
            auto syn = text::toLower(text::trim(s));
            if (!syn.empty() && syn != key) synonyms[key].push_back(syn);
          }
        }
      }
    }
    return Lexicon(std::move(verbs), std::move(synonyms));
  }

  static bool isModal(std::string_view w) {
    static const std::unordered_set<std::string_view> kModals = {
        "can", "could", "may", "might", "must", "shall", "should", "will", "would"};
    return kModals.count(w) != 0;
  }

  static bool isCopula(std::string_view w) {
    static const std::unordered_set<std::string_view> kCopulas = {"is", "are", "was", "were", "be"};
    return kCopulas.count(w) != 0;
  }

  static bool isDeterminer(std::string_view w) {
    static const std::unordered_set<std::string_view> kDets = {"a", "an", "the", "some", "this", "that", "these", "those"};
    return kDets.count(w) != 0;
  }

  static bool isUncountable(std::string_view w) {
    static const std::unordered_set<std::string_view> kMass = {
        "fish", "sheep", "deer", "news", "species", "series", "malaria", "water", "blood",
        "wool", "milk", "honey", "game", "rice", "information", "equipment", "furniture",
        "grass", "glass", "gas", "bus", "moss", "silk", "cotton", "music", "pain"};
    return kMass.count(w) != 0;
  }

  bool isVerb(std::string_view word) const {
    auto w = text::toLower(word);
    return verbs_.count(w) != 0 || verbs_.count(verbLemma(w)) != 0;
  }

  static std::string plural(std::string_view word) {
    auto w = text::toLower(word);
    if (w.empty() || isUncountable(w)) return w;
    for (const auto& [sg, pl] : irregularNouns()) {
      if (w == sg) return pl;
    }
    if (text::endsWith(w, "s") || text::endsWith(w, "x") || text::endsWith(w, "z") ||
        text::endsWith(w, "ch") || text::endsWith(w, "sh")) {
      return w + "es";
    }
    if (w.size() > 1 && w.back() == 'y' && !isVowel(w[w.size() - 2])) {
      return w.substr(0, w.size() - 1) + "ies";
    }
    if (w.size() > 1 && w.back() == 'o' && !isVowel(w[w.size() - 2]) && !oTakesS(w)) {
      return w + "es";
    }
    return w + "s";
  }

  static std::string singular(std::string_view word) {
    auto w = text::toLower(word);
    if (w.size() < 3 || isUncountable(w)) return w;
    for (const auto& [sg, pl] : irregularNouns()) {
      if (w == pl) return sg;
    }
    if (text::endsWith(w, "ss") || text::endsWith(w, "us") || text::endsWith(w, "is")) return w;
    if (text::endsWith(w, "ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
    if (text::endsWith(w, "oes") || text::endsWith(w, "ches") || text::endsWith(w, "shes") ||
        text::endsWith(w, "xes") || text::endsWith(w, "zes") || text::endsWith(w, "sses")) {
      return w.substr(0, w.size() - 2);
    }
    if (w.back() == 's') return w.substr(0, w.size() - 1);
    return w;
  }

  static bool looksPlural(std::string_view word) {
    auto w = text::toLower(word);
    return singular(w) != w;
  }

  static std::string thirdPerson(std::string_view verb) {
    auto w = text::toLower(verb);
    if (w == "have") return "has";
    if (w == "be") return "is";
    if (w == "do") return "does";
    if (w == "go") return "goes";
    if (text::endsWith(w, "s") || text::endsWith(w, "x") || text::endsWith(w, "z") ||
        text::endsWith(w, "ch") || text::endsWith(w, "sh")) {
      return w + "es";
    }
    if (w.size() > 1 && w.back() == 'y' && !isVowel(w[w.size() - 2])) {
      return w.substr(0, w.size() - 1) + "ies";
    }
    return w + "s";
  }

  static std::string gerund(std::string_view verb) {
    auto w = text::toLower(verb);
    static const std::unordered_map<std::string_view, std::string_view> kIrregular = {
        {"be", "being"}, {"see", "seeing"}, {"flee", "fleeing"}, {"begin", "beginning"}};
    if (auto it = kIrregular.find(w); it != kIrregular.end()) return std::string(it->second);
    if (text::endsWith(w, "ie")) return w.substr(0, w.size() - 2) + "ying";
    if (text::endsWith(w, "ee") || text::endsWith(w, "ye") || text::endsWith(w, "oe")) return w + "ing";
    if (w.size() > 2 && w.back() == 'e') return w.substr(0, w.size() - 1) + "ing";
    if (doublesFinalConsonant(w)) return w + w.back() + "ing";
    return w + "ing";
  }

  static std::string nominalization(std::string_view verb) {
    static const std::unordered_map<std::string_view, std::string_view> kNominal = {
        {"fly", "flight"},   {"die", "death"},   {"grow", "growth"},  {"lose", "loss"},
        {"see", "sight"},    {"choose", "choice"}, {"speak", "speech"}, {"breathe", "breath"},
        {"sing", "song"},    {"think", "thought"}, {"bite", "bite"},   {"live", "life"}};
    auto it = kNominal.find(text::toLower(verb));
    return it == kNominal.end() ? std::string() : std::string(it->second);
  }

  // Verb lemma of an inflected form; returns the input when no rule applies.
  std::string verbLemma(std::string_view word) const {
    auto w = text::toLower(word);
    static const std::unordered_map<std::string_view, std::string_view> kIrregular = {
        {"has", "have"}, {"is", "be"}, {"are", "be"}, {"was", "be"}, {"were", "be"},
        {"does", "do"},  {"goes", "go"}, {"being", "be"}};
    if (auto it = kIrregular.find(w); it != kIrregular.end()) return std::string(it->second);
    if (verbs_.count(w)) return w;
    auto known = [&](const std::string& s) { return verbs_.count(s) != 0; };
    if (text::endsWith(w, "ing") && w.size() > 4) {
      auto stem = w.substr(0, w.size() - 3);
      if (known(stem)) return stem;
      if (known(stem + "e")) return stem + "e";
      if (text::endsWith(stem, "y") && known(stem.substr(0, stem.size() - 1) + "ie")) {
        return stem.substr(0, stem.size() - 1) + "ie";
      }
      if (stem.size() > 2 && stem.back() == stem[stem.size() - 2] && known(stem.substr(0, stem.size() - 1))) {
        return stem.substr(0, stem.size() - 1);
      }
      return w;
    }
    if (text::endsWith(w, "ies") && known(w.substr(0, w.size() - 3) + "y")) return w.substr(0, w.size() - 3) + "y";
    if (text::endsWith(w, "es") && known(w.substr(0, w.size() - 2))) return w.substr(0, w.size() - 2);
    if (text::endsWith(w, "s") && known(w.substr(0, w.size() - 1))) return w.substr(0, w.size() - 1);
    return w;
  }

  // Canonical form used to deduplicate terms: last word verb-lemmatized when it
  // is a known verb form, otherwise singularized.
  std::string lemma(std::string_view phrase) const {
    auto ws = text::splitWhitespace(text::toLower(phrase));
    if (ws.empty()) return {};
    auto& last = ws.back();
    if (ws.size() == 1 && isVerbForm(last)) {
      last = verbLemma(last);
    } else {
      last = singular(last);
    }
    return text::join(ws, " ");
  }

  // Lexical family of a phrase (lowercased): morphological variants of the
  // phrase and of each of its synonyms.
  std::set<std::string> family(std::string_view phrase) const {
    std::set<std::string> out;
    auto base = text::join(text::splitWhitespace(text::toLower(phrase)), " ");
    if (base.empty()) return out;
    addVariants(base, out);
    for (const auto& syn : synonymsOf(base)) addVariants(syn, out);
    return out;
  }

  std::vector<std::string> synonymsOf(std::string_view phrase) const {
    std::vector<std::string> out;
    auto key = text::toLower(phrase);
    for (const auto& k : {key, lemma(key)}) {
      if (auto it = synonyms_.find(k); it != synonyms_.end()) {
        for (const auto& s : it->second) {
          if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
        }
      }
    }
    return out;
  }

  // Negated surface form of a relation span. An empty relation stands for the
  // implicit auxiliary of an intransitive generic; its agreement follows the
  // subject's number.
  std::string negateRelation(std::string_view relation, bool subject_plural) const {
    auto ws = text::splitWhitespace(relation);
    if (ws.empty() || text::toLower(relation) == "do") return subject_plural ? "do not" : "does not";
    auto head = text::toLower(ws[0]);
    std::vector<std::string> rest(ws.begin() + 1, ws.end());
    auto tail = rest.empty() ? std::string() : " " + text::join(rest, " ");
    if (head == "can") return ws[0].substr(0, 3) + "not" + tail;
    if (isModal(head) || isCopula(head) || head == "do" || head == "does" || head == "did") {
      return ws[0] + " not" + tail;
    }
    auto lemma_form = verbLemma(head);
    bool third = lemma_form != head && text::endsWith(head, "s");
    if (head == "has") third = true;
    return std::string(third ? "does not " : "do not ") + lemma_form + tail;
  }

 private:
  static bool isVowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
  }

  static bool oTakesS(const std::string& w) {
    static const std::unordered_set<std::string_view> kS = {"photo", "piano", "kilo", "memo", "logo", "solo", "halo"};
    return kS.count(w) != 0;
  }

  static bool doublesFinalConsonant(const std::string& w) {
    if (w.size() < 3 || w.size() > 4) return false;
    char a = w[w.size() - 3], b = w[w.size() - 2], c = w.back();
    return !isVowel(a) && isVowel(b) && !isVowel(c) && c != 'w' && c != 'x' && c != 'y';
  }

  static const std::vector<std::pair<std::string, std::string>>& irregularNouns() {
    static const std::vector<std::pair<std::string, std::string>> kNouns = {
        {"mouse", "mice"}, {"goose", "geese"}, {"child", "children"}, {"person", "people"},
        {"man", "men"},    {"woman", "women"}, {"tooth", "teeth"},    {"foot", "feet"},
        {"wolf", "wolves"}, {"leaf", "leaves"}, {"knife", "knives"},  {"life", "lives"},
        {"calf", "calves"}, {"half", "halves"}, {"ox", "oxen"},       {"cactus", "cacti"}};
    return kNouns;
  }

  bool isVerbForm(const std::string& w) const {
    if (verbs_.count(w)) return true;
    auto l = verbLemma(w);
    return l != w && verbs_.count(l) != 0;
  }

  void addVariants(const std::string& phrase, std::set<std::string>& out) const {
    auto ws = text::splitWhitespace(phrase);
    if (ws.size() == 1 && isVerbForm(ws[0])) {
      auto l = verbLemma(ws[0]);
      out.insert(l);
      out.insert(thirdPerson(l));
      out.insert(gerund(l));
      if (auto n = nominalization(l); !n.empty()) out.insert(n);
      return;
    }
    std::vector<std::string> head(ws.begin(), ws.end() - 1);
    auto prefix = head.empty() ? std::string() : text::join(head, " ") + " ";
    auto sg = singular(ws.back());
    out.insert(prefix + sg);
    out.insert(prefix + plural(sg));
    out.insert(phrase);
  }

  std::unordered_set<std::string> verbs_;
  std::map<std::string, std::vector<std::string>> synonyms_;
};

}  // namespace genex
