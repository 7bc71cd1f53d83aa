// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "genex/error.hpp"
#include "genex/lexicon.hpp"
#include "genex/text.hpp"

namespace genex {

enum class GenericCategory { QuasiDefinitional, Principled, Characterizing };

// Reading of a characterizing generic; it selects which of the two
// non-characterizing logical forms applies.
enum class Interpretation { AsQuasiDefinitional, AsPrincipled };

inline std::string_view categoryName(GenericCategory c) {
  switch (c) {
    case GenericCategory::QuasiDefinitional: return "quasi-definitional";
    case GenericCategory::Principled: return "principled";
    case GenericCategory::Characterizing: return "characterizing";
  }
  return "";
}

inline std::string_view interpretationName(Interpretation i) {
  return i == Interpretation::AsQuasiDefinitional ? "quasi-definitional" : "principled";
}

inline GenericCategory parseCategory(std::string_view s) {
  auto k = text::enumKey(s);
  if (k == "quasidefinitional" || k == "qd") return GenericCategory::QuasiDefinitional;
  if (k == "principled") return GenericCategory::Principled;
  if (k == "characterizing" || k == "char") return GenericCategory::Characterizing;
  throw Error(ErrorCode::InvalidInput, "unknown generic category '" + std::string(s) + "'");
}

inline Interpretation parseInterpretation(std::string_view s) {
  auto k = text::enumKey(s);
  if (k == "quasidefinitional" || k == "asquasidefinitional") return Interpretation::AsQuasiDefinitional;
  if (k == "principled" || k == "asprincipled") return Interpretation::AsPrincipled;
  throw Error(ErrorCode::InvalidInput, "unknown interpretation '" + std::string(s) + "'");
}

// Token range [begin, end) into Generic::tokens. An empty range marks a slot
// whose surface text is implied rather than written (the "do" of "Dogs bark").
struct Span {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool implicit() const { return begin == end; }
  bool overlaps(const Span& o) const { return begin < o.end && o.begin < end; }
};

struct Generic {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  Span conceptSpan;
  Span relation;
  Span property;
  GenericCategory category = GenericCategory::Principled;
  std::optional<Interpretation> interpretation;
  std::string source;

  // Concept head is grammatically plural, which drives agreement in prompts.
  bool conceptPlural() const {
    auto ws = text::splitWhitespace(conceptSpan.text);
    return !ws.empty() && Lexicon::looksPlural(ws.back());
  }
};

// One line of the generics input file.
struct GenericRecord {
  std::string id;
  std::string text;
  GenericCategory category = GenericCategory::Principled;
  std::optional<Interpretation> interpretation;
  std::string source;
};

inline GenericRecord genericRecordFromJson(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("id") || !j.contains("text") || !j.contains("category")) {
    throw Error(ErrorCode::InvalidInput, "generic record needs id, text and category");
  }
  GenericRecord r;
  r.id = j.at("id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  r.category = parseCategory(j.at("category").get<std::string>());
  if (j.contains("interpretation") && !j.at("interpretation").is_null()) {
    r.interpretation = parseInterpretation(j.at("interpretation").get<std::string>());
  }
  if (j.contains("source")) r.source = j.at("source").get<std::string>();
  return r;
}

inline std::vector<GenericRecord> loadGenericRecords(const std::filesystem::path& path) {
  std::vector<GenericRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(text::readFile(path), '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(genericRecordFromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidInput, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Preprocessing

enum class ExclusionReason { VerbOfConsideration, HumanReferent, InOrderTo };

inline std::string_view exclusionReasonName(ExclusionReason r) {
  switch (r) {
    case ExclusionReason::VerbOfConsideration: return "VerbOfConsideration";
    case ExclusionReason::HumanReferent: return "HumanReferent";
    case ExclusionReason::InOrderTo: return "InOrderTo";
  }
  return "";
}

struct PreprocessReport {
  std::vector<std::string> removedAdverbs;
  std::vector<std::pair<std::string, std::string>> hedgesRewritten;
  bool excluded = false;
  std::optional<ExclusionReason> reason;
  std::string detail;
};

struct PreprocessOptions {
  // Lowercased lemmas; multi-word seeds match contiguous lemma sequences.
  std::set<std::string> humanReferents;
  // (from, to) phrase pairs, matched case-insensitively on word boundaries.
  std::vector<std::pair<std::string, std::string>> hedges = {{"may have to be", "must be"}};
};

// hedges file: from<TAB>to per line.
inline std::vector<std::pair<std::string, std::string>> loadHedgeTable(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& line : text::readDataLines(path)) {
    auto cols = text::split(line, '\t');
    if (cols.size() == 2) out.emplace_back(text::trim(cols[0]), text::trim(cols[1]));
  }
  return out;
}

inline std::set<std::string> loadSeedList(const std::filesystem::path& path) {
  std::set<std::string> out;
  for (const auto& line : text::readDataLines(path)) out.insert(text::toLower(line));
  return out;
}

namespace detail {

inline std::string stripPunct(std::string_view w) {
  std::size_t b = 0, e = w.size();
  while (b < e && text::isPunct(w[b])) ++b;
  while (e > b && text::isPunct(w[e - 1])) --e;
  return std::string(w.substr(b, e - b));
}

inline bool isVerbOfConsideration(const std::string& lw) {
  static const std::set<std::string> kForms = {
      "consider", "considers", "considered", "considering", "posit",    "posits",
      "posited",  "positing",  "suppose",    "supposes",    "supposed", "supposing",
      "suspect",  "suspects",  "suspected",  "suspecting",  "think",    "thinks",
      "thought",  "thinking"};
  return kForms.count(lw) != 0;
}

}  // namespace detail

// Removes adverbs of quantification, rewrites hedges and flags generics that
// must be excluded. Idempotent on its own output.
inline std::pair<std::string, PreprocessReport> preprocess(std::string_view raw,
                                                           const PreprocessOptions& opts = {}) {
  static const std::set<std::string> kAdverbs = {"usually", "typically", "generally"};
  auto input = text::trim(raw);
  if (input.empty()) throw Error(ErrorCode::InvalidInput, "empty generic text");

  PreprocessReport report;
  auto tokens = text::splitWhitespace(input);
  std::vector<std::string> kept;
  bool first_removed = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& tok = tokens[i];
    auto bare = text::toLower(detail::stripPunct(tok));
    if (kAdverbs.count(bare)) {
      report.removedAdverbs.push_back(bare);
      if (i == 0) first_removed = true;
      // Keep sentence-final punctuation; an adverb's trailing comma goes with it.
      if (!tok.empty() && (tok.back() == '.' || tok.back() == '!' || tok.back() == '?') && !kept.empty()) {
        kept.back() += tok.back();
      }
      continue;
    }
    kept.push_back(tok);
  }
  if (first_removed && !kept.empty()) kept[0] = text::capitalizeFirst(kept[0]);

  // Hedge rewriting on word boundaries, case-insensitive.
  for (const auto& [from, to] : opts.hedges) {
    auto from_ws = text::splitWhitespace(text::toLower(from));
    if (from_ws.empty()) continue;
    for (std::size_t i = 0; i + from_ws.size() <= kept.size();) {
      bool match = true;
      for (std::size_t k = 0; k < from_ws.size() && match; ++k) {
        auto w = text::toLower(kept[i + k]);
        // Punctuation may trail the final word only.
        if (k + 1 == from_ws.size()) w = detail::stripPunct(w);
        match = w == from_ws[k];
      }
      if (!match) {
        ++i;
        continue;
      }
      auto last = kept[i + from_ws.size() - 1];
      std::string trailing;
      while (!last.empty() && text::isPunct(last.back())) {
        trailing.insert(trailing.begin(), last.back());
        last.pop_back();
      }
      auto to_ws = text::splitWhitespace(to);
      if (i == 0 && !to_ws.empty() && std::isupper(static_cast<unsigned char>(kept[0][0]))) {
        to_ws[0] = text::capitalizeFirst(to_ws[0]);
      }
      if (!to_ws.empty()) to_ws.back() += trailing;
      kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(i),
                 kept.begin() + static_cast<std::ptrdiff_t>(i + from_ws.size()));
      kept.insert(kept.begin() + static_cast<std::ptrdiff_t>(i), to_ws.begin(), to_ws.end());
      report.hedgesRewritten.emplace_back(from, to);
      i += to_ws.size();
    }
  }

  auto out = text::join(kept, " ");
  auto lw = text::lowerWords(out);
  auto flag = [&](ExclusionReason r, std::string detail) {
    if (report.excluded) return;
    report.excluded = true;
    report.reason = r;
    report.detail = std::move(detail);
  };
  if (lw.size() >= 3 && lw[0] == "in" && lw[1] == "order" && lw[2] == "to") {
    flag(ExclusionReason::InOrderTo, "begins with 'In order to'");
  }
  for (const auto& w : lw) {
    if (detail::isVerbOfConsideration(w)) flag(ExclusionReason::VerbOfConsideration, w);
  }
  if (!opts.humanReferents.empty()) {
    std::vector<std::string> lemmas;
    for (const auto& w : lw) lemmas.push_back(Lexicon::singular(w));
    for (const auto& seed : opts.humanReferents) {
      auto seed_ws = text::splitWhitespace(seed);
      for (auto& s : seed_ws) s = Lexicon::singular(s);
      if (seed_ws.empty()) continue;
      for (std::size_t i = 0; i + seed_ws.size() <= lemmas.size(); ++i) {
        if (std::equal(seed_ws.begin(), seed_ws.end(), lemmas.begin() + static_cast<std::ptrdiff_t>(i))) {
          flag(ExclusionReason::HumanReferent, seed);
          break;
        }
      }
    }
  }
  return {out, report};
}

// ---------------------------------------------------------------------------
// Span extraction

struct SpanTriple {
  Span conceptSpan;
  Span relation;
  Span property;
};

class SpanProvider {
 public:
  virtual ~SpanProvider() = default;
  virtual std::optional<SpanTriple> spans(const std::vector<std::string>& tokens) const = 0;
};

// Rule-based extraction over word tokens:
//  - a modal, copula or auxiliary is the relation and the rest is the property;
//  - otherwise the first known lexical verb is the relation and what follows
//    is the property; with nothing following, the relation is an implicit
//    "do" and the verb itself is the property;
//  - a leading "On/In/At/During <np>," phrase supplies the concept.
class RuleSpanProvider : public SpanProvider {
 public:
  explicit RuleSpanProvider(const Lexicon& lexicon) : lexicon_(&lexicon) {}

  std::optional<SpanTriple> spans(const std::vector<std::string>& tokens) const override {
    std::vector<std::string> lower;
    for (const auto& t : tokens) lower.push_back(text::toLower(t));
    std::size_t end = lower.size();
    while (end > 0 && lower[end - 1].size() == 1 && text::isPunct(lower[end - 1][0])) --end;
    if (end < 2) return std::nullopt;

    std::size_t clause = 0;
    std::optional<std::pair<std::size_t, std::size_t>> locative;
    static const std::set<std::string> kPreps = {"on", "in", "at", "during"};
    if (kPreps.count(lower[0])) {
      auto comma = std::find(lower.begin(), lower.begin() + static_cast<std::ptrdiff_t>(end), ",");
      if (comma == lower.begin() + static_cast<std::ptrdiff_t>(end)) return std::nullopt;
      auto c = static_cast<std::size_t>(comma - lower.begin());
      std::size_t b = 1;
      while (b < c && Lexicon::isDeterminer(lower[b])) ++b;
      if (b >= c) return std::nullopt;
      locative = {b, c};
      clause = c + 1;
    }
    if (clause + 1 >= end) return std::nullopt;

    auto is_aux = [](const std::string& w) {
      return Lexicon::isModal(w) || Lexicon::isCopula(w) || w == "do" || w == "does";
    };
    std::optional<std::size_t> rel;
    for (std::size_t i = clause + 1; i < end && !rel; ++i) {
      if (is_aux(lower[i])) rel = i;
    }
    for (std::size_t i = clause + 1; i < end && !rel; ++i) {
      if (lexicon_->isVerb(lower[i]) && !Lexicon::isDeterminer(lower[i])) rel = i;
    }
    if (!rel) return std::nullopt;

    SpanTriple out;
    if (locative) {
      out.conceptSpan = makeSpan(tokens, locative->first, locative->second);
    } else {
      std::size_t b = clause;
      while (b < *rel && Lexicon::isDeterminer(lower[b])) ++b;
      if (b >= *rel) return std::nullopt;
      out.conceptSpan = makeSpan(tokens, b, *rel);
    }

    std::size_t r = *rel;
    if (is_aux(lower[r])) {
      std::size_t rend = r + 1;
      if (rend < end && lower[rend] == "not") ++rend;
      if (rend >= end) return std::nullopt;
      out.relation = makeSpan(tokens, r, rend);
      out.property = makeSpan(tokens, rend, end);
    } else if (r + 1 < end) {
      out.relation = makeSpan(tokens, r, r + 1);
      out.property = makeSpan(tokens, r + 1, end);
    } else {
      bool singular_subject = Lexicon::thirdPerson(lexicon_->verbLemma(lower[r])) == lower[r] &&
                              lexicon_->verbLemma(lower[r]) != lower[r];
      out.relation = Span{singular_subject ? "does" : "do", r, r};
      out.property = makeSpan(tokens, r, end);
    }
    return out;
  }

 private:
  static Span makeSpan(const std::vector<std::string>& tokens, std::size_t b, std::size_t e) {
    std::vector<std::string> part(tokens.begin() + static_cast<std::ptrdiff_t>(b),
                                  tokens.begin() + static_cast<std::ptrdiff_t>(e));
    return Span{text::detokenize(part), b, e};
  }

  const Lexicon* lexicon_;
};

inline Generic parseGeneric(std::string_view text_in, const SpanProvider& provider) {
  Generic g;
  g.text = text::trim(text_in);
  g.tokens = text::words(g.text);
  auto s = provider.spans(g.tokens);
  if (!s) throw Error(ErrorCode::UnparsableGeneric, "no concept/relation/property parse for '" + g.text + "'");
  g.conceptSpan = std::move(s->conceptSpan);
  g.relation = std::move(s->relation);
  g.property = std::move(s->property);
  return g;
}

inline Generic parseGeneric(const GenericRecord& rec, std::string_view preprocessed,
                            const SpanProvider& provider) {
  auto g = parseGeneric(preprocessed, provider);
  g.id = rec.id;
  g.category = rec.category;
  g.interpretation = rec.interpretation;
  g.source = rec.source;
  return g;
}

// ---------------------------------------------------------------------------
// Logical forms

enum class FormKind { Base, Instantiation, Exception };
enum class Connective { Implies, Conjunction };
enum class NegatedSlot { None, PropertyPragmatic, ConceptPragmatic, RelationNeg };

// Which predicate sits in the consequent of the base form:
//   PropertyConsequent:  K(x) ∧ r(x,y) ⇒ P(y)   (quasi-definitional)
//   RelationConsequent:  K(x) ∧ P(y) ⇒ r(x,y)   (principled)
enum class FormShape { PropertyConsequent, RelationConsequent };

struct LogicalForm {
  FormKind kind = FormKind::Base;
  FormShape shape = FormShape::PropertyConsequent;
  std::string conceptPredicate;
  std::string propertyPredicate;
  std::string relationPredicate;
  Connective connective = Connective::Implies;
  NegatedSlot negatedSlot = NegatedSlot::None;
  std::string varX = "x";
  std::string varY = "y";

  bool operator==(const LogicalForm&) const = default;

  std::string str() const {
    auto k = conceptPredicate + "(" + varX + ")";
    auto p = propertyPredicate + "(" + varY + ")";
    auto r = relationPredicate + "(" + varX + "," + varY + ")";
    auto neg = [&](NegatedSlot slot, const std::string& s) {
      if (negatedSlot != slot) return s;
      return std::string(slot == NegatedSlot::RelationNeg ? "¬" : "∼") + s;
    };
    k = neg(NegatedSlot::ConceptPragmatic, k);
    p = neg(NegatedSlot::PropertyPragmatic, p);
    r = neg(NegatedSlot::RelationNeg, r);
    const std::string last = connective == Connective::Implies ? " ⇒ " : " ∧ ";
    if (shape == FormShape::PropertyConsequent) return k + " ∧ " + r + last + p;
    return k + " ∧ " + p + last + r;
  }
};

inline FormShape shapeFor(GenericCategory c, std::optional<Interpretation> interp) {
  switch (c) {
    case GenericCategory::QuasiDefinitional: return FormShape::PropertyConsequent;
    case GenericCategory::Principled: return FormShape::RelationConsequent;
    case GenericCategory::Characterizing:
      if (!interp) throw Error(ErrorCode::InvalidInput, "characterizing generic needs an interpretation");
      return *interp == Interpretation::AsQuasiDefinitional ? FormShape::PropertyConsequent
                                                            : FormShape::RelationConsequent;
  }
  return FormShape::PropertyConsequent;
}

// Interpretations a generic is processed under: characterizing generics without
// an explicit flag take both readings.
inline std::vector<Interpretation> interpretationsOf(const Generic& g) {
  switch (g.category) {
    case GenericCategory::QuasiDefinitional: return {Interpretation::AsQuasiDefinitional};
    case GenericCategory::Principled: return {Interpretation::AsPrincipled};
    case GenericCategory::Characterizing:
      if (g.interpretation) return {*g.interpretation};
      return {Interpretation::AsQuasiDefinitional, Interpretation::AsPrincipled};
  }
  return {};
}

inline std::string predicateName(const Lexicon& lex, std::string_view phrase) {
  return text::camelCase(text::splitWhitespace(lex.lemma(phrase)));
}

inline LogicalForm logicalForm(const Generic& g, const Lexicon& lex = {}) {
  LogicalForm lf;
  lf.kind = FormKind::Base;
  lf.shape = shapeFor(g.category, g.interpretation);
  lf.conceptPredicate = predicateName(lex, g.conceptSpan.text);
  lf.propertyPredicate = predicateName(lex, g.property.text);
  lf.relationPredicate = text::toLower(g.relation.text);
  lf.connective = Connective::Implies;
  return lf;
}

inline LogicalForm instantiationForm(const LogicalForm& base) {
  if (base.kind != FormKind::Base) throw Error(ErrorCode::InvalidKind, "instantiation form needs a base form");
  auto out = base;
  out.kind = FormKind::Instantiation;
  out.connective = Connective::Conjunction;
  out.negatedSlot = NegatedSlot::None;
  return out;
}

inline LogicalForm exceptionForm(const LogicalForm& base) {
  if (base.kind != FormKind::Base) throw Error(ErrorCode::InvalidKind, "exception form needs a base form");
  auto out = base;
  out.kind = FormKind::Exception;
  out.connective = Connective::Conjunction;
  out.negatedSlot = base.shape == FormShape::PropertyConsequent ? NegatedSlot::PropertyPragmatic
                                                               : NegatedSlot::RelationNeg;
  return out;
}

// Universally quantified paraphrases used when judging exceptions:
// "[K] [REL] only [P]" for property-consequent forms and "All [K] [REL] [P]"
// for relation-consequent forms. Characterizing generics get both.
inline std::vector<std::string> modifiedForms(const Generic& g) {
  auto only_form = [&] {
    std::vector<std::string> t = g.tokens;
    t.insert(t.begin() + static_cast<std::ptrdiff_t>(g.property.begin), "only");
    return text::detokenize(t);
  };
  auto all_form = [&] {
    std::vector<std::string> t = g.tokens;
    std::size_t b = g.conceptSpan.begin;
    std::vector<std::string> words(t.begin() + static_cast<std::ptrdiff_t>(g.conceptSpan.begin),
                                   t.begin() + static_cast<std::ptrdiff_t>(g.conceptSpan.end));
    for (auto& w : words) w = text::toLower(w);
    if (b > 0 && Lexicon::isDeterminer(text::toLower(t[b - 1]))) {
      --b;
      words.back() = Lexicon::plural(words.back());
    }
    words.insert(words.begin(), b == 0 ? "All" : "all");
    t.erase(t.begin() + static_cast<std::ptrdiff_t>(b), t.begin() + static_cast<std::ptrdiff_t>(g.conceptSpan.end));
    t.insert(t.begin() + static_cast<std::ptrdiff_t>(b), words.begin(), words.end());
    return text::detokenize(t);
  };
  switch (g.category) {
    case GenericCategory::QuasiDefinitional: return {only_form()};
    case GenericCategory::Principled: return {all_form()};
    case GenericCategory::Characterizing: return {only_form(), all_form()};
  }
  return {};
}

}  // namespace genex
