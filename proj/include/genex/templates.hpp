// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "genex/constraints.hpp"
#include "genex/corpus.hpp"
#include "genex/error.hpp"
#include "genex/lexicon.hpp"
#include "genex/subtype.hpp"
#include "genex/text.hpp"

namespace genex {

enum class ExemplarKind { Exception, Instantiation };

inline std::string_view exemplarKindName(ExemplarKind k) {
  return k == ExemplarKind::Exception ? "exception" : "instantiation";
}

inline ExemplarKind parseExemplarKind(std::string_view s) {
  auto k = text::enumKey(s);
  if (k == "exception") return ExemplarKind::Exception;
  if (k == "instantiation") return ExemplarKind::Instantiation;
  throw Error(ErrorCode::InvalidInput, "unknown exemplar kind '" + std::string(s) + "'");
}

enum class ConceptSlot { Base, Subtype };
enum class RelationSlot { Affirmed, Negated };
enum class PropertySlot { RequiredBase, RequiredSubtype, PragmaticNegation };

struct TemplateSpec {
  std::string id;
  ExemplarKind exemplarKind = ExemplarKind::Instantiation;
  ConceptSlot conceptSlot = ConceptSlot::Base;
  RelationSlot relationSlot = RelationSlot::Affirmed;
  PropertySlot propertySlot = PropertySlot::RequiredBase;

  bool operator==(const TemplateSpec&) const = default;

  // Exceptions subtype the concept or the property, never both; pragmatic
  // negation goes with an affirmed relation and a negated relation keeps a
  // required property.
  bool wellFormed() const {
    if (exemplarKind == ExemplarKind::Exception && conceptSlot == ConceptSlot::Subtype &&
        propertySlot == PropertySlot::RequiredSubtype) {
      return false;
    }
    if (propertySlot == PropertySlot::PragmaticNegation && relationSlot != RelationSlot::Affirmed) return false;
    if (relationSlot == RelationSlot::Negated && propertySlot == PropertySlot::PragmaticNegation) return false;
    return true;
  }
};

inline const std::array<TemplateSpec, 7>& templateCatalog() {
  using E = ExemplarKind;
  using C = ConceptSlot;
  using R = RelationSlot;
  using P = PropertySlot;
  static const std::array<TemplateSpec, 7> kCatalog = {{
      {"t1", E::Exception, C::Base, R::Affirmed, P::PragmaticNegation},
      {"t2", E::Exception, C::Subtype, R::Affirmed, P::PragmaticNegation},
      {"t3", E::Exception, C::Subtype, R::Negated, P::RequiredBase},
      {"t4", E::Exception, C::Base, R::Negated, P::RequiredSubtype},
      {"t5", E::Instantiation, C::Subtype, R::Affirmed, P::RequiredBase},
      {"t6", E::Instantiation, C::Base, R::Affirmed, P::RequiredSubtype},
      {"t7", E::Instantiation, C::Subtype, R::Affirmed, P::RequiredSubtype},
  }};
  return kCatalog;
}

inline const TemplateSpec& templateById(std::string_view id) {
  for (const auto& t : templateCatalog()) {
    if (t.id == id) return t;
  }
  throw Error(ErrorCode::InvalidInput, "unknown template '" + std::string(id) + "'");
}

// Templates admissible under one logical-form shape.
inline std::vector<TemplateSpec> templatesForShape(FormShape shape) {
  static const std::set<std::string> kPropertyConsequent = {"t1", "t2", "t5", "t6", "t7"};
  static const std::set<std::string> kRelationConsequent = {"t3", "t4", "t5", "t6", "t7"};
  const auto& ids = shape == FormShape::PropertyConsequent ? kPropertyConsequent : kRelationConsequent;
  std::vector<TemplateSpec> out;
  for (const auto& t : templateCatalog()) {
    if (ids.count(t.id)) out.push_back(t);
  }
  return out;
}

inline std::vector<TemplateSpec> templatesFor(GenericCategory category,
                                              std::optional<Interpretation> interp = std::nullopt) {
  switch (category) {
    case GenericCategory::QuasiDefinitional: return templatesForShape(FormShape::PropertyConsequent);
    case GenericCategory::Principled: return templatesForShape(FormShape::RelationConsequent);
    case GenericCategory::Characterizing:
      if (interp) return templatesForShape(shapeFor(category, interp));
      return {templateCatalog().begin(), templateCatalog().end()};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Prompts

struct ConnectiveConfig {
  std::string exception = "However,";
  std::string instantiation = "For example,";

  const std::string& forKind(ExemplarKind k) const {
    return k == ExemplarKind::Exception ? exception : instantiation;
  }

  // Keys: exception, instantiation.
  static ConnectiveConfig parse(std::string_view content) {
    ConnectiveConfig c;
    auto kv = text::parseKeyValue(content);
    if (auto it = kv.find("exception"); it != kv.end()) c.exception = it->second;
    if (auto it = kv.find("instantiation"); it != kv.end()) c.instantiation = it->second;
    return c;
  }
};

struct Prompt {
  std::string id;
  std::string genericId;
  std::string templateId;
  ExemplarKind kind = ExemplarKind::Instantiation;
  // Full prompt x_p: generic, connective, then the stem left open for the
  // completion.
  std::string text;
  // The exemplar sentence prefix; an exemplar is stem + completion.
  std::string stem;
  std::map<std::string, std::string> bindings;
  double perplexity = 0.0;
};

// Surface realizations for the concept slot; subtypes take the generic's
// grammatical number so the relation still agrees.
inline std::vector<std::string> conceptSurfaces(const Generic& g, const TemplateSpec& t,
                                                const std::vector<SubtypeRecord>& subtypes) {
  std::vector<std::string> out;
  if (t.conceptSlot == ConceptSlot::Base) {
    out.push_back(text::toLower(g.conceptSpan.text));
    return out;
  }
  std::set<std::string> seen;
  bool plural = g.conceptPlural();
  for (const auto& s : subtypes) {
    auto ws = text::splitWhitespace(text::toLower(s.term));
    if (ws.empty()) continue;
    if (plural) ws.back() = Lexicon::plural(Lexicon::singular(ws.back()));
    auto surface = text::join(ws, " ");
    if (seen.insert(surface).second) out.push_back(surface);
  }
  return out;
}

inline std::vector<Prompt> buildPrompts(const Generic& g, const TemplateSpec& t,
                                        const std::vector<SubtypeRecord>& subtypes,
                                        const ConnectiveConfig& connectives, const Lexicon& lex = {}) {
  auto surfaces = conceptSurfaces(g, t, subtypes);
  if (surfaces.empty()) {
    throw Error(ErrorCode::NoPromptsForTemplate, g.id + "/" + t.id + ": no concept subtypes");
  }
  std::string relation;
  if (t.relationSlot == RelationSlot::Negated) {
    relation = lex.negateRelation(g.relation.implicit() ? "" : g.relation.text, g.conceptPlural());
  } else if (!g.relation.implicit()) {
    relation = g.relation.text;
  }
  const std::size_t rel_begin = g.relation.implicit() ? g.property.begin : g.relation.begin;

  auto lead = text::trim(g.text);
  if (!lead.empty() && !text::isPunct(lead.back())) lead += ".";
  const auto& connective = connectives.forKind(t.exemplarKind);

  std::vector<Prompt> out;
  for (const auto& surface : surfaces) {
    std::vector<std::string> stem;
    for (std::size_t i = 0; i < rel_begin; ++i) {
      if (i == g.conceptSpan.begin) {
        stem.push_back(surface);
        i = g.conceptSpan.end - 1;
        continue;
      }
      stem.push_back(g.tokens[i]);
    }
    if (!relation.empty()) stem.push_back(relation);
    if (!stem.empty()) stem[0] = text::lowerFirst(stem[0]);
    Prompt p;
    p.genericId = g.id;
    p.templateId = t.id;
    p.kind = t.exemplarKind;
    p.id = g.id + ":" + t.id + ":" + std::to_string(out.size());
    p.stem = text::detokenize(stem);
    p.text = lead + " " + connective + " " + p.stem;
    p.bindings = {{"concept", surface}, {"relation", relation}, {"connective", connective}};
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Completion constraints

namespace detail {

inline std::string stripDeterminers(std::string_view phrase) {
  auto ws = text::splitWhitespace(text::toLower(phrase));
  std::size_t b = 0;
  while (b + 1 < ws.size() && Lexicon::isDeterminer(ws[b])) ++b;
  return text::join(std::vector<std::string>(ws.begin() + static_cast<std::ptrdiff_t>(b), ws.end()), " ");
}

inline bool containsAnyNgram(const Ngram& haystack, const std::vector<Ngram>& needles) {
  return std::any_of(needles.begin(), needles.end(), [&](const Ngram& n) { return containsNgram(haystack, n); });
}

}  // namespace detail

inline ConstraintSet compileConstraints(const Generic& g, const TemplateSpec& t,
                                        const std::vector<SubtypeRecord>& property_subtypes,
                                        const Lexicon& lex = {}) {
  auto base_family = lex.family(detail::stripDeterminers(g.property.text));
  auto base = ConstraintClause::fromPhrases(base_family, ClauseMode::Inclusion);
  if (base.ngrams.empty()) {
    throw Error(ErrorCode::ConstraintCompileError, g.id + ": empty lexical family for '" + g.property.text + "'");
  }
  ConstraintSet cs;
  switch (t.propertySlot) {
    case PropertySlot::RequiredBase:
      cs.clauses.push_back(base);
      break;
    case PropertySlot::PragmaticNegation:
      base.mode = ClauseMode::Exclusion;
      cs.clauses.push_back(base);
      break;
    case PropertySlot::RequiredSubtype: {
      std::set<std::string> phrases;
      for (const auto& s : property_subtypes) {
        auto fam = lex.family(detail::stripDeterminers(s.term));
        phrases.insert(fam.begin(), fam.end());
      }
      auto inclusion = ConstraintClause::fromPhrases(phrases, ClauseMode::Inclusion);
      // A subtype phrase that embeds the base property could never be used
      // without violating the exclusion.
      std::erase_if(inclusion.ngrams, [&](const Ngram& n) { return detail::containsAnyNgram(n, base.ngrams); });
      if (inclusion.ngrams.empty()) {
        throw Error(ErrorCode::ConstraintCompileError, g.id + "/" + t.id + ": no usable property subtypes");
      }
      base.mode = ClauseMode::Exclusion;
      cs.clauses.push_back(std::move(inclusion));
      cs.clauses.push_back(std::move(base));
      break;
    }
  }
  return cs;
}

}  // namespace genex
