// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "genex/corpus.hpp"
#include "support/oracles.hpp"

namespace genex {
namespace {

using testing::dataDir;

const Lexicon& lexicon() {
  static const Lexicon lex = Lexicon::load(dataDir() / "lexicon/verbs.txt", dataDir() / "lexicon/synonyms.tsv");
  return lex;
}

PreprocessOptions fixtureOptions() {
  PreprocessOptions o;
  o.humanReferents = loadSeedList(dataDir() / "lexicon/human_referents.txt");
  o.hedges = loadHedgeTable(dataDir() / "lexicon/hedges.tsv");
  return o;
}

Generic parsed(const std::string& text, GenericCategory cat, std::optional<Interpretation> interp = std::nullopt) {
  RuleSpanProvider spans(lexicon());
  auto g = parseGeneric(text, spans);
  g.category = cat;
  g.interpretation = interp;
  return g;
}

TEST(Preprocess, RemovesAdverbsOfQuantification) {
  EXPECT_EQ(preprocess("Birds usually fly").first, "Birds fly");
  EXPECT_EQ(preprocess("Owls generally hunt at night.").first, "Owls hunt at night.");
  EXPECT_EQ(preprocess("Usually, birds fly.").first, "Birds fly.");
  EXPECT_EQ(preprocess("Dogs bark typically.").first, "Dogs bark.");
  auto [out, report] = preprocess("Dogs typically bark at strangers");
  EXPECT_EQ(out, "Dogs bark at strangers");
  EXPECT_EQ(report.removedAdverbs, std::vector<std::string>{"typically"});
  EXPECT_FALSE(report.excluded);
}

TEST(Preprocess, RewritesHedges) {
  auto [out, report] = preprocess("Tax forms may have to be filed by April", fixtureOptions());
  EXPECT_EQ(out, "Tax forms must be filed by April");
  ASSERT_EQ(report.hedgesRewritten.size(), 1u);
  EXPECT_EQ(preprocess("Forms MAY HAVE TO BE signed.").first, "Forms must be signed.");
  EXPECT_EQ(preprocess("Hay may have to bed down").first, "Hay may have to bed down");
}

TEST(Preprocess, ExcludesInOrderTo) {
  auto report = preprocess("In order to bake bread, you need flour").second;
  EXPECT_TRUE(report.excluded);
  EXPECT_EQ(report.reason, ExclusionReason::InOrderTo);
  EXPECT_FALSE(preprocess("Bread is baked in order to eat it").second.reason == ExclusionReason::InOrderTo);
}

TEST(Preprocess, ExcludesVerbsOfConsideration) {
  for (std::string s : {"Scientists think that dinosaurs had feathers", "Owls are considered wise",
                        "Researchers suspect that bees dance"}) {
    auto r = preprocess(s).second;
    EXPECT_TRUE(r.excluded) << s;
    EXPECT_EQ(r.reason, ExclusionReason::VerbOfConsideration) << s;
  }
}

TEST(Preprocess, ExcludesHumanReferents) {
  auto opts = fixtureOptions();
  for (std::string s : {"Teachers grade homework", "Mothers feed their babies"}) {
    auto r = preprocess(s, opts).second;
    EXPECT_TRUE(r.excluded) << s;
    EXPECT_EQ(r.reason, ExclusionReason::HumanReferent) << s;
  }
  EXPECT_FALSE(preprocess("Birds can fly", opts).second.excluded);
}

TEST(Preprocess, EmptyInputIsInvalid) {
  EXPECT_THROW(preprocess("   "), Error);
}

TEST(Preprocess, IdempotentOverRawCorpus) {
  auto opts = fixtureOptions();
  for (const auto& line : text::readDataLines(dataDir() / "fixture/raw_generics.txt")) {
    auto once = preprocess(line, opts).first;
    auto twice = preprocess(once, opts);
    EXPECT_EQ(twice.first, once) << line;
    EXPECT_TRUE(twice.second.removedAdverbs.empty()) << line;
    EXPECT_TRUE(twice.second.hedgesRewritten.empty()) << line;
  }
}

TEST(Parse, ModalRelation) {
  auto g = parsed("Birds can fly", GenericCategory::Principled);
  EXPECT_EQ(g.conceptSpan.text, "Birds");
  EXPECT_EQ(g.relation.text, "can");
  EXPECT_EQ(g.property.text, "fly");
  EXPECT_TRUE(g.conceptPlural());
}

TEST(Parse, LexicalVerbRelation) {
  auto g = parsed("Mosquitoes carry malaria", GenericCategory::Principled);
  EXPECT_EQ(g.conceptSpan.text, "Mosquitoes");
  EXPECT_EQ(g.relation.text, "carry");
  EXPECT_EQ(g.property.text, "malaria");
  auto q = parsed("Quakes produce seismic waves.", GenericCategory::QuasiDefinitional);
  EXPECT_EQ(q.relation.text, "produce");
  EXPECT_EQ(q.property.text, "seismic waves");
}

TEST(Parse, IntransitiveVerbGetsImplicitDo) {
  auto g = parsed("Dogs bark", GenericCategory::Characterizing);
  EXPECT_EQ(g.conceptSpan.text, "Dogs");
  EXPECT_EQ(g.relation.text, "do");
  EXPECT_EQ(g.property.text, "bark");
}

TEST(Parse, LocativeConcept) {
  auto g = parsed("In a hotel, you will find a bed", GenericCategory::Characterizing);
  EXPECT_EQ(g.conceptSpan.text, "hotel");
  EXPECT_EQ(g.relation.text, "will");
  EXPECT_EQ(g.property.text, "find a bed");
}

TEST(Parse, UnparsableThrows) {
  RuleSpanProvider spans(lexicon());
  try {
    parseGeneric("Birds", spans);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnparsableGeneric);
  }
}

TEST(Parse, RecordsLoadFromJsonLines) {
  auto recs = loadGenericRecords(dataDir() / "fixture/generics.jsonl");
  ASSERT_EQ(recs.size(), 10u);
  EXPECT_EQ(recs[0].id, "g01");
  EXPECT_EQ(recs[0].category, GenericCategory::Principled);
  EXPECT_EQ(recs[5].interpretation, Interpretation::AsPrincipled);
  EXPECT_FALSE(recs[4].interpretation.has_value());
  EXPECT_THROW(genericRecordFromJson(nlohmann::json{{"id", "x"}}), Error);
}

TEST(LogicalForm, PrincipledBaseAndDerivedForms) {
  auto lf = logicalForm(parsed("Birds can fly", GenericCategory::Principled), lexicon());
  EXPECT_EQ(lf.str(), "Bird(x) ∧ Fly(y) ⇒ can(x,y)");
  EXPECT_EQ(exceptionForm(lf).str(), "Bird(x) ∧ Fly(y) ∧ ¬can(x,y)");
  EXPECT_EQ(instantiationForm(lf).str(), "Bird(x) ∧ Fly(y) ∧ can(x,y)");
}

TEST(LogicalForm, QuasiDefinitionalExceptionNegatesProperty) {
  auto lf = logicalForm(parsed("Quakes produce seismic waves", GenericCategory::QuasiDefinitional), lexicon());
  EXPECT_EQ(lf.str(), "Quake(x) ∧ produce(x,y) ⇒ SeismicWave(y)");
  EXPECT_EQ(exceptionForm(lf).str(), "Quake(x) ∧ produce(x,y) ∧ ∼SeismicWave(y)");
  EXPECT_EQ(instantiationForm(lf).str(), "Quake(x) ∧ produce(x,y) ∧ SeismicWave(y)");
}

TEST(LogicalForm, DerivedFormsRejectNonBase) {
  auto lf = logicalForm(parsed("Birds can fly", GenericCategory::Principled), lexicon());
  for (auto derived : {exceptionForm(lf), instantiationForm(lf)}) {
    try {
      exceptionForm(derived);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidKind);
    }
    EXPECT_THROW(instantiationForm(derived), Error);
  }
}

TEST(LogicalForm, CharacterizingTakesBothReadings) {
  auto g = parsed("Lions have manes", GenericCategory::Characterizing);
  auto readings = interpretationsOf(g);
  ASSERT_EQ(readings.size(), 2u);
  std::set<std::string> exceptions;
  for (auto i : readings) {
    g.interpretation = i;
    exceptions.insert(exceptionForm(logicalForm(g, lexicon())).str());
  }
  EXPECT_EQ(exceptions.size(), 2u);
  g.interpretation = std::nullopt;
  EXPECT_THROW(logicalForm(g, lexicon()), Error);
}

TEST(LogicalForm, FlaggedCharacterizingTakesOneReading) {
  auto g = parsed("Dogs bark", GenericCategory::Characterizing, Interpretation::AsPrincipled);
  EXPECT_EQ(interpretationsOf(g), std::vector<Interpretation>{Interpretation::AsPrincipled});
  EXPECT_EQ(logicalForm(g, lexicon()).shape, FormShape::RelationConsequent);
}

TEST(ModifiedForms, OnlyAndAll) {
  EXPECT_EQ(modifiedForms(parsed("Mosquitoes drink blood", GenericCategory::QuasiDefinitional)),
            std::vector<std::string>{"Mosquitoes drink only blood"});
  EXPECT_EQ(modifiedForms(parsed("Birds can fly", GenericCategory::Principled)),
            std::vector<std::string>{"All birds can fly"});
  EXPECT_EQ(modifiedForms(parsed("A dog can bark", GenericCategory::Principled)),
            std::vector<std::string>{"All dogs can bark"});
  EXPECT_EQ(modifiedForms(parsed("Lions have manes", GenericCategory::Characterizing)),
            (std::vector<std::string>{"Lions have only manes", "All lions have manes"}));
}

TEST(Categories, NamesRoundTrip) {
  for (auto c : {GenericCategory::QuasiDefinitional, GenericCategory::Principled, GenericCategory::Characterizing}) {
    EXPECT_EQ(parseCategory(categoryName(c)), c);
  }
  EXPECT_THROW(parseCategory("bogus"), Error);
}

}  // namespace
}  // namespace genex
