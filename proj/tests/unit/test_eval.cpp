// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "genex/eval.hpp"
#include "support/oracles.hpp"

namespace genex {
namespace {

using testing::dataDir;

struct EvalFixture : ::testing::Test {
  std::vector<Exemplar> exs = loadExemplars(dataDir() / "eval_fixture/exemplars.jsonl");
  LabelSet labels = loadLabels(dataDir() / "eval_fixture/labels.jsonl");

  std::vector<Exemplar> selected() const {
    std::vector<Exemplar> out;
    for (const auto& e : exs) {
      if (e.status == ExemplarStatus::SelectedValid) out.push_back(e);
    }
    return out;
  }
};

TEST_F(EvalFixture, PrecisionAtK) {
  auto ranked = rankedByGeneric(exs);
  EXPECT_DOUBLE_EQ(precisionAtK(ranked, labels, 1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(precisionAtK(ranked, labels, 5), 8.0 / 15.0);
  auto d = precisionAtKDetail(ranked, labels, 5);
  EXPECT_EQ(d.valid, 8);
  EXPECT_EQ(d.counted, 15);
}

TEST_F(EvalFixture, PrecisionByKind) {
  auto exc = rankedByGeneric(exs, true, ExemplarKind::Exception);
  auto inst = rankedByGeneric(exs, true, ExemplarKind::Instantiation);
  EXPECT_DOUBLE_EQ(precisionAtK(exc, labels, 1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(precisionAtK(exc, labels, 5), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(precisionAtK(inst, labels, 1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(precisionAtK(inst, labels, 5), 1.0 / 3.0);
}

TEST_F(EvalFixture, RankedListsOrderedByValidity) {
  auto ranked = rankedByGeneric(exs);
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked.at("g01").front().id, "g01:a1");
  EXPECT_EQ(ranked.at("g03").front().id, "g03:b1");
  EXPECT_EQ(ranked.at("g10").front().id, "g10:c1");
  for (const auto& [gid, list] : ranked) EXPECT_EQ(list.size(), 5u);
}

TEST_F(EvalFixture, PerTemplateValidity) {
  auto pt = perTemplateValidity(selected(), labels, 10);
  const std::map<std::string, std::pair<int, int>> expected = {{"t1", {1, 2}}, {"t2", {2, 2}}, {"t3", {3, 3}},
                                                               {"t4", {0, 2}}, {"t5", {1, 3}}, {"t6", {0, 1}},
                                                               {"t7", {1, 2}}};
  ASSERT_EQ(pt.size(), expected.size());
  for (const auto& [tid, vn] : expected) {
    EXPECT_EQ(pt.at(tid).nValid, vn.first) << tid;
    EXPECT_EQ(pt.at(tid).nGens, vn.second) << tid;
    EXPECT_DOUBLE_EQ(pt.at(tid).validFraction, static_cast<double>(vn.first) / vn.second) << tid;
  }
  auto two = perTemplateValidity(selected(), labels, 2);
  EXPECT_DOUBLE_EQ(two.at("t3").validFraction, 1.0);
  EXPECT_EQ(two.at("t3").nGens, 2);
  EXPECT_DOUBLE_EQ(two.at("t5").validFraction, 0.0);
  EXPECT_THROW(perTemplateValidity(selected(), labels, 0), Error);
}

TEST_F(EvalFixture, StatsMatchManifest) {
  auto manifest = nlohmann::json::parse(text::readFile(dataDir() / "eval_fixture/manifest.json"));
  auto s = datasetStats(selected());
  EXPECT_EQ(s, statsFromJson(manifest.at("output")));
  EXPECT_EQ(s.nGenerics, 3);
  EXPECT_EQ(s.nTotal, 15);
  EXPECT_EQ(statsFromJson(toJson(s)), s);
}

TEST_F(EvalFixture, EvaluateFillsReport) {
  auto r = evaluate(exs, &labels);
  EXPECT_TRUE(r.labeled);
  EXPECT_DOUBLE_EQ(r.precisionAtK.at(1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.precisionAtK.at(5), 8.0 / 15.0);
  EXPECT_DOUBLE_EQ(r.precisionAtKByKind.at("instantiation").at(5), 1.0 / 3.0);
  EXPECT_EQ(r.stats.nExceptions, 9);
  auto j = toJson(r);
  EXPECT_EQ(j.at("schema"), "genex.eval-report");
  EXPECT_FALSE(toText(r).empty());
  auto unlabeled = evaluate(exs, nullptr);
  EXPECT_FALSE(unlabeled.labeled);
  EXPECT_TRUE(unlabeled.precisionAtK.empty());
}

TEST_F(EvalFixture, MissingLabelReported) {
  auto partial = labels;
  partial.erase("g01:a1");
  try {
    precisionAtK(rankedByGeneric(exs), partial, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingLabel);
    EXPECT_NE(std::string(e.what()).find("g01:a1"), std::string::npos);
  }
}

TEST(Eval, EmptyInput) {
  auto s = datasetStats({});
  EXPECT_EQ(s.nGenerics, 0);
  EXPECT_EQ(s.nTotal, 0);
  EXPECT_TRUE(s.byTemplate.empty());
  EXPECT_DOUBLE_EQ(precisionAtK({}, {}, 1), 0.0);
  EXPECT_THROW(precisionAtK({}, {}, 0), Error);
}

TEST(Eval, LabelsCarryBothKinds) {
  auto l = labelsFromJsonl(
      "{\"schema\":\"genex.labels\"}\n"
      "{\"exemplarId\":\"a\",\"kind\":\"exception\",\"valid\":true}\n"
      "{\"exemplarId\":\"a\",\"kind\":\"instantiation\",\"valid\":false}\n");
  EXPECT_EQ(l.at("a").validException, true);
  EXPECT_EQ(l.at("a").validInstantiation, false);
  EXPECT_THROW(labelsFromJsonl("{\"exemplarId\":1}\n"), Error);
}

struct NliFixture : ::testing::Test {
  std::vector<Exemplar> all = loadExemplars(dataDir() / "eval_fixture/nli_exemplars.jsonl");
  LabelSet labels = loadLabels(dataDir() / "eval_fixture/nli_labels.jsonl");

  const AblationRow& row(const std::vector<AblationRow>& rows, const std::string& metric, const std::string& kind) {
    for (const auto& r : rows) {
      if (r.metric == metric && r.kind == kind) return r;
    }
    throw std::runtime_error("no row " + metric + "/" + kind);
  }
};

TEST_F(NliFixture, FilteredPrecisionPerMode) {
  using K = ExemplarKind;
  using M = NliFilterMode;
  auto p = [&](std::optional<K> k, M m) { return filteredPrecision(all, labels, k, m).value(); };
  EXPECT_DOUBLE_EQ(p(K::Exception, M::None), 0.4);
  EXPECT_DOUBLE_EQ(p(K::Exception, M::NliSim), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(p(K::Exception, M::NliNeu), 0.0);
  EXPECT_DOUBLE_EQ(p(K::Exception, M::NliSimPlusNeu), 0.5);
  EXPECT_DOUBLE_EQ(p(K::Instantiation, M::None), 0.5);
  EXPECT_DOUBLE_EQ(p(K::Instantiation, M::NliSim), 1.0);
  EXPECT_DOUBLE_EQ(p(K::Instantiation, M::NliNeu), 0.0);
  EXPECT_DOUBLE_EQ(p(K::Instantiation, M::NliSimPlusNeu), 0.6);
  EXPECT_DOUBLE_EQ(p(std::nullopt, M::None), 7.0 / 16.0);
  EXPECT_DOUBLE_EQ(p(std::nullopt, M::NliSim), 7.0 / 9.0);
}

TEST_F(NliFixture, AblationDeltas) {
  std::vector<Exemplar> sim;
  for (const auto& e : all) {
    if (nliKeeps(e.nli, e.kind, NliFilterMode::NliSim)) sim.push_back(e);
  }
  auto rows = ablationReport(all, sim, &labels);
  EXPECT_NEAR(row(rows, "valid-proportion", "all").delta, 49.0 / 144.0, 1e-12);
  EXPECT_NEAR(row(rows, "valid-proportion", "exception").delta, 4.0 / 15.0, 1e-12);
  EXPECT_NEAR(row(rows, "valid-proportion", "instantiation").delta, 0.5, 1e-12);
  EXPECT_NEAR(row(rows, "precision-gain[nli-sim]", "all").a, 49.0 / 144.0, 1e-12);
  EXPECT_NEAR(row(rows, "precision-gain[nli-sim]", "all").b, 0.0, 1e-12);
  EXPECT_EQ(row(rows, "unique-generations", "all").a, 16.0);
  EXPECT_EQ(row(rows, "unique-generations", "all").b, 9.0);
}

TEST_F(NliFixture, IdenticalRunsHaveZeroDeltas) {
  for (const auto& r : ablationReport(all, all, &labels)) EXPECT_EQ(r.delta, 0.0) << r.metric << "/" << r.kind;
  EXPECT_EQ(ablationReport(all, all).size(), 3u);
}

TEST_F(NliFixture, DifferentGenericsIsInputMismatch) {
  auto fewer = all;
  std::erase_if(fewer, [](const Exemplar& e) { return e.genericId == "s2"; });
  try {
    ablationReport(all, fewer);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InputMismatch);
  }
}

TEST(Eval, UniqueGenerationsNormalize) {
  Exemplar a, b, c;
  a.text = "Penguins cannot fly.";
  b.text = "penguins  cannot FLY";
  c.text = "Owls hunt.";
  c.kind = ExemplarKind::Exception;
  EXPECT_EQ(uniqueGenerations({a, b, c}), 2u);
  EXPECT_EQ(uniqueGenerations({a, b, c}, ExemplarKind::Exception), 1u);
}

}  // namespace
}  // namespace genex
