// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "genex/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct Overrides {
  std::string generics;
  std::string kb;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> beamSize;
  std::optional<int> maxLen;
  std::optional<int> topN;
  std::string nliMode;
  bool unconstrained = false;
  bool failOpen = false;
};

void addOverrideFlags(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--generics", o.generics, "Generics JSON-lines file");
  cmd.add_option("--kb", o.kb, "Knowledge-base edge file");
  cmd.add_option("--out", o.out, "Output directory");
  cmd.add_option("--seed", o.seed, "Seed for stochastic components");
  cmd.add_option("--workers", o.workers, "Worker threads");
  cmd.add_option("--beam-size", o.beamSize, "Decoder beam size");
  cmd.add_option("--max-len", o.maxLen, "Maximum completion length in words");
  cmd.add_option("--top-n", o.topN, "Exemplars selected per generic and kind");
  cmd.add_option("--nli-mode", o.nliMode, "NLI filter: none, nli-sim, nli-neu, nli-sim+neu");
  cmd.add_flag("--unconstrained", o.unconstrained, "Plain beam search without lexical constraints");
  cmd.add_flag("--fail-open", o.failOpen, "Pass exemplars through when a discriminator is unavailable");
}

// Flags are written into the configuration JSON so they take part in the
// configuration hash. Override paths are relative to the working directory.
genex::PipelineConfig loadConfig(const std::string& path, const Overrides& o) {
  auto j = genex::PipelineConfig::readJson(path);
  auto abs = [](const std::string& p) { return std::filesystem::absolute(p).string(); };
  if (!o.generics.empty()) j["paths"]["generics"] = abs(o.generics);
  if (!o.kb.empty()) j["paths"]["kb"] = abs(o.kb);
  if (!o.out.empty()) j["output"]["dir"] = abs(o.out);
  if (o.seed) j["seed"] = *o.seed;
  if (o.workers) j["workers"] = *o.workers;
  if (o.beamSize) j["decoder"]["beamSize"] = *o.beamSize;
  if (o.maxLen) j["decoder"]["maxLen"] = *o.maxLen;
  if (o.topN) j["filter"]["topN"] = *o.topN;
  if (!o.nliMode.empty()) j["filter"]["nliMode"] = o.nliMode;
  if (o.unconstrained) j["decoder"]["constrained"] = false;
  if (o.failOpen) j["filter"]["failOpen"] = true;
  return genex::PipelineConfig::fromJson(j, std::filesystem::absolute(path).parent_path());
}

int exitCodeFor(const genex::Error& e) {
  return e.code() == genex::ErrorCode::ConfigurationError ? kExitConfig : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate and evaluate exemplars for generic statements"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Print the run log to stderr");

  std::string config_path;
  Overrides overrides;
  auto* generate = app.add_subcommand("generate", "Run the generation pipeline");
  generate->add_option("-c,--config", config_path, "Pipeline configuration (JSON)")->required();
  addOverrideFlags(*generate, overrides);

  std::string exemplars_path, labels_path, compare_path, eval_out;
  int n_per_template = 10;
  auto* eval = app.add_subcommand("eval", "Evaluate an exemplar file");
  eval->add_option("-e,--exemplars", exemplars_path, "Exemplars JSON-lines file")->required();
  eval->add_option("-l,--labels", labels_path, "Gold labels JSON-lines file");
  eval->add_option("--compare", compare_path, "Comparison run (A); the evaluated run is B");
  eval->add_option("-o,--out", eval_out, "Report directory")->required();
  eval->add_option("--n-per-template", n_per_template, "Generations counted per template");

  std::string run_a, run_b, ablate_labels, ablate_out;
  auto* ablate = app.add_subcommand("ablate", "Compare two runs");
  ablate->add_option("--a", run_a, "Baseline run exemplars")->required();
  ablate->add_option("--b", run_b, "Compared run exemplars")->required();
  ablate->add_option("-l,--labels", ablate_labels, "Gold labels JSON-lines file");
  ablate->add_option("-o,--out", ablate_out, "Directory for ablation.json and ablation.txt");

  std::string stats_path;
  bool stats_all = false;
  auto* stats = app.add_subcommand("stats", "Dataset statistics for an exemplar file");
  stats->add_option("-e,--exemplars", stats_path, "Exemplars JSON-lines file")->required();
  stats->add_flag("--all", stats_all, "Count every exemplar, not only selected ones");

  std::string validate_path;
  Overrides validate_overrides;
  auto* validate = app.add_subcommand("validate-config", "Check a pipeline configuration");
  validate->add_option("-c,--config", validate_path, "Pipeline configuration (JSON)")->required();
  addOverrideFlags(*validate, validate_overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (generate->parsed()) {
      auto cfg = loadConfig(config_path, overrides);
      auto run = genex::runGenerate(cfg);
      if (verbose) {
        for (const auto& line : run.log) std::cerr << line << "\n";
      }
      auto files = genex::outputFiles(cfg);
      std::cout << "wrote " << run.exemplars.size() << " exemplars to " << files.exemplars.string() << "\n";
      std::cout << "manifest " << files.manifest.string() << " (" << run.manifest["manifestHash"].get<std::string>()
                << ")\n";
      if (run.partialFailure()) {
        std::cerr << run.skipped << " generic(s) skipped; see manifest\n";
        return kExitPartial;
      }
      return kExitOk;
    }
    if (eval->parsed()) {
      auto to_opt = [](const std::string& s) {
        return s.empty() ? std::nullopt : std::optional<std::filesystem::path>(s);
      };
      auto report = genex::runEval(exemplars_path, to_opt(labels_path), to_opt(compare_path), eval_out, n_per_template);
      std::cout << genex::toText(report);
      return kExitOk;
    }
    if (ablate->parsed()) {
      auto a = genex::loadExemplars(run_a);
      auto b = genex::loadExemplars(run_b);
      std::optional<genex::LabelSet> labels;
      if (!ablate_labels.empty()) labels = genex::loadLabels(ablate_labels);
      auto rows = genex::ablationReport(a, b, labels ? &*labels : nullptr);
      auto table = genex::ablationText(rows);
      std::cout << table;
      if (!ablate_out.empty()) {
        genex::EvalReport r;
        r.ablationRows = rows;
        std::filesystem::create_directories(ablate_out);
        genex::writeFile(std::filesystem::path(ablate_out) / "ablation.json", genex::toJson(r)["ablation"].dump(2) + "\n");
        genex::writeFile(std::filesystem::path(ablate_out) / "ablation.txt", table);
      }
      return kExitOk;
    }
    if (stats->parsed()) {
      auto exs = genex::loadExemplars(stats_path);
      std::vector<genex::Exemplar> counted;
      for (auto& e : exs) {
        if (stats_all || e.status == genex::ExemplarStatus::SelectedValid) counted.push_back(std::move(e));
      }
      std::cout << genex::toJson(genex::datasetStats(counted)).dump(2) << "\n";
      return kExitOk;
    }
    if (validate->parsed()) {
      auto cfg = loadConfig(validate_path, validate_overrides);
      auto problems = cfg.problems();
      for (const auto& p : problems) std::cerr << "config: " << p << "\n";
      if (!problems.empty()) return kExitConfig;
      std::cout << "configuration ok (hash " << cfg.hash() << ")\n";
      return kExitOk;
    }
  } catch (const genex::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exitCodeFor(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
