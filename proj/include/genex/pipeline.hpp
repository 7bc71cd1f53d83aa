// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "genex/bridge.hpp"
#include "genex/constraints.hpp"
#include "genex/corpus.hpp"
#include "genex/decode.hpp"
#include "genex/error.hpp"
#include "genex/eval.hpp"
#include "genex/filter.hpp"
#include "genex/lexicon.hpp"
#include "genex/lm.hpp"
#include "genex/rank.hpp"
#include "genex/stubs.hpp"
#include "genex/subtype.hpp"
#include "genex/templates.hpp"
#include "genex/text.hpp"

namespace genex {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

enum class ProviderKind { None, Stub, Bridge };

inline ProviderKind parseProviderKind(std::string_view s) {
  auto k = text::enumKey(s);
  if (k == "none" || k.empty()) return ProviderKind::None;
  if (k == "stub") return ProviderKind::Stub;
  if (k == "bridge") return ProviderKind::Bridge;
  throw Error(ErrorCode::ConfigurationError, "unknown provider kind '" + std::string(s) + "'");
}

struct ProviderSpec {
  ProviderKind kind = ProviderKind::None;
  fs::path path;
  std::string modelId;
  // Constant score for stub discriminators without a rule file.
  std::optional<double> constant;
};

struct PipelineConfig {
  nlohmann::json raw;
  fs::path baseDir;

  fs::path generics;
  fs::path kb;
  fs::path verbs;
  fs::path synonyms;
  fs::path hedges;
  fs::path humanReferents;
  fs::path subtypePrompts;
  fs::path connectives;
  std::map<KindCategory, fs::path> kindSeeds;

  DecoderConfig decoder;
  bool constrained = true;

  ProviderSpec lm, nli, viability, validityException, validityInstantiation, completion, infill;
  std::vector<std::string> bridgeCommand;

  int kbMaxDepth = 1;
  int lmSequences = 5;
  int mlmK = 5;
  int maxConceptSubtypes = 10;
  int maxPropertySubtypes = 10;

  double viabilityThreshold = 0.5;
  double validityThreshold = 0.5;
  int topN = 10;
  bool failOpen = false;
  NliFilterMode nliMode = NliFilterMode::None;

  fs::path outputDir = "out";
  std::uint64_t seed = 0;
  int workers = 1;

  static PipelineConfig fromJson(const nlohmann::json& j, const fs::path& base_dir) {
    PipelineConfig c;
    c.raw = j;
    c.baseDir = base_dir;
    try {
      if (j.value("schemaVersion", 1) != 1) throw Error(ErrorCode::ConfigurationError, "unsupported schemaVersion");
      auto path_of = [&](const nlohmann::json& obj, const char* key) -> fs::path {
        if (!obj.contains(key) || obj.at(key).is_null()) return {};
        fs::path p = obj.at(key).get<std::string>();
        return p.is_absolute() ? p : base_dir / p;
      };
      const auto paths = j.value("paths", nlohmann::json::object());
      c.generics = path_of(paths, "generics");
      c.kb = path_of(paths, "kb");
      c.verbs = path_of(paths, "verbs");
      c.synonyms = path_of(paths, "synonyms");
      c.hedges = path_of(paths, "hedges");
      c.humanReferents = path_of(paths, "humanReferents");
      c.subtypePrompts = path_of(paths, "subtypePrompts");
      c.connectives = path_of(paths, "connectives");
      const auto seeds = paths.value("kindSeeds", nlohmann::json::object());
      for (const auto& [name, v] : seeds.items()) {
        fs::path p = v.get<std::string>();
        c.kindSeeds[parseKindCategory(name)] = p.is_absolute() ? p : base_dir / p;
      }

      const auto d = j.value("decoder", nlohmann::json::object());
      c.decoder.beamSize = d.value("beamSize", c.decoder.beamSize);
      c.decoder.maxLen = d.value("maxLen", c.decoder.maxLen);
      c.decoder.satisfactionTolerance = d.value("satisfactionTolerance", c.decoder.satisfactionTolerance);
      c.decoder.lookaheadSteps = d.value("lookaheadSteps", c.decoder.lookaheadSteps);
      c.decoder.topKPrompts = d.value("topKPrompts", c.decoder.topKPrompts);
      c.decoder.topKOutputs = d.value("topKOutputs", c.decoder.topKOutputs);
      c.decoder.perPromptCap = d.value("perPromptCap", c.decoder.perPromptCap);
      c.decoder.temperature = d.value("temperature", c.decoder.temperature);
      c.decoder.stopSymbols = d.value("stopSymbols", std::vector<std::string>{".", "!", "?"});
      c.constrained = d.value("constrained", true);

      const auto prov = j.value("providers", nlohmann::json::object());
      auto spec_of = [&](const char* key) {
        ProviderSpec s;
        if (!prov.contains(key)) return s;
        const auto& pj = prov.at(key);
        s.kind = parseProviderKind(pj.value("kind", "none"));
        s.path = path_of(pj, "path");
        s.modelId = pj.value("modelId", "");
        if (pj.contains("constant")) s.constant = pj.at("constant").get<double>();
        return s;
      };
      c.lm = spec_of("lm");
      c.nli = spec_of("nli");
      c.viability = spec_of("viability");
      c.validityException = spec_of("validityException");
      c.validityInstantiation = spec_of("validityInstantiation");
      c.completion = spec_of("completion");
      c.infill = spec_of("infill");
      if (prov.contains("bridge")) {
        c.bridgeCommand = prov.at("bridge").value("command", std::vector<std::string>{});
      }

      const auto st = j.value("subtypes", nlohmann::json::object());
      c.kbMaxDepth = st.value("kbMaxDepth", c.kbMaxDepth);
      c.lmSequences = st.value("lmSequences", c.lmSequences);
      c.mlmK = st.value("mlmK", c.mlmK);
      c.maxConceptSubtypes = st.value("maxConceptSubtypes", c.maxConceptSubtypes);
      c.maxPropertySubtypes = st.value("maxPropertySubtypes", c.maxPropertySubtypes);

      const auto f = j.value("filter", nlohmann::json::object());
      c.viabilityThreshold = f.value("viabilityThreshold", c.viabilityThreshold);
      c.validityThreshold = f.value("validityThreshold", c.validityThreshold);
      c.topN = f.value("topN", c.topN);
      c.failOpen = f.value("failOpen", c.failOpen);
      c.nliMode = parseNliFilterMode(f.value("nliMode", "none"));

      if (j.contains("output")) c.outputDir = path_of(j.at("output"), "dir");
      c.seed = j.value("seed", std::uint64_t{0});
      c.decoder.seed = c.seed;
      c.workers = j.value("workers", 1);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigurationError, e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigurationError) throw;
      throw Error(ErrorCode::ConfigurationError, e.what());
    }
    return c;
  }

  static nlohmann::json readJson(const fs::path& path) {
    try {
      return nlohmann::json::parse(text::readFile(path));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigurationError, path.string() + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigurationError, e.what());
    }
  }

  static PipelineConfig load(const fs::path& path) {
    return fromJson(readJson(path), fs::absolute(path).parent_path());
  }

  // Stable hash of the effective configuration.
  std::string hash() const { return text::hex64(text::fnv1a64(raw.dump())); }

  bool usesBridge() const {
    for (const auto* s : {&lm, &nli, &viability, &validityException, &validityInstantiation, &completion, &infill}) {
      if (s->kind == ProviderKind::Bridge) return true;
    }
    return false;
  }

  // Every problem found, empty when the configuration is usable.
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    auto need = [&](const fs::path& p, const char* what) {
      if (p.empty()) {
        out.push_back(std::string(what) + ": path not set");
      } else if (!fs::exists(p)) {
        out.push_back(std::string(what) + ": " + p.string() + " does not exist");
      }
    };
    auto optional_path = [&](const fs::path& p, const char* what) {
      if (!p.empty() && !fs::exists(p)) out.push_back(std::string(what) + ": " + p.string() + " does not exist");
    };
    need(generics, "paths.generics");
    need(kb, "paths.kb");
    optional_path(verbs, "paths.verbs");
    optional_path(synonyms, "paths.synonyms");
    optional_path(hedges, "paths.hedges");
    optional_path(humanReferents, "paths.humanReferents");
    optional_path(subtypePrompts, "paths.subtypePrompts");
    optional_path(connectives, "paths.connectives");
    for (const auto& [k, p] : kindSeeds) need(p, "paths.kindSeeds");
    try {
      decoder.validate();
    } catch (const Error& e) {
      out.push_back(e.what());
    }
    auto provider = [&](const ProviderSpec& s, const char* what, bool required) {
      if (s.kind == ProviderKind::None) {
        if (required) out.push_back(std::string(what) + ": provider required");
        return;
      }
      if (s.kind == ProviderKind::Stub && !s.constant) need(s.path, what);
      if (s.kind == ProviderKind::Bridge && s.path.empty() && std::string(what) == "providers.lm") {
        out.push_back("providers.lm: bridge scorer needs a vocabulary path");
      }
    };
    provider(lm, "providers.lm", true);
    provider(nli, "providers.nli", true);
    provider(viability, "providers.viability", true);
    provider(validityException, "providers.validityException", true);
    provider(validityInstantiation, "providers.validityInstantiation", true);
    provider(completion, "providers.completion", false);
    provider(infill, "providers.infill", false);
    if (completion.kind != ProviderKind::None && subtypePrompts.empty()) {
      out.push_back("paths.subtypePrompts: required when a completion provider is configured");
    }
    if (usesBridge() && bridgeCommand.empty()) out.push_back("providers.bridge.command: required for bridge providers");
    if (kbMaxDepth < 1) out.push_back("subtypes.kbMaxDepth must be >= 1");
    if (lmSequences < 1 || mlmK < 1) out.push_back("subtypes.lmSequences and subtypes.mlmK must be >= 1");
    if (maxConceptSubtypes < 1 || maxPropertySubtypes < 1) out.push_back("subtypes.max*Subtypes must be >= 1");
    for (double t : {viabilityThreshold, validityThreshold}) {
      if (!(t >= 0.0 && t <= 1.0)) out.push_back("filter thresholds must be in [0,1]");
    }
    if (topN < 1) out.push_back("filter.topN must be >= 1");
    if (workers < 1) out.push_back("workers must be >= 1");
    if (outputDir.empty()) out.push_back("output.dir: not set");
    return out;
  }

  void validate() const {
    auto p = problems();
    if (!p.empty()) throw Error(ErrorCode::ConfigurationError, text::join(p, "; "));
  }
};

// ---------------------------------------------------------------------------
// Loaded resources and providers

struct Resources {
  Lexicon lexicon;
  EdgeStore kb;
  KindSeedLists seeds;
  SubtypePromptConfig subtypePrompts;
  ConnectiveConfig connectives;
  PreprocessOptions preprocess;

  std::unique_ptr<bridge::Client> bridgeClient;
  std::unique_ptr<LmScorer> lm;
  std::unique_ptr<NliProvider> nli;
  std::unique_ptr<DiscriminatorProvider> viability;
  std::unique_ptr<DiscriminatorProvider> validityException;
  std::unique_ptr<DiscriminatorProvider> validityInstantiation;
  std::unique_ptr<TextCompletionProvider> completion;
  std::unique_ptr<MaskInfillProvider> infill;

  static Resources load(const PipelineConfig& cfg) {
    Resources r;
    r.lexicon = Lexicon::load(cfg.verbs, cfg.synonyms);
    r.kb = EdgeStore::load(cfg.kb);
    for (const auto& [k, p] : cfg.kindSeeds) r.seeds[k] = loadSeedList(p);
    if (!cfg.subtypePrompts.empty()) r.subtypePrompts = parseSubtypePromptConfig(text::readFile(cfg.subtypePrompts));
    if (!cfg.connectives.empty()) r.connectives = ConnectiveConfig::parse(text::readFile(cfg.connectives));
    if (!cfg.hedges.empty()) r.preprocess.hedges = loadHedgeTable(cfg.hedges);
    if (!cfg.humanReferents.empty()) r.preprocess.humanReferents = loadSeedList(cfg.humanReferents);
    if (cfg.usesBridge()) {
      r.bridgeClient = std::make_unique<bridge::Client>(bridge::SubprocessTransport::spawn(cfg.bridgeCommand));
    }
    auto& client = r.bridgeClient;

    if (cfg.lm.kind == ProviderKind::Stub) {
      r.lm = std::make_unique<TableScorer>(TableScorer::load(cfg.lm.path));
    } else if (cfg.lm.kind == ProviderKind::Bridge) {
      auto words = text::readDataLines(cfg.lm.path);
      r.lm = std::make_unique<bridge::LmClient>(*client, Vocabulary(words, "</s>"));
    }

    if (cfg.nli.kind == ProviderKind::Stub) {
      r.nli = std::make_unique<HeuristicNli>(cfg.nli.path.empty() ? HeuristicNli() : HeuristicNli::load(cfg.nli.path));
    } else if (cfg.nli.kind == ProviderKind::Bridge) {
      r.nli = std::make_unique<bridge::NliClient>(*client);
    }

    auto discriminator = [&](const ProviderSpec& s, DiscriminatorKind kind) -> std::unique_ptr<DiscriminatorProvider> {
      if (s.kind == ProviderKind::Stub) {
        if (s.constant) return std::make_unique<RuleDiscriminator>(RuleDiscriminator::constant(kind, *s.constant));
        return std::make_unique<RuleDiscriminator>(RuleDiscriminator::load(kind, s.path));
      }
      if (s.kind == ProviderKind::Bridge) {
        return std::make_unique<bridge::DiscriminatorClient>(*client, kind,
                                                             s.modelId.empty() ? "bridge" : s.modelId);
      }
      return nullptr;
    };
    r.viability = discriminator(cfg.viability, DiscriminatorKind::Viability);
    r.validityException = discriminator(cfg.validityException, DiscriminatorKind::ValidityException);
    r.validityInstantiation = discriminator(cfg.validityInstantiation, DiscriminatorKind::ValidityInstantiation);

    if (cfg.completion.kind == ProviderKind::Stub) {
      r.completion = std::make_unique<TableCompletionProvider>(TableCompletionProvider::load(cfg.completion.path));
    } else if (cfg.completion.kind == ProviderKind::Bridge) {
      r.completion = std::make_unique<bridge::CompletionClient>(*client);
    }
    if (cfg.infill.kind == ProviderKind::Stub) {
      r.infill = std::make_unique<TableInfillProvider>(TableInfillProvider::load(cfg.infill.path));
    } else if (cfg.infill.kind == ProviderKind::Bridge) {
      r.infill = std::make_unique<bridge::InfillClient>(*client);
    }
    return r;
  }
};

// ---------------------------------------------------------------------------
// Per-generic processing

struct StageTally {
  int in = 0;
  int passed = 0;
  int rejected = 0;

  StageTally& operator+=(const StageTally& o) {
    in += o.in;
    passed += o.passed;
    rejected += o.rejected;
    return *this;
  }
};

struct RunTallies {
  StageTally templates;   // enabled templates; passed = produced >= 1 candidate
  StageTally prompts;     // built prompts; passed = selected for decoding
  StageTally decode;      // finished hypotheses; passed = usable completions
  StageTally rank;        // unique completions; passed = kept as candidates
  StageTally nli;         // candidates; passed = kept by the NLI filter mode
  StageTally viability;   // scored candidates
  StageTally validity;    // viable exemplars; passed = selected

  RunTallies& operator+=(const RunTallies& o) {
    templates += o.templates;
    prompts += o.prompts;
    decode += o.decode;
    rank += o.rank;
    nli += o.nli;
    viability += o.viability;
    validity += o.validity;
    return *this;
  }
};

enum class GenericOutcome { Processed, Excluded, Skipped };

struct GenericResult {
  std::string genericId;
  GenericOutcome outcome = GenericOutcome::Processed;
  std::string reason;
  std::vector<Exemplar> exemplars;
  RunTallies tallies;
  std::vector<std::string> log;
  // Candidates per enabled template, for templates that had subtypes available.
  std::map<std::string, int> candidatesByTemplate;
};

namespace detail {

inline std::string subtypeKey(const Lexicon& lex, std::string_view phrase) {
  return lex.lemma(stripDeterminers(phrase));
}

inline std::vector<SubtypeRecord> capped(std::vector<SubtypeRecord> recs, int n) {
  if (recs.size() > static_cast<std::size_t>(n)) recs.resize(static_cast<std::size_t>(n));
  return recs;
}

}  // namespace detail

// Subtypes of the generic's concept: knowledge base, then LM prompting and
// infilling where configured. A provider failure falls back to what the
// remaining sources produced and is logged.
inline std::vector<SubtypeRecord> conceptSubtypes(const Generic& g, const PipelineConfig& cfg, const Resources& res,
                                                  std::vector<std::string>& log) {
  auto term = detail::subtypeKey(res.lexicon, g.conceptSpan.text);
  auto recs = kbSubtypes(term, res.kb, cfg.kbMaxDepth, res.lexicon);
  auto category = assignKindCategory(term, res.seeds, g.text);
  if (res.completion && category != KindCategory::Person) {
    try {
      auto lm = lmSubtypes(term, category, *res.completion, cfg.lmSequences, res.subtypePrompts, res.lexicon);
      recs.insert(recs.end(), lm.begin(), lm.end());
    } catch (const Error& e) {
      log.push_back(g.id + ": LM subtypes unavailable, using remaining sources: " + e.what());
    }
  }
  if (res.infill) {
    try {
      auto mlm = mlmSubtypes(term, *res.infill, cfg.mlmK, res.lexicon);
      recs.insert(recs.end(), mlm.begin(), mlm.end());
    } catch (const Error& e) {
      log.push_back(g.id + ": infill subtypes unavailable: " + e.what());
    }
  }
  return detail::capped(dedupeSubtypes(std::move(recs), res.lexicon), cfg.maxConceptSubtypes);
}

// Property subtypes come from the knowledge base and infilling only.
inline std::vector<SubtypeRecord> propertySubtypes(const Generic& g, const PipelineConfig& cfg, const Resources& res,
                                                   std::vector<std::string>& log) {
  auto phrase = detail::stripDeterminers(g.property.text);
  std::vector<SubtypeRecord> recs;
  std::set<std::string> keys = {text::toLower(phrase), detail::subtypeKey(res.lexicon, phrase)};
  for (const auto& k : keys) {
    auto kb = kbSubtypes(k, res.kb, cfg.kbMaxDepth, res.lexicon);
    for (auto& r : kb) r.parent = phrase;
    recs.insert(recs.end(), kb.begin(), kb.end());
  }
  if (res.infill) {
    try {
      auto mlm = mlmSubtypes(detail::subtypeKey(res.lexicon, phrase), *res.infill, cfg.mlmK, res.lexicon);
      recs.insert(recs.end(), mlm.begin(), mlm.end());
    } catch (const Error& e) {
      log.push_back(g.id + ": infill property subtypes unavailable: " + e.what());
    }
  }
  return detail::capped(dedupeSubtypes(std::move(recs), res.lexicon), cfg.maxPropertySubtypes);
}

// Templates for a generic; a characterizing generic without an
// interpretation takes the union over both readings.
inline std::vector<TemplateSpec> enabledTemplates(const Generic& g) {
  return templatesFor(g.category, g.category == GenericCategory::Characterizing ? g.interpretation : std::nullopt);
}

inline std::string exemplarText(const Prompt& p, const std::vector<std::string>& completion) {
  auto ws = text::words(p.stem);
  ws.insert(ws.end(), completion.begin(), completion.end());
  return text::capitalizeFirst(text::detokenize(ws));
}

// Decodes, ranks and filters one generic. Errors confined to one template
// are logged and the template is skipped.
inline GenericResult processGeneric(const GenericRecord& rec, const PipelineConfig& cfg, const Resources& res) {
  GenericResult out;
  out.genericId = rec.id;
  auto& log = out.log;
  auto skip = [&](GenericOutcome o, std::string why) {
    out.outcome = o;
    out.reason = std::move(why);
    log.push_back(rec.id + ": " + std::string(o == GenericOutcome::Excluded ? "excluded" : "skipped") + ": " +
                  out.reason);
    return out;
  };

  std::pair<std::string, PreprocessReport> pre;
  try {
    pre = preprocess(rec.text, res.preprocess);
  } catch (const Error& e) {
    return skip(GenericOutcome::Skipped, e.what());
  }
  if (pre.second.excluded) {
    return skip(GenericOutcome::Excluded,
                std::string(exclusionReasonName(*pre.second.reason)) + " (" + pre.second.detail + ")");
  }
  Generic g;
  try {
    g = parseGeneric(rec, pre.first, RuleSpanProvider(res.lexicon));
  } catch (const Error& e) {
    return skip(GenericOutcome::Skipped, e.what());
  }

  const auto& vocab = res.lm->vocabulary();
  auto concept_subtypes = conceptSubtypes(g, cfg, res, log);
  auto property_subtypes = propertySubtypes(g, cfg, res, log);

  std::vector<Exemplar> candidates;
  for (const auto& t : enabledTemplates(g)) {
    out.tallies.templates.in++;
    int produced = 0;
    bool has_subtypes = (t.conceptSlot != ConceptSlot::Subtype || !concept_subtypes.empty()) &&
                        (t.propertySlot != PropertySlot::RequiredSubtype || !property_subtypes.empty());
    try {
      auto cs = compileConstraints(g, t, property_subtypes, res.lexicon);
      auto prompts = buildPrompts(g, t, concept_subtypes, res.connectives, res.lexicon);
      out.tallies.prompts.in += static_cast<int>(prompts.size());
      std::vector<Prompt> encodable;
      for (auto& p : prompts) {
        try {
          encodeText(vocab, p.text);
          encodable.push_back(std::move(p));
        } catch (const Error& e) {
          log.push_back(p.id + ": prompt not scorable: " + e.what());
        }
      }
      auto selected = selectPrompts(std::move(encodable), *res.lm, cfg.decoder);
      out.tallies.prompts.passed += static_cast<int>(selected.size());
      out.tallies.prompts.rejected += static_cast<int>(prompts.size() - selected.size());

      std::vector<DecodedOutput> decoded;
      std::set<std::string> seen;
      for (const auto& p : selected) {
        auto ids = encodeText(vocab, p.text);
        auto dcfg = cfg.decoder;
        dcfg.seed = cfg.seed ^ text::fnv1a64(p.id);
        auto hyps = cfg.constrained ? constrainedDecode(*res.lm, ids, cs, dcfg) : beamDecode(*res.lm, ids, dcfg);
        for (const auto& h : hyps) {
          out.tallies.decode.in++;
          auto words = h.words(vocab);
          if (words.empty() || (cfg.constrained && !h.allSatisfied(cs))) {
            out.tallies.decode.rejected++;
            continue;
          }
          out.tallies.decode.passed++;
          auto text_out = exemplarText(p, words);
          out.tallies.rank.in++;
          if (!seen.insert(text::normalizeForUniqueness(text_out)).second) {
            out.tallies.rank.rejected++;
            continue;
          }
          decoded.push_back({text_out, p.id});
        }
      }
      if (decoded.empty()) {
        log.push_back(g.id + "/" + t.id + ": no usable completions");
      } else {
        int before = static_cast<int>(decoded.size());
        auto ranked = rankOutputs(decoded, t.id, *res.lm, *res.nli, g, t.exemplarKind, cfg.decoder);
        out.tallies.rank.passed += static_cast<int>(ranked.size());
        out.tallies.rank.rejected += before - static_cast<int>(ranked.size());
        for (std::size_t i = 0; i < ranked.size(); ++i) {
          Exemplar e;
          e.id = g.id + ":" + t.id + ":" + std::to_string(i);
          e.genericId = g.id;
          e.genericText = g.text;
          e.templateId = t.id;
          e.promptId = ranked[i].promptId;
          e.kind = t.exemplarKind;
          e.text = ranked[i].text;
          e.combinedRank = ranked[i].combined;
          e.perplexity = ranked[i].perplexity;
          e.nli = ranked[i].nli;
          candidates.push_back(std::move(e));
          ++produced;
        }
      }
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::NoPromptsForTemplate:
        case ErrorCode::ConstraintCompileError:
        case ErrorCode::ScorerMismatch:
        case ErrorCode::RankingError:
        case ErrorCode::ProtocolError:
          log.push_back(g.id + "/" + t.id + ": template skipped: " + e.what());
          break;
        default:
          throw;
      }
    }
    if (produced > 0) {
      out.tallies.templates.passed++;
    } else {
      out.tallies.templates.rejected++;
    }
    if (has_subtypes) out.candidatesByTemplate[t.id] = produced;
  }

  for (auto& e : candidates) {
    out.tallies.nli.in++;
    if (nliKeeps(e.nli, e.kind, cfg.nliMode)) {
      out.tallies.nli.passed++;
    } else {
      e.reject(RejectStage::Nli);
      out.tallies.nli.rejected++;
    }
  }
  for (const auto& e : candidates) out.tallies.viability.in += e.status == ExemplarStatus::Candidate ? 1 : 0;
  candidates = viabilityFilter(std::move(candidates), *res.viability, cfg.viabilityThreshold, cfg.failOpen);
  for (const auto& e : candidates) {
    if (e.rejectedAt == RejectStage::Viability || e.rejectedAt == RejectStage::ScorerUnavailable) {
      out.tallies.viability.rejected++;
    }
    if (e.status == ExemplarStatus::Viable) {
      out.tallies.viability.passed++;
      out.tallies.validity.in++;
    }
  }
  ValidityScorers scorers{res.validityInstantiation.get(), res.validityException.get()};
  candidates = validitySelect(std::move(candidates), scorers, cfg.topN, cfg.validityThreshold);
  for (const auto& e : candidates) {
    if (e.status == ExemplarStatus::SelectedValid) out.tallies.validity.passed++;
    if (e.rejectedAt == RejectStage::Validity) out.tallies.validity.rejected++;
  }
  out.exemplars = std::move(candidates);
  return out;
}

// ---------------------------------------------------------------------------
// Runs

struct RunResult {
  std::vector<Exemplar> exemplars;
  nlohmann::json manifest;
  std::vector<std::string> log;
  int skipped = 0;

  bool partialFailure() const { return skipped > 0; }
};

inline nlohmann::json toJson(const StageTally& t) {
  return {{"in", t.in}, {"passed", t.passed}, {"rejected", t.rejected}};
}

inline nlohmann::json toJson(const RunTallies& t) {
  return {{"templates", toJson(t.templates)}, {"prompts", toJson(t.prompts)},     {"decode", toJson(t.decode)},
          {"rank", toJson(t.rank)},           {"nli", toJson(t.nli)},             {"viability", toJson(t.viability)},
          {"validity", toJson(t.validity)}};
}

inline std::string manifestHash(nlohmann::json manifest) {
  manifest.erase("manifestHash");
  return text::hex64(text::fnv1a64(manifest.dump()));
}

// Runs every generic through the pipeline on a bounded worker pool. Results
// are assembled in input order, so output does not depend on scheduling.
inline RunResult generate(const PipelineConfig& cfg, const Resources& res) {
  auto records = loadGenericRecords(cfg.generics);
  std::vector<std::optional<GenericResult>> results(records.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      auto i = next.fetch_add(1);
      if (i >= records.size()) return;
      try {
        results[i] = processGeneric(records[i], cfg, res);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigurationError || e.code() == ErrorCode::IoError) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!failure) failure = std::current_exception();
          return;
        }
        GenericResult r;
        r.genericId = records[i].id;
        r.outcome = GenericOutcome::Skipped;
        r.reason = e.what();
        r.log.push_back(records[i].id + ": skipped: " + r.reason);
        results[i] = std::move(r);
      }
    }
  };
  auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), std::max<std::size_t>(1, records.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  RunResult run;
  RunTallies totals;
  int processed = 0, excluded = 0;
  nlohmann::json skipped = nlohmann::json::array();
  nlohmann::json per_generic = nlohmann::json::object();
  for (auto& r : results) {
    run.log.insert(run.log.end(), r->log.begin(), r->log.end());
    totals += r->tallies;
    switch (r->outcome) {
      case GenericOutcome::Processed: ++processed; break;
      case GenericOutcome::Excluded: ++excluded; break;
      case GenericOutcome::Skipped: ++run.skipped; break;
    }
    if (r->outcome != GenericOutcome::Processed) {
      skipped.push_back({{"id", r->genericId},
                         {"outcome", r->outcome == GenericOutcome::Excluded ? "excluded" : "skipped"},
                         {"reason", r->reason}});
    } else {
      per_generic[r->genericId] = {{"candidatesByTemplate", r->candidatesByTemplate}};
    }
    for (auto& e : r->exemplars) run.exemplars.push_back(std::move(e));
  }

  std::vector<Exemplar> selected;
  for (const auto& e : run.exemplars) {
    if (e.status == ExemplarStatus::SelectedValid) selected.push_back(e);
  }
  auto& m = run.manifest;
  m["schema"] = "genex.manifest";
  m["version"] = 1;
  m["configHash"] = cfg.hash();
  m["seed"] = cfg.seed;
  m["constrained"] = cfg.constrained;
  m["generics"] = {{"total", records.size()}, {"processed", processed}, {"excluded", excluded}, {"skipped", run.skipped}};
  m["stages"] = toJson(totals);
  m["perGeneric"] = per_generic;
  m["excludedOrSkipped"] = skipped;
  m["exemplars"] = {{"written", run.exemplars.size()}, {"hash", text::hex64(text::fnv1a64(exemplarsToJsonl(run.exemplars)))}};
  m["output"] = toJson(datasetStats(selected));
  m["manifestHash"] = manifestHash(m);
  return run;
}

inline void writeFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

struct GenerateFiles {
  fs::path exemplars;
  fs::path manifest;
};

inline GenerateFiles outputFiles(const PipelineConfig& cfg) {
  return {cfg.outputDir / "exemplars.jsonl", cfg.outputDir / "manifest.json"};
}

// Validates the configuration, runs generation and writes exemplars.jsonl
// and manifest.json into the output directory.
inline RunResult runGenerate(const PipelineConfig& cfg) {
  cfg.validate();
  auto res = Resources::load(cfg);
  auto run = generate(cfg, res);
  std::error_code ec;
  fs::create_directories(cfg.outputDir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + cfg.outputDir.string() + ": " + ec.message());
  auto files = outputFiles(cfg);
  writeFile(files.exemplars, exemplarsToJsonl(run.exemplars));
  writeFile(files.manifest, run.manifest.dump(2) + "\n");
  return run;
}

struct EvalFiles {
  fs::path json;
  fs::path text;
};

// Evaluates a run's exemplar file. With labels, precision and per-template
// validity are included; with a comparison run, an ablation table.
inline EvalReport runEval(const fs::path& exemplars_path, const std::optional<fs::path>& labels_path,
                          const std::optional<fs::path>& comparison_path, const fs::path& out_dir,
                          int n_per_template = 10) {
  auto exs = loadExemplars(exemplars_path);
  std::optional<LabelSet> labels;
  if (labels_path) labels = loadLabels(*labels_path);
  auto report = evaluate(exs, labels ? &*labels : nullptr, {1, 5}, n_per_template);
  if (comparison_path) {
    auto other = loadExemplars(*comparison_path);
    report.ablationRows = ablationReport(other, exs, labels ? &*labels : nullptr);
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  writeFile(out_dir / "report.json", toJson(report).dump(2) + "\n");
  writeFile(out_dir / "report.txt", toText(report));
  return report;
}

}  // namespace genex
