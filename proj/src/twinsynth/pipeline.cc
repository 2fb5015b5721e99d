// Copyright 2026 The TwinSynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "twinsynth/pipeline.h"

#include <cmath>
#include <utility>
#include <vector>

#include "spdlog/spdlog.h"
#include "twinsynth/checkpoint.h"
#include "twinsynth/common.h"
#include "twinsynth/corpus.h"
#include "twinsynth/eval.h"
#include "twinsynth/io_util.h"
#include "twinsynth/rng.h"
#include "twinsynth/synthesis.h"

namespace twinsynth {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json PrivacySummary(const PrivacyReport& r) {
  return {{"private", r.is_private},
          {"epsilon", NumberToJson(r.epsilon)},
          {"delta", r.delta},
          {"sigma", r.sigma},
          {"q", r.sampling_rate},
          {"steps", r.steps},
          {"conversion", ConversionName(r.conversion)}};
}

Corpus LoadCorpus(const fs::path& path,
                  const std::shared_ptr<const AttributeSchema>& schema,
                  CorpusRole role) {
  if (!fs::is_regular_file(path)) {
    throw IoError("corpus file not found: " + path.string());
  }
  return LoadJsonl(path, schema, role);
}

Corpus WithRole(const Corpus& c, CorpusRole role) {
  return Corpus(c.records(), c.schema_ptr(), role);
}

}  // namespace

fs::path MetadataPath(const fs::path& synthetic) {
  fs::path p = synthetic;
  p.replace_extension(".meta.json");
  return p;
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
  config_.Validate();
  hash_ = ConfigHash(config_);
}

json Pipeline::Stamp(json j) const {
  j["seed"] = config_.seed;
  j["config_hash"] = hash_;
  return j;
}

json Pipeline::GenCorpus() const {
  std::error_code ec;
  fs::create_directories(config_.output_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " +
                  config_.output_dir.string() + ": " + ec.message());
  }
  const auto schema = BuildSchema(config_);
  const CorpusSourceConfig& src = config_.corpus;
  std::optional<Corpus> priv, pub, test;
  if (src.kind == CorpusSourceConfig::Kind::kToy) {
    try {
      ToyCorpora toy = GenerateToyCorpus(ResolveToySpec(config_), schema);
      priv.emplace(std::move(toy.private_corpus));
      pub.emplace(std::move(toy.public_corpus));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInvalidArgument) throw;
      throw ConfigError(std::string("corpus.toy: ") + e.what());
    }
  } else {
    priv.emplace(LoadJsonl(src.private_path, schema, CorpusRole::kTrain));
    pub.emplace(LoadJsonl(src.public_path, schema, CorpusRole::kTrain));
    if (src.test_path) {
      test.emplace(LoadJsonl(*src.test_path, schema, CorpusRole::kTest));
    }
  }
  for (const auto& r : priv->records()) schema->ValidateComplete(r.attrs);
  Corpus train = *priv;
  if (!test) {
    if (src.train_fraction < 1.0) {
      auto [a, b] = Split(*priv, src.train_fraction,
                          DeriveSeed(config_.seed, Stream::kSplit));
      train = std::move(a);
      test.emplace(WithRole(b, CorpusRole::kTest));
    } else {
      test.emplace(WithRole(*priv, CorpusRole::kTest));
    }
  }
  WriteJsonl(*pub, Artifact(ArtifactNames::kPublic));
  WriteJsonl(train, Artifact(ArtifactNames::kPrivateTrain));
  WriteJsonl(*test, Artifact(ArtifactNames::kPrivateTest));
  json manifest = Stamp(
      {{"stage", "gen-corpus"},
       {"source", src.kind == CorpusSourceConfig::Kind::kToy ? "toy" : "jsonl"},
       {"files",
        {{"public", ArtifactNames::kPublic},
         {"private_train", ArtifactNames::kPrivateTrain},
         {"private_test", ArtifactNames::kPrivateTest}}},
       {"counts",
        {{"public", pub->size()},
         {"private_train", train.size()},
         {"private_test", test->size()}}},
       {"train_fraction", src.train_fraction},
       {"canaries", AuditCanaries(config_)}});
  WriteJsonFile(Artifact(ArtifactNames::kCorpusManifest), manifest);
  spdlog::info("gen-corpus: {} public, {} train, {} test records", pub->size(),
               train.size(), test->size());
  return manifest;
}

json Pipeline::Train() const {
  const auto schema = BuildSchema(config_);
  const PromptTemplate tmpl(config_.template_text, *schema);
  const Corpus pub =
      LoadCorpus(Artifact(ArtifactNames::kPublic), schema, CorpusRole::kTrain);
  const Corpus train = LoadCorpus(Artifact(ArtifactNames::kPrivateTrain),
                                  schema, CorpusRole::kTrain);
  TrainPlan plan = config_.train;
  plan.seed = config_.seed;
  TrainResult result = twinsynth::Train(plan, pub, train, tmpl, *schema,
                                        DeclaredPublicTokens(config_));
  json ledger = Stamp(
      {{"stage", "train"}, {"privacy", PrivacyReportToJson(result.privacy)}});
  WriteJsonFile(Artifact(ArtifactNames::kLedger), ledger);
  SaveCheckpoint(Checkpoint{std::move(result.model), result.privacy,
                            plan.loss.lambda, config_.seed, hash_},
                 Artifact(ArtifactNames::kCheckpoint));
  spdlog::info("train: sigma {} spent epsilon {}", result.privacy.sigma,
               result.privacy.epsilon);
  return Stamp({{"stage", "train"},
                {"checkpoint", ArtifactNames::kCheckpoint},
                {"ledger", ArtifactNames::kLedger},
                {"privacy", PrivacySummary(result.privacy)}});
}

json Pipeline::Generate(const std::optional<fs::path>& checkpoint) const {
  const fs::path ck_path =
      checkpoint.value_or(Artifact(ArtifactNames::kCheckpoint));
  Checkpoint ck = LoadCheckpoint(ck_path);
  if (ck.config_hash != hash_) {
    spdlog::warn("checkpoint {} was trained under config {} (current {})",
                 ck_path.string(), ck.config_hash, hash_);
  }
  // The ledger leaves the process before any synthetic record does.
  WriteJsonFile(Artifact(ArtifactNames::kLedger),
                Stamp({{"stage", "train"},
                       {"privacy", PrivacyReportToJson(ck.privacy)}}));

  std::size_t total = 0;
  if (config_.generate.total) {
    total = *config_.generate.total;
  } else {
    const fs::path m = Artifact(ArtifactNames::kCorpusManifest);
    if (!fs::is_regular_file(m)) {
      throw ConfigError(
          "generate.total is unset and no corpus manifest gives |D_train|");
    }
    const auto n =
        ReadJsonFile(m).at("counts").at("private_train").get<double>();
    total = static_cast<std::size_t>(
        std::llround(config_.generate.total_multiplier * n));
  }
  GenerationPlan plan;
  plan.total = total;
  plan.distribution = config_.generate.distribution;
  plan.sampler = config_.generate.sampler;
  plan.min_words = config_.generate.min_words;
  plan.seed = config_.seed;
  const auto schema = BuildSchema(config_);
  const PromptTemplate tmpl(config_.template_text, *schema);
  GenerationResult g = twinsynth::Generate(ck.model, plan, tmpl, schema);
  if (!g.flagged.empty()) {
    spdlog::warn("generate: {} records kept after {} failed attempts",
                 g.flagged.size(), GenerationPlan::kMaxAttempts);
  }
  WriteJsonl(g.corpus, Artifact(ArtifactNames::kSynthetic));
  json meta = Stamp({{"stage", "generate"},
                     {"epsilon", NumberToJson(ck.privacy.epsilon)},
                     {"delta", ck.privacy.delta},
                     {"sigma", ck.privacy.sigma},
                     {"q", ck.privacy.sampling_rate},
                     {"steps", ck.privacy.steps},
                     {"lambda", ck.lambda},
                     {"nucleus_p", plan.sampler.nucleus_p},
                     {"seeds",
                      {{"master", config_.seed},
                       {"checkpoint", ck.seed},
                       {"checkpoint_config_hash", ck.config_hash}}},
                     {"total", total},
                     {"counts", g.counts},
                     {"flagged", g.flagged}});
  WriteJsonFile(Artifact(ArtifactNames::kSyntheticMeta), meta);
  spdlog::info("generate: {} records", g.corpus.size());
  return meta;
}

json Pipeline::Evaluate(const EvaluateInputs& in) const {
  const auto schema = BuildSchema(config_);
  const fs::path syn_path =
      in.synthetic.value_or(Artifact(ArtifactNames::kSynthetic));
  const Corpus synthetic = LoadCorpus(syn_path, schema, CorpusRole::kSynthetic);
  if (synthetic.empty()) {
    throw RuntimeError("synthetic corpus " + syn_path.string() +
                       " is empty; nothing to evaluate");
  }
  const Corpus train =
      LoadCorpus(in.real_train.value_or(Artifact(ArtifactNames::kPrivateTrain)),
                 schema, CorpusRole::kTrain);
  const Corpus test =
      LoadCorpus(in.real_test.value_or(Artifact(ArtifactNames::kPrivateTest)),
                 schema, CorpusRole::kTest);

  std::size_t flagged = 0;
  json privacy = nullptr;
  const fs::path meta_path = MetadataPath(syn_path);
  if (fs::is_regular_file(meta_path)) {
    const json meta = ReadJsonFile(meta_path);
    flagged = meta.at("flagged").size();
    privacy = {{"epsilon", meta.at("epsilon")}, {"delta", meta.at("delta")},
               {"sigma", meta.at("sigma")},     {"q", meta.at("q")},
               {"steps", meta.at("steps")},     {"lambda", meta.at("lambda")}};
  }

  AuditOptions options;
  options.canaries = AuditCanaries(config_);
  options.utility = config_.evaluate.utility;
  options.dp_classifier = config_.evaluate.dp_classifier;
  options.duplicates = config_.evaluate.duplicates;
  options.similarity = config_.evaluate.similarity;
  options.classifier = config_.evaluate.classifier;
  options.dp_plan = config_.evaluate.dp_classifier_plan;
  if (config_.evaluate.dp_classifier_epsilon_follows_train) {
    options.dp_plan.epsilon = config_.train.target_epsilon;
  }
  options.dp_plan.seed = DeriveSeed(config_.seed, Stream::kClassifier);

  std::optional<TfidfVectorizer> features;
  std::optional<Corpus> pub;
  if (options.utility && options.dp_classifier) {
    fs::path pub_path = Artifact(ArtifactNames::kPublic);
    if (!fs::is_regular_file(pub_path) &&
        config_.corpus.kind == CorpusSourceConfig::Kind::kJsonl) {
      pub_path = config_.corpus.public_path;
    }
    pub.emplace(LoadCorpus(pub_path, schema, CorpusRole::kTrain));
    features = TfidfVectorizer::Fit({&*pub}, DeclaredPublicTokens(config_));
  } else {
    features = TfidfVectorizer::Fit({}, {});
  }
  const AuditReport report =
      Audit(synthetic, train, test, *features, options, flagged);

  json canaries = json::array();
  for (const auto& [text, count] : report.canaries) {
    canaries.push_back({{"text", text}, {"count", count}});
  }
  json utility = json::object();
  for (const auto& [name, u] : report.utility) {
    utility[name] = {
        {"real_accuracy", u.real_accuracy},
        {"synthetic_accuracy", u.synthetic_accuracy},
        {"dp_classifier_accuracy",
         u.dp_accuracy ? json(*u.dp_accuracy) : json(nullptr)},
        {"dp_classifier_epsilon",
         u.dp_epsilon ? NumberToJson(*u.dp_epsilon) : json(nullptr)},
        {"label_fidelity", u.label_fidelity}};
  }
  json out = Stamp(
      {{"stage", "evaluate"},
       {"synthetic_size", report.synthetic_size},
       {"flagged_records", report.flagged_records},
       {"duplicates",
        config_.evaluate.duplicates
            ? json{{"pairs", report.duplicates.pairs},
                   {"synthetic_records", report.duplicates.synthetic_records}}
            : json(nullptr)},
       {"canaries", std::move(canaries)},
       {"utility", std::move(utility)},
       {"similarity",
        config_.evaluate.similarity ? json(report.similarity) : json(nullptr)},
       {"privacy", std::move(privacy)}});
  WriteJsonFile(Artifact(ArtifactNames::kReport), out);
  out["table"] = FormatReportTable(report);
  return out;
}

bool Pipeline::StageDone(std::initializer_list<const char*> outputs,
                         const char* marker) const {
  for (const char* name : outputs) {
    if (!fs::is_regular_file(Artifact(name))) return false;
  }
  const fs::path m = Artifact(marker);
  const std::string found = ReadJsonFile(m).value("config_hash", "");
  if (found != hash_) {
    throw ConfigError("output directory " + config_.output_dir.string() +
                      " holds artifacts of config " + found + ", not " + hash_ +
                      "; choose a fresh --out");
  }
  return true;
}

json Pipeline::Run() const {
  json skipped = json::array();
  auto stage = [&](const char* name, std::initializer_list<const char*> outs,
                   const char* marker, auto&& run) {
    if (StageDone(outs, marker)) {
      spdlog::info("{}: outputs present, skipped", name);
      skipped.push_back(name);
    } else {
      run();
    }
  };
  stage("gen-corpus",
        {ArtifactNames::kPublic, ArtifactNames::kPrivateTrain,
         ArtifactNames::kPrivateTest, ArtifactNames::kCorpusManifest},
        ArtifactNames::kCorpusManifest, [&] { GenCorpus(); });
  stage("train", {ArtifactNames::kCheckpoint, ArtifactNames::kLedger},
        ArtifactNames::kLedger, [&] { Train(); });
  stage("generate", {ArtifactNames::kSynthetic, ArtifactNames::kSyntheticMeta},
        ArtifactNames::kSyntheticMeta, [&] { Generate(); });
  std::string table;
  if (StageDone({ArtifactNames::kReport}, ArtifactNames::kReport)) {
    skipped.push_back("evaluate");
  } else {
    table = Evaluate().at("table").get<std::string>();
  }

  const json ledger = ReadJsonFile(Artifact(ArtifactNames::kLedger));
  const PrivacyReport privacy = PrivacyReportFromJson(ledger.at("privacy"));
  json config = PipelineConfigToJson(config_);
  config.erase("output_dir");
  json manifest =
      Stamp({{"config", std::move(config)},
             {"artifacts",
              {{"gen-corpus",
                {ArtifactNames::kPublic, ArtifactNames::kPrivateTrain,
                 ArtifactNames::kPrivateTest, ArtifactNames::kCorpusManifest}},
               {"train", {ArtifactNames::kCheckpoint, ArtifactNames::kLedger}},
               {"generate",
                {ArtifactNames::kSynthetic, ArtifactNames::kSyntheticMeta}},
               {"evaluate", {ArtifactNames::kReport}}}},
             {"seeds",
              {{"master", config_.seed},
               {"split", DeriveSeed(config_.seed, Stream::kSplit)},
               {"init", DeriveSeed(config_.seed, Stream::kInit)},
               {"classifier", DeriveSeed(config_.seed, Stream::kClassifier)}}},
             {"privacy", PrivacySummary(privacy)}});
  WriteJsonFile(Artifact(ArtifactNames::kManifest), manifest);
  json summary = manifest;
  summary["skipped"] = std::move(skipped);
  if (!table.empty()) summary["table"] = std::move(table);
  return summary;
}

}  // namespace twinsynth
