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

#ifndef TWINSYNTH_PIPELINE_CONFIG_H_
#define TWINSYNTH_PIPELINE_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "twinsynth/corpus.h"
#include "twinsynth/eval.h"
#include "twinsynth/prompt.h"
#include "twinsynth/synthesis.h"

namespace twinsynth {

// Signature and neutral lexicons made of generated pseudo-words, so a toy
// config need not list every word.
struct PseudoLexiconSpec {
  std::size_t signature_words = 30;  // Per attribute value.
  std::size_t neutral_words = 60;
  std::uint64_t seed = 99;
};

struct CorpusSourceConfig {
  enum class Kind { kToy, kJsonl };
  Kind kind = Kind::kToy;

  // Toy source. The spec's seed is the master seed; lexicons are either
  // listed or generated from `pseudo_lexicon`.
  ToyCorpusSpec toy;
  std::optional<PseudoLexiconSpec> pseudo_lexicon;

  // JSONL source. Without a test file the private file is split.
  std::filesystem::path private_path;
  std::filesystem::path public_path;
  std::optional<std::filesystem::path> test_path;

  // Stratified split of the private corpus; 1 keeps every record for
  // training and uses the same records as the test corpus.
  double train_fraction = 0.8;
};

struct GenerateConfig {
  // Absent means round(total_multiplier * |D_train|).
  std::optional<std::size_t> total;
  double total_multiplier = 1.0;
  std::vector<std::pair<AttributeAssignment, double>> distribution;
  SamplerConfig sampler;
  std::size_t min_words = 1;
};

struct EvaluateConfig {
  bool utility = true;
  bool dp_classifier = true;
  bool duplicates = true;
  bool similarity = true;
  // Canary texts to search for; the toy source's canaries are added.
  std::vector<std::string> canaries;
  ClassifierOptions classifier;
  // Epsilon of the DP classifier arm; absent follows train.epsilon.
  DpClassifierPlan dp_classifier_plan;
  bool dp_classifier_epsilon_follows_train = true;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::vector<Attribute> schema;
  std::string template_text;
  CorpusSourceConfig corpus;
  // Public words declared in addition to the public corpus. Toy lexicon
  // words and canaries are added when `declare_toy_tokens` is set.
  std::vector<std::string> extra_tokens;
  bool declare_toy_tokens = true;
  TrainPlan train;
  GenerateConfig generate;
  EvaluateConfig evaluate;

  // Throws kConfig naming the offending field. Checks that referenced
  // files exist.
  void Validate() const;
};

// Strict parse: unknown keys and type mismatches are errors naming the
// field path. Relative JSONL paths resolve against `base_dir`.
PipelineConfig ParsePipelineConfig(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path);

// Effective configuration with every default spelled out. Keys are sorted,
// so the compact dump is canonical.
nlohmann::json PipelineConfigToJson(const PipelineConfig& config);

// FNV-1a of the canonical JSON without output_dir, so equal experiments in
// different directories share a hash.
std::string ConfigHash(const PipelineConfig& config);

// The toy spec with lexicons resolved and the master seed applied.
ToyCorpusSpec ResolveToySpec(const PipelineConfig& config);

// Public tokens for the vocabulary and the DP classifier features.
std::vector<std::string> DeclaredPublicTokens(const PipelineConfig& config);

// Canary texts searched by the audit.
std::vector<std::string> AuditCanaries(const PipelineConfig& config);

std::shared_ptr<const AttributeSchema> BuildSchema(
    const PipelineConfig& config);

}  // namespace twinsynth

#endif  // TWINSYNTH_PIPELINE_CONFIG_H_
