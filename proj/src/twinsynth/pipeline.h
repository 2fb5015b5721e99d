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

#ifndef TWINSYNTH_PIPELINE_H_
#define TWINSYNTH_PIPELINE_H_

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "twinsynth/pipeline_config.h"

namespace twinsynth {

// File names inside the output directory.
struct ArtifactNames {
  static constexpr char kPublic[] = "public.jsonl";
  static constexpr char kPrivateTrain[] = "private_train.jsonl";
  static constexpr char kPrivateTest[] = "private_test.jsonl";
  static constexpr char kCorpusManifest[] = "corpus_manifest.json";
  static constexpr char kCheckpoint[] = "model.ckpt";
  static constexpr char kLedger[] = "ledger.json";
  static constexpr char kSynthetic[] = "synthetic.jsonl";
  static constexpr char kSyntheticMeta[] = "synthetic.meta.json";
  static constexpr char kReport[] = "report.json";
  static constexpr char kManifest[] = "manifest.json";
};

// Sidecar path of a synthetic corpus: "x.jsonl" -> "x.meta.json".
std::filesystem::path MetadataPath(const std::filesystem::path& synthetic);

struct EvaluateInputs {
  std::optional<std::filesystem::path> synthetic;
  std::optional<std::filesystem::path> real_train;
  std::optional<std::filesystem::path> real_test;
};

// The four stages over one validated config. Each stage reads its inputs
// from and writes its outputs to the output directory and returns a JSON
// summary. Every JSON artifact carries the master seed and config hash.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }
  const std::string& config_hash() const { return hash_; }
  std::filesystem::path Artifact(const char* name) const {
    return config_.output_dir / name;
  }

  // Public, private-train and private-test JSONL plus corpus_manifest.json.
  nlohmann::json GenCorpus() const;
  // model.ckpt and ledger.json.
  nlohmann::json Train() const;
  // ledger.json (refreshed from the checkpoint first), then synthetic.jsonl
  // and its sidecar. Reads no private records.
  nlohmann::json Generate(
      const std::optional<std::filesystem::path>& checkpoint = {}) const;
  // report.json; the summary also holds the printable table under "table".
  nlohmann::json Evaluate(const EvaluateInputs& inputs = {}) const;
  // All stages, skipping those whose outputs already exist, then
  // manifest.json. Existing outputs from a different config are an error.
  nlohmann::json Run() const;

 private:
  nlohmann::json Stamp(nlohmann::json j) const;
  bool StageDone(std::initializer_list<const char*> outputs,
                 const char* marker) const;

  PipelineConfig config_;
  std::string hash_;
};

}  // namespace twinsynth

#endif  // TWINSYNTH_PIPELINE_H_
