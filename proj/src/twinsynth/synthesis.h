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

#ifndef TWINSYNTH_SYNTHESIS_H_
#define TWINSYNTH_SYNTHESIS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "twinsynth/accountant.h"
#include "twinsynth/corpus.h"
#include "twinsynth/dp_optim.h"
#include "twinsynth/model.h"
#include "twinsynth/prompt.h"

namespace twinsynth {

struct TrainPlan {
  // Architecture; vocab_size is filled in from the built vocabulary.
  ModelConfig model;
  std::size_t vocab_max_size = Vocabulary::kDefaultMaxSize;

  // Public pretraining: plain NLL on unprompted text, no privacy cost.
  std::size_t pretrain_epochs = 1;
  std::size_t pretrain_batch_size = 32;
  double pretrain_learning_rate = 1e-3;

  // Private fine-tuning. Without a target epsilon the non-private regime
  // runs; otherwise DP-Adam with sigma calibrated before any step.
  std::optional<double> target_epsilon;
  // Defaults to 1 / (2 |D_train|).
  std::optional<double> delta;
  std::size_t dp_epochs = 5;
  std::size_t nonprivate_epochs = 2;
  double sampling_rate = 0.02;
  double clip_norm = 1.0;
  double dp_learning_rate = 1e-3;
  double nonprivate_learning_rate = 1e-4;
  std::size_t nonprivate_batch_size = 32;
  Conversion conversion = Conversion::kTight;
  double sigma_max = 1e4;

  LossConfig loss;
  WrongPromptMode wrong_mode = WrongPromptMode::kAllAttributesDiffer;
  std::uint64_t seed = 0;

  bool is_private() const { return target_epsilon.has_value(); }
  void Validate() const;
};

struct PrivacyReport {
  bool is_private = false;
  double epsilon = 0.0;  // Spent; +inf for the non-private regime.
  double delta = 0.0;
  double sigma = 0.0;
  double sampling_rate = 0.0;
  std::uint64_t steps = 0;
  double best_alpha = 0.0;
  Conversion conversion = Conversion::kTight;
  PrivacyLedger ledger;
};

struct TrainResult {
  LanguageModel model;
  PrivacyReport privacy;
  std::vector<StepTrace> pretrain_trace;
  std::vector<StepTrace> finetune_trace;
};

// Vocabulary from the public corpus plus every token the template can render
// and any caller-declared public tokens. The private corpus is never read.
Vocabulary BuildPublicVocabulary(const Corpus& public_corpus,
                                 const PromptTemplate& tmpl,
                                 const AttributeSchema& schema,
                                 const std::vector<std::string>& extra_tokens,
                                 std::size_t max_size);

// Steps implied by the plan for a private corpus of size n.
std::uint64_t FinetuneSteps(const TrainPlan& plan, std::size_t n);

// Pretrains on `public_corpus`, then fine-tunes on `private_corpus` with the
// combined loss. Accountant infeasibility is raised before any training.
TrainResult Train(const TrainPlan& plan, const Corpus& public_corpus,
                  const Corpus& private_corpus, const PromptTemplate& tmpl,
                  const AttributeSchema& schema,
                  const std::vector<std::string>& extra_tokens = {});

struct GenerationPlan {
  std::size_t total = 0;
  // Target proportion per complete assignment; empty means uniform over all
  // assignments.
  std::vector<std::pair<AttributeAssignment, double>> distribution;
  SamplerConfig sampler;
  // Minimum generated words; shorter outputs are resampled.
  std::size_t min_words = 1;
  std::uint64_t seed = 0;

  static constexpr std::size_t kMaxAttempts = 10;
};

// Largest-remainder rounding of proportions * total; ties go to the earlier
// entry. Counts sum to `total`.
std::vector<std::size_t> LargestRemainderCounts(
    const std::vector<double>& proportions, std::size_t total);

struct GenerationResult {
  Corpus corpus;
  // Indices of records kept after exhausting the resampling budget.
  std::vector<std::size_t> flagged;
  std::map<std::string, std::size_t> counts;  // AssignmentKey -> count
};

// Samples records from `model` only; no private data is reachable here.
GenerationResult Generate(const LanguageModel& model,
                          const GenerationPlan& plan,
                          const PromptTemplate& tmpl,
                          std::shared_ptr<const AttributeSchema> schema);

}  // namespace twinsynth

#endif  // TWINSYNTH_SYNTHESIS_H_
