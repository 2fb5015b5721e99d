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

#ifndef TWINSYNTH_MODEL_H_
#define TWINSYNTH_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twinsynth/common.h"
#include "twinsynth/tokenizer.h"

namespace twinsynth {

inline constexpr char kArchitectureTag[] = "emb-causalattn1-ff-tied";

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 128;
  std::size_t context_length = 64;
  std::string architecture = kArchitectureTag;
  std::uint64_t init_seed = 0;

  void Validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Offsets of each tensor inside the flat parameter vector. Matrices are
// row-major; a row vector x maps to x * W.
struct ParameterLayout {
  std::size_t token_embedding = 0;     // V x d, also the output projection
  std::size_t position_embedding = 0;  // T x d
  std::size_t wq = 0, wk = 0, wv = 0, wo = 0;  // d x d
  std::size_t w1 = 0;                          // d x h
  std::size_t b1 = 0;                          // h
  std::size_t w2 = 0;                          // h x d
  std::size_t b2 = 0;                          // d
  std::size_t output_bias = 0;                 // V
  std::size_t total = 0;

  static ParameterLayout For(const ModelConfig& config);
};

// Token embedding plus learned positions, one causal self-attention head and
// a tanh feed-forward block (both residual), and logits through the tied
// embedding matrix plus an output bias.
class LanguageModel {
 public:
  // Parameters drawn from config.init_seed.
  explicit LanguageModel(ModelConfig config,
                         std::shared_ptr<const Vocabulary> vocab = nullptr);
  LanguageModel(ModelConfig config, std::vector<double> params,
                std::shared_ptr<const Vocabulary> vocab = nullptr);

  const ModelConfig& config() const { return config_; }
  const ParameterLayout& layout() const { return layout_; }
  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }
  std::size_t num_parameters() const { return params_.size(); }
  // May be null for models built directly from a config.
  const std::shared_ptr<const Vocabulary>& vocab() const { return vocab_; }

 private:
  ModelConfig config_;
  ParameterLayout layout_;
  std::vector<double> params_;
  std::shared_ptr<const Vocabulary> vocab_;
};

struct LossConfig {
  double lambda = 0.2;
  // Wrong prompts sampled per record; 0 uses the full set.
  std::size_t wrong_samples = 0;
  // When set, each wrong-sequence NLL is capped at cap * (predicted
  // positions) before averaging.
  std::optional<double> wrong_cap_per_token;
  // Excludes instruction positions from every NLL term.
  bool text_only_loss = false;

  static constexpr double kSuggestedCap = 10.0;
};

// Summed negative log-likelihood in nats over positions [loss_start, L).
double Nll(const LanguageModel& model, const TokenSequence& seq);
double Nll(const LanguageModel& model, std::span<const TokenId> ids);

// NLL(correct) - lambda / |wrong| * sum NLL(wrong).
double CombinedLoss(const LanguageModel& model, const TokenSequence& correct,
                    std::span<const TokenSequence> wrong,
                    const LossConfig& cfg);

// Exact gradient of CombinedLoss for one record, written to `grad` (resized
// to the parameter count). Returns the loss. Throws kDivergence if the loss
// or any gradient entry is non-finite.
double PerSampleGradient(const LanguageModel& model,
                         const TokenSequence& correct,
                         std::span<const TokenSequence> wrong,
                         const LossConfig& cfg, std::vector<double>& grad);

// Gradient of the plain NLL.
double NllGradient(const LanguageModel& model, const TokenSequence& seq,
                   std::vector<double>& grad);

// Next-token distributions after each prefix ids[0..t], t < L.
std::vector<std::vector<double>> NextTokenDistributions(
    const LanguageModel& model, std::span<const TokenId> ids);

struct SamplerConfig {
  double nucleus_p = 0.8;
  // Upper bound on generated tokens; 0 means up to the context length.
  std::size_t max_new_tokens = 0;
};

// Indices of the smallest probability-sorted prefix whose mass reaches p,
// most probable first (ties by lower index). p <= 0 yields the argmax only;
// p >= 1 yields every token.
std::vector<std::size_t> NucleusSet(std::span<const double> probs, double p);

// Autoregressive continuation of `prefix` until EOS (included) or the
// context limit. The prefix itself is not returned.
std::vector<TokenId> Sample(const LanguageModel& model,
                            std::span<const TokenId> prefix,
                            const SamplerConfig& sampler, std::uint64_t seed);

}  // namespace twinsynth

#endif  // TWINSYNTH_MODEL_H_
