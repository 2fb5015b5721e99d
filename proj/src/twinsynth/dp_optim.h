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

#ifndef TWINSYNTH_DP_OPTIM_H_
#define TWINSYNTH_DP_OPTIM_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "twinsynth/rng.h"

namespace twinsynth {

struct DpOptimConfig {
  double clip_norm = 1.0;
  double noise_multiplier = 0.0;
  // Expected batch size B = q * n; the noised sum is divided by this.
  double expected_batch_size = 1.0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  explicit AdamState(std::size_t dim = 0) : m(dim, 0.0), v(dim, 0.0) {}
};

// Each index in [0, n) independently with probability q. The draw depends
// only on (seed, step).
std::vector<std::size_t> PoissonSample(std::size_t n, double q,
                                       std::uint64_t seed, std::uint64_t step);

double L2Norm(std::span<const double> g);

// g * min(1, c / ||g||).
void ClipInPlace(std::span<double> g, double clip_norm);
std::vector<double> Clip(std::span<const double> g, double clip_norm);

// Streaming form of the noised sum: rejects any contribution whose norm
// exceeds the clip bound, accumulates in insertion order, and finishes with
// (sum + N(0, (sigma C)^2 I)) / B.
class ClippedSum {
 public:
  ClippedSum(std::size_t dim, double clip_norm);

  void Add(std::span<const double> clipped);
  std::size_t count() const { return count_; }
  std::vector<double> Finish(double noise_multiplier, double expected_batch,
                             Rng& noise_rng) const;

 private:
  std::vector<double> sum_;
  double clip_norm_;
  std::size_t count_ = 0;
};

std::vector<double> NoisedSum(const std::vector<std::vector<double>>& clipped,
                              std::size_t dim, double clip_norm,
                              double noise_multiplier, double expected_batch,
                              Rng& noise_rng);

// Bias-corrected Adam update of `theta` in place. Throws kDivergence when
// the update produces a non-finite parameter.
void AdamStep(AdamState& state, std::span<double> theta,
              std::span<const double> grad, const DpOptimConfig& cfg);

// Writes the gradient of record `index` into `grad` (already sized) and
// returns its loss.
using PerExampleGradientFn =
    std::function<double(std::size_t index, std::vector<double>& grad)>;

struct StepTrace {
  std::uint64_t step = 0;
  std::size_t batch_size = 0;
  double mean_loss = 0.0;
};

// DP-Adam over `n` records with Poisson rate q for `steps` steps. Noise and
// batch sampling use separate streams derived from cfg.seed.
std::vector<StepTrace> TrainDpAdam(std::span<double> theta, std::size_t n,
                                   double sampling_rate, std::uint64_t steps,
                                   const DpOptimConfig& cfg,
                                   const PerExampleGradientFn& grad_fn,
                                   AdamState* state = nullptr);

// Plain Adam on the mean per-record gradient. batch_size >= n gives
// full-batch descent over the records in index order; smaller batches walk
// a seeded per-epoch shuffle.
std::vector<StepTrace> TrainAdam(std::span<double> theta, std::size_t n,
                                 std::size_t batch_size, std::uint64_t steps,
                                 const DpOptimConfig& cfg,
                                 const PerExampleGradientFn& grad_fn,
                                 AdamState* state = nullptr);

}  // namespace twinsynth

#endif  // TWINSYNTH_DP_OPTIM_H_
