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

#include "twinsynth/dp_optim.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "twinsynth/common.h"

namespace twinsynth {
namespace {

constexpr double kClipTolerance = 1e-9;

double CallWithStep(const PerExampleGradientFn& fn, std::size_t index,
                    std::vector<double>& grad, std::uint64_t step) {
  try {
    return fn(index, grad);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDivergence) throw;
    throw Error(ErrorCode::kDivergence,
                "step " + std::to_string(step) + ": " + e.what());
  }
}

void CheckOptimConfig(const DpOptimConfig& cfg) {
  if (!(cfg.clip_norm > 0.0))
    throw InvalidArgument("clip norm must be positive");
  if (!(cfg.noise_multiplier >= 0.0)) {
    throw InvalidArgument("noise multiplier must be non-negative");
  }
  if (!(cfg.expected_batch_size > 0.0)) {
    throw InvalidArgument("expected batch size must be positive");
  }
  if (!(cfg.learning_rate > 0.0))
    throw InvalidArgument("learning rate must be positive");
}

AdamState& EnsureState(AdamState* state, AdamState& local, std::size_t dim) {
  AdamState& s = state != nullptr ? *state : local;
  if (s.m.empty() && s.v.empty() && s.t == 0) s = AdamState(dim);
  if (s.m.size() != dim || s.v.size() != dim) {
    throw InvalidArgument(
        "optimizer state dimension does not match parameters");
  }
  return s;
}

}  // namespace

std::vector<std::size_t> PoissonSample(std::size_t n, double q,
                                       std::uint64_t seed, std::uint64_t step) {
  if (!(q >= 0.0 && q <= 1.0))
    throw InvalidArgument("sampling rate must lie in [0, 1]");
  std::vector<std::size_t> out;
  if (q == 0.0) return out;
  Rng rng(DeriveSeed(seed, Stream::kBatchSampling, step));
  out.reserve(static_cast<std::size_t>(q * static_cast<double>(n)) + 16);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.Uniform() < q) out.push_back(i);
  }
  return out;
}

double L2Norm(std::span<const double> g) {
  double s = 0.0;
  for (double x : g) s += x * x;
  return std::sqrt(s);
}

void ClipInPlace(std::span<double> g, double clip_norm) {
  if (!(clip_norm > 0.0)) throw InvalidArgument("clip norm must be positive");
  const double norm = L2Norm(g);
  if (norm <= clip_norm) return;
  const double scale = clip_norm / norm;
  for (double& x : g) x *= scale;
}

std::vector<double> Clip(std::span<const double> g, double clip_norm) {
  std::vector<double> out(g.begin(), g.end());
  ClipInPlace(out, clip_norm);
  return out;
}

ClippedSum::ClippedSum(std::size_t dim, double clip_norm)
    : sum_(dim, 0.0), clip_norm_(clip_norm) {
  if (!(clip_norm > 0.0)) throw InvalidArgument("clip norm must be positive");
}

void ClippedSum::Add(std::span<const double> clipped) {
  if (clipped.size() != sum_.size()) {
    throw InvalidArgument("gradient dimension " +
                          std::to_string(clipped.size()) + " does not match " +
                          std::to_string(sum_.size()));
  }
  const double norm = L2Norm(clipped);
  if (!(norm <= clip_norm_ + kClipTolerance)) {
    throw InvalidArgument("unclipped gradient: norm " + std::to_string(norm) +
                          " exceeds clip bound " + std::to_string(clip_norm_));
  }
  for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] += clipped[i];
  ++count_;
}

std::vector<double> ClippedSum::Finish(double noise_multiplier,
                                       double expected_batch,
                                       Rng& noise_rng) const {
  if (!(noise_multiplier >= 0.0)) {
    throw InvalidArgument("noise multiplier must be non-negative");
  }
  if (!(expected_batch > 0.0))
    throw InvalidArgument("expected batch size must be positive");
  std::vector<double> out = sum_;
  if (noise_multiplier > 0.0) {
    if (!std::isfinite(clip_norm_)) {
      throw InvalidArgument("noise requires a finite clip norm");
    }
    const double std_dev = noise_multiplier * clip_norm_;
    for (double& x : out) x += std_dev * noise_rng.Normal();
  }
  for (double& x : out) x /= expected_batch;
  return out;
}

std::vector<double> NoisedSum(const std::vector<std::vector<double>>& clipped,
                              std::size_t dim, double clip_norm,
                              double noise_multiplier, double expected_batch,
                              Rng& noise_rng) {
  ClippedSum sum(dim, clip_norm);
  for (const auto& g : clipped) sum.Add(g);
  return sum.Finish(noise_multiplier, expected_batch, noise_rng);
}

void AdamStep(AdamState& state, std::span<double> theta,
              std::span<const double> grad, const DpOptimConfig& cfg) {
  if (state.m.size() != theta.size() || state.v.size() != theta.size() ||
      grad.size() != theta.size()) {
    throw InvalidArgument("optimizer dimensions disagree");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    if (!std::isfinite(theta[i])) {
      throw Error(ErrorCode::kDivergence,
                  "non-finite parameter after optimizer step " +
                      std::to_string(state.t));
    }
  }
}

std::vector<StepTrace> TrainDpAdam(std::span<double> theta, std::size_t n,
                                   double sampling_rate, std::uint64_t steps,
                                   const DpOptimConfig& cfg,
                                   const PerExampleGradientFn& grad_fn,
                                   AdamState* state) {
  CheckOptimConfig(cfg);
  if (!(sampling_rate > 0.0 && sampling_rate <= 1.0)) {
    throw InvalidArgument("sampling rate must lie in (0, 1]");
  }
  AdamState local;
  AdamState& s = EnsureState(state, local, theta.size());
  std::vector<double> grad(theta.size());
  std::vector<StepTrace> trace;
  trace.reserve(steps);
  for (std::uint64_t step = 0; step < steps; ++step) {
    // Streams are keyed by the optimizer's global step so resumed runs
    // never reuse a draw.
    const std::uint64_t global = s.t;
    const auto batch = PoissonSample(n, sampling_rate, cfg.seed, global);
    ClippedSum sum(theta.size(), cfg.clip_norm);
    double loss = 0.0;
    for (std::size_t idx : batch) {
      std::fill(grad.begin(), grad.end(), 0.0);
      loss += CallWithStep(grad_fn, idx, grad, global);
      ClipInPlace(grad, cfg.clip_norm);
      sum.Add(grad);
    }
    Rng noise(DeriveSeed(cfg.seed, Stream::kGradientNoise, global));
    const auto noised =
        sum.Finish(cfg.noise_multiplier, cfg.expected_batch_size, noise);
    AdamStep(s, theta, noised, cfg);
    trace.push_back(
        {global, batch.size(),
         batch.empty() ? 0.0 : loss / static_cast<double>(batch.size())});
  }
  return trace;
}

std::vector<StepTrace> TrainAdam(std::span<double> theta, std::size_t n,
                                 std::size_t batch_size, std::uint64_t steps,
                                 const DpOptimConfig& cfg,
                                 const PerExampleGradientFn& grad_fn,
                                 AdamState* state) {
  if (n == 0) throw InvalidArgument("cannot train on an empty dataset");
  if (batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (!(cfg.learning_rate > 0.0))
    throw InvalidArgument("learning rate must be positive");
  AdamState local;
  AdamState& s = EnsureState(state, local, theta.size());
  const bool full_batch = batch_size >= n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = n;
  std::uint64_t epoch = 0;
  std::vector<double> grad(theta.size());
  std::vector<double> mean(theta.size());
  std::vector<StepTrace> trace;
  trace.reserve(steps);
  for (std::uint64_t step = 0; step < steps; ++step) {
    std::size_t begin = 0;
    std::size_t end = n;
    if (!full_batch) {
      if (cursor >= n) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(DeriveSeed(cfg.seed, Stream::kShuffle, epoch++));
        rng.Shuffle(order);
        cursor = 0;
      }
      begin = cursor;
      end = std::min(n, cursor + batch_size);
      cursor = end;
    }
    std::fill(mean.begin(), mean.end(), 0.0);
    double loss = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      std::fill(grad.begin(), grad.end(), 0.0);
      loss += CallWithStep(grad_fn, order[k], grad, s.t);
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += grad[i];
    }
    const double count = static_cast<double>(end - begin);
    for (double& x : mean) x /= count;
    AdamStep(s, theta, mean, cfg);
    trace.push_back({step, end - begin, loss / count});
  }
  return trace;
}

}  // namespace twinsynth
