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

#ifndef TWINSYNTH_RNG_H_
#define TWINSYNTH_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace twinsynth {

// Named streams so that, e.g., gradient noise and batch sampling never share
// state even when they hang off the same master seed.
enum class Stream : std::uint64_t {
  kToyCorpus = 1,
  kSplit = 2,
  kInit = 3,
  kBatchSampling = 4,
  kGradientNoise = 5,
  kShuffle = 6,
  kWrongPrompts = 7,
  kGeneration = 8,
  kCanary = 9,
  kClassifier = 10,
};

// SplitMix64 finalizer applied over (seed, stream, index).
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t index = 0);
inline std::uint64_t DeriveSeed(std::uint64_t seed, Stream stream,
                                std::uint64_t index = 0) {
  return DeriveSeed(seed, static_cast<std::uint64_t>(stream), index);
}

// mt19937_64 with hand-written distributions. The std:: distributions are
// implementation-defined, which would break cross-toolchain reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t UniformInt(std::uint64_t n);
  double Normal();
  bool Bernoulli(double p) { return Uniform() < p; }

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(UniformInt(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace twinsynth

#endif  // TWINSYNTH_RNG_H_
