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

#ifndef TWINSYNTH_ACCOUNTANT_H_
#define TWINSYNTH_ACCOUNTANT_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace twinsynth {

// Renyi-to-(epsilon, delta) conversion.
//   kSimple: eps = rdp + log(1/delta) / (alpha - 1)
//   kTight:  eps = rdp + log((alpha - 1) / alpha)
//                  - (log(delta) + log(alpha)) / (alpha - 1)
// Both are valid upper bounds; kTight is never larger.
enum class Conversion { kSimple, kTight };

const char* ConversionName(Conversion c);
Conversion ParseConversion(const std::string& name);

// The sixteen standard orders.
std::span<const double> StandardAlphaGrid();
// The standard orders plus every integer up to 64, a few larger powers and
// fractional orders in (1, 2). Used by default.
std::span<const double> DefaultAlphaGrid();

// Order-alpha Renyi divergence bound of one Poisson-subsampled Gaussian step
// with sensitivity 1 and noise multiplier sigma. Integer orders use a
// log-domain binomial expansion, fractional orders a log-domain Simpson
// quadrature. Returns +inf for sigma == 0.
double RdpSubsampledGaussian(double q, double sigma, double alpha);

struct PrivacySpec {
  double epsilon = 8.0;
  double delta = 1e-5;
  std::size_t dataset_size = 0;
  double sampling_rate = 0.01;
  std::uint64_t steps = 0;

  void Validate() const;
};

struct LedgerEntry {
  double sigma = 0.0;
  double sampling_rate = 0.0;
  std::uint64_t steps = 0;

  bool operator==(const LedgerEntry&) const = default;
};

// Append-only record of executed subsampled-Gaussian epochs with the summed
// RDP per order cached alongside.
class PrivacyLedger {
 public:
  PrivacyLedger();
  explicit PrivacyLedger(std::vector<double> alphas);

  void Append(double sigma, double sampling_rate, std::uint64_t steps);

  const std::vector<LedgerEntry>& entries() const { return entries_; }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& total_rdp() const { return total_rdp_; }
  std::uint64_t total_steps() const;
  bool empty() const { return entries_.empty(); }

  bool operator==(const PrivacyLedger& other) const {
    return entries_ == other.entries_ && alphas_ == other.alphas_;
  }

 private:
  std::vector<LedgerEntry> entries_;
  std::vector<double> alphas_;
  std::vector<double> total_rdp_;
};

struct EpsilonResult {
  double epsilon = 0.0;
  double alpha = 0.0;  // Minimizing order; 0 for an empty ledger.
};

// Minimum over the ledger's orders of the converted epsilon.
EpsilonResult ComposeAndConvert(const PrivacyLedger& ledger, double delta,
                                Conversion conversion = Conversion::kTight);

// Epsilon after `steps` identical steps, over the default grid.
double SpentEpsilon(double sigma, double sampling_rate, std::uint64_t steps,
                    double delta, Conversion conversion = Conversion::kTight);

// Smallest sigma (to relative tolerance 1e-3) whose accounted epsilon over
// spec.steps steps does not exceed spec.epsilon. Throws kInfeasible when
// sigma_max does not suffice. Returns 0 when spec.steps == 0.
double CalibrateSigma(const PrivacySpec& spec,
                      Conversion conversion = Conversion::kTight,
                      double sigma_max = 1e4);

// 1 / (2 n).
double DeltaDefault(std::size_t n);

}  // namespace twinsynth

#endif  // TWINSYNTH_ACCOUNTANT_H_
