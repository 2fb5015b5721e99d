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

#include "twinsynth/accountant.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "twinsynth/common.h"

namespace twinsynth {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<double, 16> kStandardAlphas = {
    1.25, 1.5, 1.75, 2, 2.5, 3, 4, 5, 6, 8, 16, 32, 64, 128, 256, 512};

std::vector<double> BuildDefaultGrid() {
  std::set<double> grid(kStandardAlphas.begin(), kStandardAlphas.end());
  for (int i = 1; i <= 9; ++i) grid.insert(1.0 + 0.1 * i);
  for (int a = 2; a <= 64; ++a) grid.insert(a);
  for (double a : {80.0, 96.0, 192.0, 384.0}) grid.insert(a);
  return {grid.begin(), grid.end()};
}

double LogAddExp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log sum_k C(a,k) (1-q)^(a-k) q^k exp((k^2 - k) / (2 s^2)).
double LogMomentInteger(double q, double sigma, int alpha) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double inv_two_s2 = 1.0 / (2.0 * sigma * sigma);
  double acc = -kInf;
  for (int k = 0; k <= alpha; ++k) {
    const double log_binom = std::lgamma(alpha + 1.0) - std::lgamma(k + 1.0) -
                             std::lgamma(alpha - k + 1.0);
    const double term = log_binom + (alpha - k) * log_1mq + k * log_q +
                        (static_cast<double>(k) * k - k) * inv_two_s2;
    acc = LogAddExp(acc, term);
  }
  return acc;
}

// log E_{z ~ N(0, s^2)}[(mu(z) / mu0(z))^alpha] with
// mu = (1 - q) N(0, s^2) + q N(1, s^2). The integrand peaks in [0, alpha].
double LogMomentQuadrature(double q, double sigma, double alpha) {
  const double s2 = sigma * sigma;
  const double log_norm = -std::log(sigma * std::sqrt(2.0 * M_PI));
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  auto log_integrand = [&](double z) {
    const double log_mu0 = log_norm - z * z / (2.0 * s2);
    // log(mu / mu0) = log(1 - q + q exp((2z - 1) / (2 s^2))).
    const double log_ratio =
        LogAddExp(log_1mq, log_q + (2.0 * z - 1.0) / (2.0 * s2));
    return log_mu0 + alpha * log_ratio;
  };
  const double lo = -40.0 * sigma;
  const double hi = alpha + 40.0 * sigma;
  const double step = sigma / 50.0;
  std::size_t n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
  if (n % 2 == 1) ++n;
  const double h = (hi - lo) / static_cast<double>(n);
  std::vector<double> values(n + 1);
  double peak = -kInf;
  for (std::size_t i = 0; i <= n; ++i) {
    values[i] = log_integrand(lo + h * static_cast<double>(i));
    peak = std::max(peak, values[i]);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * std::exp(values[i] - peak);
  }
  return peak + std::log(sum * h / 3.0);
}

double ConvertOne(double rdp, double alpha, double delta, Conversion c) {
  if (!std::isfinite(rdp)) return kInf;
  double eps = 0.0;
  switch (c) {
    case Conversion::kSimple:
      eps = rdp + std::log(1.0 / delta) / (alpha - 1.0);
      break;
    case Conversion::kTight:
      eps = rdp + std::log((alpha - 1.0) / alpha) -
            (std::log(delta) + std::log(alpha)) / (alpha - 1.0);
      break;
  }
  return std::max(0.0, eps);
}

std::string Describe(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

const char* ConversionName(Conversion c) {
  return c == Conversion::kSimple ? "simple" : "tight";
}

Conversion ParseConversion(const std::string& name) {
  if (name == "simple") return Conversion::kSimple;
  if (name == "tight") return Conversion::kTight;
  throw ConfigError("unknown conversion '" + name +
                    "' (expected simple or tight)");
}

std::span<const double> StandardAlphaGrid() { return kStandardAlphas; }

std::span<const double> DefaultAlphaGrid() {
  static const std::vector<double> grid = BuildDefaultGrid();
  return grid;
}

double RdpSubsampledGaussian(double q, double sigma, double alpha) {
  if (!(q >= 0.0 && q <= 1.0))
    throw InvalidArgument("sampling rate must lie in [0, 1]");
  if (!(sigma >= 0.0))
    throw InvalidArgument("noise multiplier must be non-negative");
  if (!(alpha > 1.0)) throw InvalidArgument("Renyi order must exceed 1");
  if (q == 0.0) return 0.0;
  if (sigma == 0.0) return kInf;
  if (std::isinf(sigma)) return 0.0;
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);
  const double log_moment =
      alpha == std::floor(alpha) && alpha <= 1e6
          ? LogMomentInteger(q, sigma, static_cast<int>(alpha))
          : LogMomentQuadrature(q, sigma, alpha);
  return std::max(0.0, log_moment / (alpha - 1.0));
}

void PrivacySpec::Validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("privacy epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw ConfigError("privacy delta must lie in (0, 1)");
  if (!(sampling_rate > 0.0 && sampling_rate <= 1.0)) {
    throw ConfigError("sampling rate must lie in (0, 1]");
  }
}

PrivacyLedger::PrivacyLedger()
    : PrivacyLedger(std::vector<double>(DefaultAlphaGrid().begin(),
                                        DefaultAlphaGrid().end())) {}

PrivacyLedger::PrivacyLedger(std::vector<double> alphas)
    : alphas_(std::move(alphas)), total_rdp_(alphas_.size(), 0.0) {
  if (alphas_.empty()) throw InvalidArgument("alpha grid is empty");
  for (double a : alphas_) {
    if (!(a > 1.0)) throw InvalidArgument("Renyi order must exceed 1");
  }
}

void PrivacyLedger::Append(double sigma, double sampling_rate,
                           std::uint64_t steps) {
  if (steps == 0) return;
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    total_rdp_[i] += static_cast<double>(steps) *
                     RdpSubsampledGaussian(sampling_rate, sigma, alphas_[i]);
  }
  entries_.push_back({sigma, sampling_rate, steps});
}

std::uint64_t PrivacyLedger::total_steps() const {
  std::uint64_t t = 0;
  for (const auto& e : entries_) t += e.steps;
  return t;
}

EpsilonResult ComposeAndConvert(const PrivacyLedger& ledger, double delta,
                                Conversion conversion) {
  if (!(delta > 0.0 && delta < 1.0))
    throw InvalidArgument("delta must lie in (0, 1)");
  if (ledger.empty()) return {};
  EpsilonResult best{kInf, 0.0};
  for (std::size_t i = 0; i < ledger.alphas().size(); ++i) {
    const double a = ledger.alphas()[i];
    const double eps = ConvertOne(ledger.total_rdp()[i], a, delta, conversion);
    if (eps < best.epsilon) best = {eps, a};
  }
  return best;
}

double SpentEpsilon(double sigma, double sampling_rate, std::uint64_t steps,
                    double delta, Conversion conversion) {
  PrivacyLedger ledger;
  ledger.Append(sigma, sampling_rate, steps);
  return ComposeAndConvert(ledger, delta, conversion).epsilon;
}

double CalibrateSigma(const PrivacySpec& spec, Conversion conversion,
                      double sigma_max) {
  spec.Validate();
  if (spec.steps == 0) return 0.0;
  auto spent = [&](double sigma) {
    return SpentEpsilon(sigma, spec.sampling_rate, spec.steps, spec.delta,
                        conversion);
  };
  const double at_max = spent(sigma_max);
  if (at_max > spec.epsilon) {
    throw Error(ErrorCode::kInfeasible,
                "target epsilon " + Describe(spec.epsilon) +
                    " is infeasible: sigma_max " + Describe(sigma_max) +
                    " still spends epsilon " + Describe(at_max));
  }
  double lo = 1e-3;
  if (spent(lo) <= spec.epsilon) return lo;
  double hi = sigma_max;
  // Invariant: spent(lo) > target >= spent(hi).
  while (hi / lo > 1.0 + 1e-3) {
    const double mid = std::sqrt(lo * hi);
    (spent(mid) <= spec.epsilon ? hi : lo) = mid;
  }
  return hi;
}

double DeltaDefault(std::size_t n) {
  if (n == 0) throw InvalidArgument("dataset size must be at least 1");
  return 1.0 / (2.0 * static_cast<double>(n));
}

}  // namespace twinsynth
