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

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the code path it is meant to check.

#ifndef TWINSYNTH_TESTS_TEST_ORACLES_H_
#define TWINSYNTH_TESTS_TEST_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "twinsynth/model.h"

namespace twinsynth::testing_oracles {

// Central differences of f with respect to every model parameter.
inline std::vector<double> CentralDifferences(
    const LanguageModel& model,
    const std::function<double(const LanguageModel&)>& f, double step = 1e-4) {
  std::vector<double> params(model.params().begin(), model.params().end());
  std::vector<double> out(params.size());
  LanguageModel probe(model.config(), params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    probe.mutable_params()[i] = saved + step;
    const double up = f(probe);
    probe.mutable_params()[i] = saved - step;
    const double down = f(probe);
    probe.mutable_params()[i] = saved;
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

// Central differences for an arbitrary function of a parameter vector.
inline std::vector<double> CentralDifferences(
    std::vector<double> x,
    const std::function<double(std::span<const double>)>& f,
    double step = 1e-4) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f(x);
    x[i] = saved - step;
    const double down = f(x);
    x[i] = saved;
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). A step-1e-4 central
// difference of an O(10) loss carries ~1e-11 of absolute round-off, so
// entries below the floor are compared against the floor instead.
inline double MaxRelativeError(std::span<const double> a,
                               std::span<const double> b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

// Checks that `set` is a most-probable-first prefix whose mass reaches p
// and that dropping its last element falls short of p.
inline bool IsMinimalNucleus(std::span<const double> probs,
                             std::span<const std::size_t> set, double p) {
  if (set.empty()) return false;
  if (p >= 1.0) return set.size() == probs.size();
  std::vector<double> sorted(probs.begin(), probs.end());
  std::sort(sorted.rbegin(), sorted.rend());
  double mass = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (probs[set[i]] != sorted[i]) return false;
    mass += probs[set[i]];
  }
  if (mass < p && set.size() != probs.size()) return false;
  return mass - probs[set.back()] < p;
}

// Order-alpha moment A_alpha = E_{z~N(0,s^2)}[(mu(z)/mu0(z))^alpha] of the
// Poisson-subsampled Gaussian, mu = (1-q) N(0,s^2) + q N(1,s^2), evaluated
// by the trapezoid rule on a wide uniform grid after subtracting the peak
// of the log integrand. Returns log(A_alpha) / (alpha - 1).
inline double QuadratureSubsampledGaussianRdp(double q, double sigma,
                                              double alpha) {
  const double s2 = sigma * sigma;
  auto log_integrand = [&](double z) {
    const double log_mu0 =
        -z * z / (2 * s2) - std::log(sigma * std::sqrt(2 * M_PI));
    const double log_mu1 =
        -(z - 1) * (z - 1) / (2 * s2) - std::log(sigma * std::sqrt(2 * M_PI));
    const double a = std::log1p(-q) + log_mu0;
    const double b = std::log(q) + log_mu1;
    const double m = std::max(a, b);
    const double log_mu = m + std::log(std::exp(a - m) + std::exp(b - m));
    return (1 - alpha) * log_mu0 + alpha * log_mu;
  };
  const double lo = -60.0 * sigma - 2.0;
  const double hi = alpha + 60.0 * sigma + 2.0;
  const int n = 400000;
  const double h = (hi - lo) / n;
  double peak = -INFINITY;
  for (int i = 0; i <= n; ++i) peak = std::max(peak, log_integrand(lo + i * h));
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    sum += w * std::exp(log_integrand(lo + i * h) - peak);
  }
  const double log_a = peak + std::log(sum * h);
  return std::max(0.0, log_a / (alpha - 1));
}

inline double StdNormalCdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Tight (epsilon, delta) curve of one Gaussian mechanism with sensitivity 1
// and noise sigma: delta(eps) = Phi(1/(2s) - eps s) - e^eps Phi(-1/(2s) - eps
// s). Solved for epsilon by bisection.
inline double AnalyticGaussianEpsilon(double sigma, double delta) {
  auto delta_of = [&](double eps) {
    return StdNormalCdf(1.0 / (2 * sigma) - eps * sigma) -
           std::exp(eps) * StdNormalCdf(-1.0 / (2 * sigma) - eps * sigma);
  };
  double lo = 0.0, hi = 1.0;
  while (delta_of(hi) > delta) hi *= 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (delta_of(mid) > delta ? lo : hi) = mid;
  }
  return hi;
}

inline std::vector<std::string> Words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) {
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    out.push_back(w);
  }
  return out;
}

inline std::set<std::string> Trigrams(const std::string& text) {
  const auto w = Words(text);
  std::set<std::string> out;
  for (std::size_t i = 0; i + 2 < w.size(); ++i) {
    out.insert(w[i] + "\x1f" + w[i + 1] + "\x1f" + w[i + 2]);
  }
  return out;
}

// Pairwise scan with the overlap criterion written out directly.
inline std::size_t BruteForceDuplicatePairs(
    const std::vector<std::string>& synthetic,
    const std::vector<std::string>& train) {
  std::vector<std::set<std::string>> tg;
  for (const auto& t : train) tg.push_back(Trigrams(t));
  std::size_t count = 0;
  for (const auto& s : synthetic) {
    const auto a = Trigrams(s);
    for (const auto& b : tg) {
      if (a.empty() || b.empty()) continue;
      std::size_t inter = 0;
      for (const auto& x : a) inter += b.count(x);
      if (2 * inter >= std::min(a.size(), b.size())) ++count;
    }
  }
  return count;
}

// O(n * m) scan for a contiguous token run.
inline std::size_t NaiveContainsCount(const std::vector<std::string>& texts,
                                      const std::string& needle) {
  const auto n = Words(needle);
  std::size_t count = 0;
  for (const auto& t : texts) {
    const auto h = Words(t);
    bool found = false;
    for (std::size_t i = 0; !found && i + n.size() <= h.size(); ++i) {
      bool all = true;
      for (std::size_t j = 0; j < n.size(); ++j) {
        if (h[i + j] != n[j]) {
          all = false;
          break;
        }
      }
      found = all;
    }
    if (found) ++count;
  }
  return count;
}

}  // namespace twinsynth::testing_oracles

#endif  // TWINSYNTH_TESTS_TEST_ORACLES_H_
