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

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "test_oracles.h"
#include "twinsynth/common.h"
#include "twinsynth/rng.h"

namespace twinsynth {
namespace {

namespace oracle = testing_oracles;

TEST(RdpTest, FullBatchIsGaussianClosedForm) {
  EXPECT_DOUBLE_EQ(RdpSubsampledGaussian(1.0, 2.0, 4.0), 0.5);
  EXPECT_DOUBLE_EQ(RdpSubsampledGaussian(1.0, 0.7, 1.5), 1.5 / (2 * 0.49));
}

TEST(RdpTest, NoSamplingCostsNothing) {
  EXPECT_EQ(RdpSubsampledGaussian(0.0, 1.0, 8.0), 0.0);
}

TEST(RdpTest, ZeroNoiseIsInfinite) {
  EXPECT_TRUE(std::isinf(RdpSubsampledGaussian(0.1, 0.0, 8.0)));
}

TEST(RdpTest, RejectsOrderAtMostOne) {
  EXPECT_THROW(RdpSubsampledGaussian(0.1, 1.0, 1.0), Error);
}

TEST(RdpTest, SpecExampleMatchesQuadrature) {
  const double got = RdpSubsampledGaussian(0.01, 1.0, 8.0);
  const double want = oracle::QuadratureSubsampledGaussianRdp(0.01, 1.0, 8.0);
  EXPECT_NEAR(got / want, 1.0, 1e-3);
}

TEST(RdpTest, RandomTriplesMatchQuadrature) {
  Rng rng(2026);
  const std::vector<double> orders = {1.1, 1.25, 1.5, 1.75, 2, 2.5, 3,
                                      3.7, 4,    5,   6,    8, 12,  16};
  for (int i = 0; i < 20; ++i) {
    const double q = std::exp(std::log(1e-3) + rng.Uniform() * std::log(300.0));
    const double sigma = 0.7 + 3.3 * rng.Uniform();
    const double alpha = orders[rng.UniformInt(orders.size())];
    const double got = RdpSubsampledGaussian(q, sigma, alpha);
    const double want =
        oracle::QuadratureSubsampledGaussianRdp(q, sigma, alpha);
    EXPECT_NEAR(got / want, 1.0, 1e-3)
        << "q=" << q << " sigma=" << sigma << " alpha=" << alpha;
  }
}

TEST(RdpTest, MonotoneInRateAndNoise) {
  for (double alpha : {1.5, 2.0, 8.0, 32.0}) {
    double prev = 0.0;
    for (double q : {0.001, 0.01, 0.05, 0.2, 0.5, 0.9, 1.0}) {
      const double r = RdpSubsampledGaussian(q, 1.5, alpha);
      EXPECT_GE(r, prev) << "alpha=" << alpha << " q=" << q;
      prev = r;
    }
    prev = INFINITY;
    for (double s : {0.5, 0.8, 1.0, 2.0, 4.0, 10.0}) {
      const double r = RdpSubsampledGaussian(0.05, s, alpha);
      EXPECT_LE(r, prev) << "alpha=" << alpha << " sigma=" << s;
      prev = r;
    }
  }
}

TEST(ComposeTest, EmptyLedgerSpendsNothing) {
  PrivacyLedger ledger;
  EXPECT_EQ(ComposeAndConvert(ledger, 1e-5).epsilon, 0.0);
  EXPECT_EQ(SpentEpsilon(1.0, 0.1, 0, 1e-5), 0.0);
}

TEST(ComposeTest, DoublingStepsStrictlyIncreasesEpsilon) {
  for (std::uint64_t t : {1, 10, 100, 1000}) {
    EXPECT_LT(SpentEpsilon(1.2, 0.02, t, 1e-5),
              SpentEpsilon(1.2, 0.02, 2 * t, 1e-5));
  }
}

TEST(ComposeTest, LedgerIsMonotoneUnderAppends) {
  PrivacyLedger ledger;
  double prev = 0.0;
  for (int i = 0; i < 10; ++i) {
    ledger.Append(1.0 + 0.1 * i, 0.01, 50);
    const double eps = ComposeAndConvert(ledger, 1e-5).epsilon;
    EXPECT_GT(eps, prev);
    prev = eps;
  }
  EXPECT_EQ(ledger.entries().size(), 10u);
  EXPECT_EQ(ledger.total_steps(), 500u);
}

TEST(ComposeTest, TightConversionNeverExceedsSimple) {
  for (double s : {0.8, 1.0, 3.0}) {
    for (std::uint64_t t : {1, 100, 5000}) {
      EXPECT_LE(SpentEpsilon(s, 0.01, t, 1e-5, Conversion::kTight),
                SpentEpsilon(s, 0.01, t, 1e-5, Conversion::kSimple));
    }
  }
}

TEST(ComposeTest, SingleGaussianNeverBelowAnalyticCurve) {
  for (double sigma : {1.0, 2.0, 5.0, 10.0}) {
    for (double delta : {1e-5, 1e-6}) {
      for (Conversion c : {Conversion::kSimple, Conversion::kTight}) {
        const double eps = SpentEpsilon(sigma, 1.0, 1, delta, c);
        EXPECT_GE(eps, oracle::AnalyticGaussianEpsilon(sigma, delta))
            << "sigma=" << sigma << " delta=" << delta;
      }
    }
  }
}

TEST(ComposeTest, SpecExampleWithinTenPercentOfAnalyticCurve) {
  const double eps = SpentEpsilon(5.0, 1.0, 1, 1e-5);
  const double exact = oracle::AnalyticGaussianEpsilon(5.0, 1e-5);
  EXPECT_GE(eps, exact);
  EXPECT_LE(eps, 1.10 * exact);
}

TEST(ComposeTest, DenseGridContainsStandardOrders) {
  const auto dense = DefaultAlphaGrid();
  for (double a : StandardAlphaGrid()) {
    EXPECT_NE(std::find(dense.begin(), dense.end(), a), dense.end()) << a;
  }
}

TEST(CalibrateTest, RoundTripWithinTwoPercentBelowTarget) {
  for (double target : {3.0, 8.0}) {
    PrivacySpec spec;
    spec.epsilon = target;
    spec.delta = DeltaDefault(5000);
    spec.dataset_size = 5000;
    spec.sampling_rate = 0.02;
    spec.steps = 2500;
    const double sigma = CalibrateSigma(spec);
    const double spent = SpentEpsilon(sigma, 0.02, 2500, spec.delta);
    EXPECT_LE(spent, target);
    EXPECT_GE(spent, 0.98 * target);
  }
}

TEST(CalibrateTest, SmallerEpsilonNeedsMoreNoise) {
  PrivacySpec spec;
  spec.delta = 1e-4;
  spec.sampling_rate = 0.02;
  spec.steps = 2500;
  spec.epsilon = 3.0;
  const double s3 = CalibrateSigma(spec);
  spec.epsilon = 8.0;
  const double s8 = CalibrateSigma(spec);
  EXPECT_GT(s3, s8);
}

TEST(CalibrateTest, SingleStepMatchesAnalyticCurveFromAbove) {
  PrivacySpec spec;
  spec.epsilon = 1.0;
  spec.delta = 1e-5;
  spec.sampling_rate = 1.0;
  spec.steps = 1;
  const double sigma = CalibrateSigma(spec);
  // Any valid accountant needs at least the noise the exact curve needs.
  EXPECT_LE(oracle::AnalyticGaussianEpsilon(sigma, 1e-5), 1.0);
  EXPECT_LE(SpentEpsilon(sigma, 1.0, 1, 1e-5), 1.0);
}

TEST(CalibrateTest, InfeasibleTargetNamesTheBound) {
  PrivacySpec spec;
  spec.epsilon = 1e-4;
  spec.delta = 1e-5;
  spec.sampling_rate = 1.0;
  spec.steps = 1;
  try {
    CalibrateSigma(spec, Conversion::kTight, 10.0);
    FAIL() << "expected infeasibility";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
    EXPECT_NE(std::string(e.what()).find("sigma_max 10"), std::string::npos);
  }
}

TEST(CalibrateTest, ZeroStepsNeedNoNoise) {
  PrivacySpec spec;
  spec.steps = 0;
  EXPECT_EQ(CalibrateSigma(spec), 0.0);
}

TEST(DeltaDefaultTest, HalfInverseDatasetSize) {
  EXPECT_DOUBLE_EQ(DeltaDefault(5000), 1e-4);
  EXPECT_DOUBLE_EQ(DeltaDefault(3000), 1.0 / 6000.0);
  EXPECT_DOUBLE_EQ(DeltaDefault(1), 0.5);
  EXPECT_THROW(DeltaDefault(0), Error);
}

}  // namespace
}  // namespace twinsynth
