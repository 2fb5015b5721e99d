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

#include "twinsynth/eval.h"

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "test_oracles.h"
#include "twinsynth/common.h"
#include "twinsynth/rng.h"

namespace twinsynth {
namespace {

namespace oracle = testing_oracles;

std::shared_ptr<const AttributeSchema> Sentiment() {
  return std::make_shared<const AttributeSchema>(std::vector<Attribute>{
      {"sentiment", {"positive", "negative"}, {"positive", "negative"}}});
}

Corpus Unlabeled(const std::vector<std::string>& texts,
                 CorpusRole role = CorpusRole::kSynthetic) {
  std::vector<LabeledRecord> records;
  for (const auto& t : texts) records.push_back({t, {}});
  return Corpus(std::move(records), Sentiment(), role);
}

std::vector<std::string> TextsOf(const Corpus& c) {
  std::vector<std::string> out;
  for (const auto& r : c.records()) out.push_back(r.text);
  return out;
}

// Random texts over a tiny vocabulary, so that duplicates are common.
std::vector<std::string> RandomTexts(std::size_t n, std::size_t vocab,
                                     std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = 1 + rng.UniformInt(7);
    std::string t;
    for (std::size_t j = 0; j < len; ++j) {
      if (j) t += ' ';
      t += "w" + std::to_string(rng.UniformInt(vocab));
    }
    out.push_back(t);
  }
  return out;
}

struct ToySplit {
  Corpus train;
  Corpus test;
  Corpus pub;
  std::vector<std::string> signature;
};

ToySplit MakeToy(std::size_t per_class, std::uint64_t seed) {
  const auto words = PseudoWords(120, 99, {});
  ToyCorpusSpec spec;
  spec.lexicons["sentiment"]["positive"] = {words.begin(), words.begin() + 30};
  spec.lexicons["sentiment"]["negative"] = {words.begin() + 30,
                                            words.begin() + 60};
  spec.neutral_lexicon = {words.begin() + 60, words.end()};
  spec.records_per_class = per_class;
  spec.public_records = 500;
  spec.seed = seed;
  auto toy = GenerateToyCorpus(spec, Sentiment());
  auto [train, test] = Split(toy.private_corpus, 0.5, seed);
  return {std::move(train),
          std::move(test),
          std::move(toy.public_corpus),
          {words.begin(), words.begin() + 60}};
}

Corpus Relabel(const Corpus& c, bool flip, std::uint64_t shuffle_seed = 0) {
  std::vector<LabeledRecord> records = c.records();
  if (flip) {
    for (auto& r : records) {
      auto& v = r.attrs.at("sentiment");
      v = v == "positive" ? "negative" : "positive";
    }
  } else {
    std::vector<std::string> labels;
    for (const auto& r : records) labels.push_back(r.attrs.at("sentiment"));
    Rng rng(shuffle_seed);
    rng.Shuffle(labels);
    for (std::size_t i = 0; i < records.size(); ++i) {
      records[i].attrs["sentiment"] = labels[i];
    }
  }
  return Corpus(std::move(records), c.schema_ptr(), c.role());
}

TEST(TrigramsTest, SetSemanticsAndShortTexts) {
  EXPECT_TRUE(Trigrams("a b").empty());
  EXPECT_EQ(Trigrams("a b c").size(), 1u);
  EXPECT_EQ(Trigrams("a b c a b c").size(), 3u);  // abc, bca, cab
  EXPECT_EQ(Trigrams("A B  C"), Trigrams("a b c"));
}

TEST(IsDuplicateTest, HandEnumeratedTruthTable) {
  // {w1 w2 w3, w2 w3 w4} vs {w1 w2 w3, w2 w3 x}: 1 >= 2 / 2.
  EXPECT_TRUE(IsDuplicate("w1 w2 w3 w4", "w1 w2 w3 x"));
  // Three trigrams each, one shared: 1 < 3 / 2.
  EXPECT_FALSE(IsDuplicate("w1 w2 w3 w4 w5", "w1 w2 w3 x y"));
  // Two of three shared: 2 >= 1.5.
  EXPECT_TRUE(IsDuplicate("w1 w2 w3 w4 w5", "w1 w2 w3 w4 y"));
  // Containment: the shorter text's single trigram is in the longer one.
  EXPECT_TRUE(IsDuplicate("w2 w3 w4", "w1 w2 w3 w4 w5 w6 w7 w8"));
  EXPECT_TRUE(IsDuplicate("a b c d", "a b c d"));
  EXPECT_FALSE(IsDuplicate("a b c d", "e f g h"));
  // Below three tokens there are no trigrams.
  EXPECT_FALSE(IsDuplicate("a b", "a b"));
  EXPECT_FALSE(IsDuplicate("a b c", "a b"));
}

TEST(IsDuplicateTest, SymmetricAndReflexive) {
  const auto texts = RandomTexts(60, 4, 3);
  for (const auto& a : texts) {
    if (oracle::Words(a).size() >= 3) EXPECT_TRUE(IsDuplicate(a, a));
    for (const auto& b : texts) EXPECT_EQ(IsDuplicate(a, b), IsDuplicate(b, a));
  }
}

TEST(DuplicateCountTest, IndexedMatchesBruteForceOn200By200) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = RandomTexts(200, 5, seed);
    const auto t = RandomTexts(200, 5, seed + 100);
    const std::size_t expected = oracle::BruteForceDuplicatePairs(s, t);
    EXPECT_GT(expected, 0u);
    const auto stats = DuplicateCount(Unlabeled(s), Unlabeled(t));
    EXPECT_EQ(stats.pairs, expected) << "seed " << seed;
    std::size_t records = 0;
    for (const auto& x : s) {
      records += oracle::BruteForceDuplicatePairs({x}, t) > 0;
    }
    EXPECT_EQ(stats.synthetic_records, records);
  }
}

TEST(DuplicateCountTest, CopyAndDisjointCorpora) {
  const auto texts = RandomTexts(50, 1000, 8);
  std::size_t long_enough = 0;
  for (const auto& t : texts) long_enough += oracle::Words(t).size() >= 3;
  EXPECT_GE(DuplicateCount(Unlabeled(texts), Unlabeled(texts)).pairs,
            long_enough);
  std::vector<std::string> renamed;
  for (const auto& t : RandomTexts(50, 1000, 9)) {
    std::string r;
    for (const auto& w : oracle::Words(t)) r += "z" + w + " ";
    renamed.push_back(r + "k1 k2 k3");
  }
  EXPECT_EQ(DuplicateCount(Unlabeled(texts), Unlabeled(renamed)).pairs, 0u);
}

TEST(CanaryExtractionTest, MatchesNaiveScan) {
  auto texts = RandomTexts(300, 4, 21);
  const std::vector<std::string> canaries = {"w1 w2", "w0 w0 w3", "w3",
                                             "w2 w1 w0 w3"};
  const auto counts = CanaryExtraction(Unlabeled(texts), canaries);
  ASSERT_EQ(counts.size(), canaries.size());
  for (std::size_t i = 0; i < canaries.size(); ++i) {
    EXPECT_EQ(counts[i], oracle::NaiveContainsCount(texts, canaries[i]))
        << canaries[i];
  }
}

TEST(CanaryExtractionTest, PlantedAndAbsentCanaries) {
  auto texts = RandomTexts(100, 50, 4);
  EXPECT_EQ(CanaryExtraction(Unlabeled(texts), {"zq7 vexil brant"})[0], 0u);
  texts.push_back("w1 zq7 vexil brant w2");
  texts.push_back("zq7 vexil  BRANT");
  texts.push_back("zq7 vexil w9 brant");
  EXPECT_EQ(CanaryExtraction(Unlabeled(texts), {"zq7 vexil brant"})[0], 2u);
  EXPECT_THROW(CanaryExtraction(Unlabeled(texts), {"  "}), Error);
}

TEST(TfidfTest, HandComputedWeights) {
  const Corpus c = Unlabeled({"a a b", "b c"});
  const auto v = TfidfVectorizer::Fit({&c}, {"z"});
  ASSERT_EQ(v.terms(), (std::vector<std::string>{"a", "b", "c", "z"}));
  const double idf_a = std::log(3.0 / 2.0) + 1.0;
  const double idf_b = std::log(3.0 / 3.0) + 1.0;
  EXPECT_DOUBLE_EQ(v.idf()[0], idf_a);
  EXPECT_DOUBLE_EQ(v.idf()[1], idf_b);
  EXPECT_DOUBLE_EQ(v.idf()[3], std::log(3.0) + 1.0);
  const auto x = v.Transform("a a b unseen");
  ASSERT_EQ(x.index, (std::vector<std::uint32_t>{0, 1}));
  const double wa = (1.0 + std::log(2.0)) * idf_a;
  const double wb = idf_b;
  const double norm = std::hypot(wa, wb);
  EXPECT_NEAR(x.value[0], wa / norm, 1e-15);
  EXPECT_NEAR(x.value[1], wb / norm, 1e-15);
  EXPECT_TRUE(v.Transform("nothing known").index.empty());
}

TEST(LogisticObjectiveTest, GradientMatchesFiniteDifferences) {
  const Corpus c = Unlabeled(RandomTexts(30, 12, 5));
  const auto v = TfidfVectorizer::Fit({&c});
  std::vector<SparseVector> x;
  std::vector<double> y;
  Rng rng(2);
  for (const auto& r : c.records()) {
    x.push_back(v.Transform(r.text));
    y.push_back(rng.Bernoulli(0.5) ? 1.0 : -1.0);
  }
  std::vector<double> w(v.dimension() + 1);
  for (double& wi : w) wi = 0.5 * rng.Normal();
  std::vector<double> grad;
  LogisticObjective(x, y, 0.3, w, grad);
  std::vector<double> scratch;
  const auto fd = oracle::CentralDifferences(w, [&](std::span<const double> p) {
    return LogisticObjective(x, y, 0.3, p, scratch);
  });
  EXPECT_LT(oracle::MaxRelativeError(grad, fd), 1e-4);
}

TEST(LbfgsTest, MinimizesAnIllConditionedQuadratic) {
  const std::vector<double> scale{1.0, 10.0, 100.0};
  const std::vector<double> center{1.0, -2.0, 0.5};
  const auto r = MinimizeLbfgs(
      {0.0, 0.0, 0.0},
      [&](std::span<const double> x, std::vector<double>& g) {
        double f = 0.0;
        g.assign(3, 0.0);
        for (int i = 0; i < 3; ++i) {
          const double d = x[i] - center[i];
          f += 0.5 * scale[i] * d * d;
          g[i] = scale[i] * d;
        }
        return f;
      },
      1e-10, 500);
  EXPECT_TRUE(r.converged);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.x[i], center[i], 1e-9);
}

TEST(ClassifierTest, TwoDisjointRecordsSeparatePerfectly) {
  const Corpus c({{"sun joy", {{"sentiment", "positive"}}},
                  {"rain gloom", {{"sentiment", "negative"}}}},
                 Sentiment(), CorpusRole::kTrain);
  const auto clf = TrainTfidfClassifier(c, "sentiment");
  EXPECT_EQ(clf.Accuracy(c), 1.0);
  EXPECT_EQ(clf.Predict("joy"), "positive");
  EXPECT_EQ(clf.Predict("gloom"), "negative");
}

TEST(ClassifierTest, SingleClassIsAnError) {
  const Corpus c(
      {{"a", {{"sentiment", "positive"}}}, {"b", {{"sentiment", "positive"}}}},
      Sentiment(), CorpusRole::kTrain);
  EXPECT_THROW(TrainTfidfClassifier(c, "sentiment"), Error);
  EXPECT_THROW(TrainTfidfClassifier(c, "topic"), Error);
}

TEST(ClassifierTest, ToyCorpusIsSeparable) {
  const ToySplit toy = MakeToy(500, 7);
  const auto clf = TrainTfidfClassifier(toy.train, "sentiment");
  EXPECT_GE(clf.Accuracy(toy.train), 0.99);
  EXPECT_GE(clf.Accuracy(toy.test), 0.95);
}

TEST(ClassifierTest, Deterministic) {
  const ToySplit toy = MakeToy(100, 8);
  const auto a = TrainTfidfClassifier(toy.train, "sentiment");
  const auto b = TrainTfidfClassifier(toy.train, "sentiment");
  EXPECT_EQ(a.weights(), b.weights());
}

TEST(UtilityGapTest, IdenticalCorporaGiveZeroGap) {
  const ToySplit toy = MakeToy(200, 9);
  const auto u = UtilityGap(toy.train, toy.train, toy.test, "sentiment");
  EXPECT_EQ(u.real_accuracy, u.synthetic_accuracy);
}

TEST(UtilityGapTest, PermutedLabelsFallToChance) {
  const ToySplit toy = MakeToy(400, 10);
  double total = 0.0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    total += UtilityGap(toy.train, Relabel(toy.train, false, s), toy.test,
                        "sentiment")
                 .synthetic_accuracy;
  }
  EXPECT_NEAR(total / 3, 0.5, 0.1);
}

TEST(LabelFidelityTest, RealCorpusAndComplement) {
  const ToySplit toy = MakeToy(200, 11);
  const auto ref = TrainTfidfClassifier(toy.train, "sentiment");
  const double rate = LabelFidelity(toy.train, ref);
  EXPECT_DOUBLE_EQ(rate, ref.Accuracy(toy.train));
  EXPECT_NEAR(LabelFidelity(Relabel(toy.train, true), ref), 1.0 - rate, 1e-12);
}

TEST(DpClassifierTest, InfiniteEpsilonMatchesNonPrivate) {
  const ToySplit toy = MakeToy(300, 12);
  const auto features = TfidfVectorizer::Fit({&toy.pub}, toy.signature);
  DpClassifierPlan plan;
  const auto dp =
      DpClassifierBaseline(toy.train, toy.test, "sentiment", features, plan);
  const double real =
      TrainTfidfClassifier(toy.train, "sentiment").Accuracy(toy.test);
  EXPECT_NEAR(dp.accuracy, real, 0.005);
  EXPECT_EQ(dp.sigma, 0.0);
  EXPECT_TRUE(std::isinf(dp.epsilon));
}

TEST(DpClassifierTest, PrivateArmSpendsAtMostTarget) {
  const ToySplit toy = MakeToy(300, 13);
  const auto features = TfidfVectorizer::Fit({&toy.pub}, toy.signature);
  double private_acc = 0.0, open_acc = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    DpClassifierPlan plan;
    plan.seed = seed;
    open_acc +=
        DpClassifierBaseline(toy.train, toy.test, "sentiment", features, plan)
            .accuracy;
    plan.epsilon = 3.0;
    const auto r =
        DpClassifierBaseline(toy.train, toy.test, "sentiment", features, plan);
    EXPECT_LE(r.epsilon, 3.0);
    EXPECT_GT(r.sigma, 0.0);
    private_acc += r.accuracy;
  }
  EXPECT_LE(private_acc, open_acc + 1e-12);
}

TEST(DistributionSimilarityTest, IdentityDisjointnessSymmetryRange) {
  const Corpus a = Unlabeled(RandomTexts(80, 10, 1));
  const Corpus b = Unlabeled(RandomTexts(80, 10, 2));
  EXPECT_NEAR(DistributionSimilarity(a, a), 1.0, 1e-12);
  const double ab = DistributionSimilarity(a, b);
  EXPECT_DOUBLE_EQ(ab, DistributionSimilarity(b, a));
  EXPECT_GT(ab, 0.0);
  EXPECT_LT(ab, 1.0);
  std::vector<std::string> renamed;
  for (const auto& t : TextsOf(b)) {
    std::string r;
    for (const auto& w : oracle::Words(t)) r += "q" + w + " ";
    renamed.push_back(r);
  }
  EXPECT_NEAR(DistributionSimilarity(a, Unlabeled(renamed)), 0.0, 1e-4);
}

TEST(AuditTest, SyntheticEqualsRealGivesFullOverlap) {
  const ToySplit toy = MakeToy(100, 14);
  const auto features = TfidfVectorizer::Fit({&toy.pub}, toy.signature);
  AuditOptions options;
  options.canaries = {"zq7 vexil brant"};
  const Corpus synthetic(toy.train.records(), toy.train.schema_ptr(),
                         CorpusRole::kSynthetic);
  const auto report = Audit(synthetic, toy.train, toy.test, features, options);
  EXPECT_GE(report.duplicates.pairs, toy.train.size());
  EXPECT_EQ(report.duplicates.synthetic_records, toy.train.size());
  EXPECT_NEAR(report.similarity, 1.0, 1e-12);
  ASSERT_EQ(report.canaries.size(), 1u);
  EXPECT_EQ(report.canaries[0].second, 0u);
  const auto& u = report.utility.at("sentiment");
  EXPECT_EQ(u.real_accuracy, u.synthetic_accuracy);
  ASSERT_TRUE(u.dp_accuracy.has_value());
  const std::string table = FormatReportTable(report);
  EXPECT_NE(table.find("dp-real"), std::string::npos);
  EXPECT_NE(table.find("sentiment"), std::string::npos);
}

TEST(AuditTest, EmptySyntheticCorpusIsAnError) {
  const ToySplit toy = MakeToy(20, 15);
  const auto features = TfidfVectorizer::Fit({&toy.pub});
  EXPECT_THROW(Audit(Unlabeled({}), toy.train, toy.test, features, {}), Error);
}

}  // namespace
}  // namespace twinsynth
