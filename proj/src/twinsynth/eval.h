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

#ifndef TWINSYNTH_EVAL_H_
#define TWINSYNTH_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "twinsynth/accountant.h"
#include "twinsynth/corpus.h"

namespace twinsynth {

// Sorted, de-duplicated word trigrams of the normalized text; empty below
// three words.
using TrigramSet = std::vector<std::string>;
TrigramSet Trigrams(std::string_view text);

// |g3(a) n g3(b)| >= min(|g3(a)|, |g3(b)|) / 2 with both sets non-empty.
bool IsDuplicate(std::string_view a, std::string_view b);

struct DuplicateStats {
  std::size_t pairs = 0;
  // Synthetic records that duplicate at least one training record.
  std::size_t synthetic_records = 0;
};

// Inverted-index count over all (synthetic, train) pairs.
DuplicateStats DuplicateCount(const Corpus& synthetic, const Corpus& train);

// Number of synthetic records containing each canary as a contiguous run of
// normalized words.
std::vector<std::size_t> CanaryExtraction(
    const Corpus& synthetic, const std::vector<std::string>& canaries);

struct SparseVector {
  std::vector<std::uint32_t> index;  // ascending
  std::vector<double> value;
};

// Log-scaled tf times smoothed idf, L2-normalized:
//   tf = 1 + log(count), idf = log((1 + N) / (1 + df)) + 1.
class TfidfVectorizer {
 public:
  // Terms and document frequencies from `corpora`; `extra_terms` join the
  // vocabulary with df 0.
  static TfidfVectorizer Fit(const std::vector<const Corpus*>& corpora,
                             const std::vector<std::string>& extra_terms = {});

  SparseVector Transform(std::string_view text) const;
  std::size_t dimension() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<double> idf_;
};

struct ClassifierOptions {
  double l2 = 1e-3;
  double tolerance = 1e-6;
  std::size_t max_iterations = 2000;
};

// Minimizes f over R^n by limited-memory BFGS with Armijo backtracking,
// stopping when the infinity norm of the gradient drops to `tolerance`.
struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};
LbfgsResult MinimizeLbfgs(
    std::vector<double> x0,
    const std::function<double(std::span<const double>, std::vector<double>&)>&
        value_and_gradient,
    double tolerance, std::size_t max_iterations, std::size_t memory = 10);

// One-vs-rest L2-regularized logistic regression, one weight row of
// (dimension + 1) entries per class, bias last and unregularized.
class LinearClassifier {
 public:
  LinearClassifier(TfidfVectorizer features, std::string attribute,
                   std::vector<std::string> classes,
                   std::vector<std::vector<double>> weights);

  std::string Predict(std::string_view text) const;
  double Accuracy(const Corpus& corpus) const;

  const TfidfVectorizer& features() const { return features_; }
  const std::string& attribute() const { return attribute_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::vector<double>>& weights() const { return weights_; }

 private:
  TfidfVectorizer features_;
  std::string attribute_;
  std::vector<std::string> classes_;
  std::vector<std::vector<double>> weights_;
};

// Mean binary logistic loss of labels y in {-1, +1} plus l2/2 |w|^2 over the
// non-bias weights, with its gradient. Exposed for gradient checks.
double LogisticObjective(const std::vector<SparseVector>& x,
                         const std::vector<double>& y, double l2,
                         std::span<const double> w, std::vector<double>& grad);

// Classes are the attribute's schema values present in `train`, in schema
// order. Throws when fewer than two are present.
LinearClassifier TrainTfidfClassifier(const Corpus& train,
                                      const std::string& attribute,
                                      const ClassifierOptions& options = {});

struct UtilityResult {
  double real_accuracy = 0.0;
  double synthetic_accuracy = 0.0;
};

// Both classifiers are scored on the same `test` corpus.
UtilityResult UtilityGap(const Corpus& real_train,
                         const Corpus& synthetic_train, const Corpus& test,
                         const std::string& attribute,
                         const ClassifierOptions& options = {});

struct DpClassifierPlan {
  // nullopt trains without clipping or noise (epsilon = inf).
  std::optional<double> epsilon;
  std::optional<double> delta;  // Defaults to 1 / (2 n).
  double sampling_rate = 0.05;
  std::uint64_t steps = 300;
  double clip_norm = 1.0;
  double learning_rate = 0.1;
  double l2 = 1e-3;
  Conversion conversion = Conversion::kTight;
  std::uint64_t seed = 0;
};

struct DpClassifierResult {
  double accuracy = 0.0;
  double sigma = 0.0;
  double epsilon = 0.0;  // Spent; +inf without privacy.
  double delta = 0.0;
};

// The same one-vs-rest logistic model trained with per-sample clipping and
// Gaussian noise on `real_train`. Features come from `public_features`, so
// the featurization itself reads no private data.
DpClassifierResult DpClassifierBaseline(const Corpus& real_train,
                                        const Corpus& test,
                                        const std::string& attribute,
                                        const TfidfVectorizer& public_features,
                                        const DpClassifierPlan& plan);

// Share of synthetic records whose prompted value of the classifier's
// attribute equals the classifier's prediction.
double LabelFidelity(const Corpus& synthetic,
                     const LinearClassifier& reference);

// 1 - JS (base 2) between the corpora's smoothed n-gram distributions: an
// equal-weight mixture of unigram and within-record bigram frequencies over
// the union support, each count raised by `pseudo_count`.
double DistributionSimilarity(const Corpus& a, const Corpus& b,
                              double pseudo_count = 1e-6);

struct AttributeUtility {
  double real_accuracy = 0.0;
  double synthetic_accuracy = 0.0;
  std::optional<double> dp_accuracy;
  std::optional<double> dp_epsilon;
  double label_fidelity = 0.0;
};

struct AuditReport {
  std::size_t synthetic_size = 0;
  std::size_t flagged_records = 0;
  DuplicateStats duplicates;
  std::vector<std::pair<std::string, std::size_t>> canaries;
  std::map<std::string, AttributeUtility> utility;
  double similarity = 0.0;
};

struct AuditOptions {
  std::vector<std::string> canaries;
  bool utility = true;
  bool dp_classifier = true;
  DpClassifierPlan dp_plan;
  ClassifierOptions classifier;
  bool duplicates = true;
  bool similarity = true;
};

AuditReport Audit(const Corpus& synthetic, const Corpus& real_train,
                  const Corpus& real_test,
                  const TfidfVectorizer& public_features,
                  const AuditOptions& options, std::size_t flagged_records = 0);

std::string FormatReportTable(const AuditReport& report);

}  // namespace twinsynth

#endif  // TWINSYNTH_EVAL_H_
