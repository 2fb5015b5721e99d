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

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "spdlog/spdlog.h"
#include "twinsynth/common.h"
#include "twinsynth/dp_optim.h"
#include "twinsynth/tokenizer.h"

namespace twinsynth {
namespace {

constexpr char kJoin = '\x1f';

double Softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

double Sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double Score(std::span<const double> w, const SparseVector& x) {
  double z = w.back();
  for (std::size_t k = 0; k < x.index.size(); ++k)
    z += w[x.index[k]] * x.value[k];
  return z;
}

std::vector<std::string> ClassesPresent(const Corpus& corpus,
                                        const std::string& attribute) {
  const AttributeSchema& schema = corpus.schema();
  const std::size_t a = schema.FindAttribute(attribute);
  if (a == AttributeSchema::npos) {
    throw InvalidArgument("unknown attribute '" + attribute + "'");
  }
  std::set<std::string> present;
  for (const auto& r : corpus.records()) {
    auto it = r.attrs.find(attribute);
    if (it != r.attrs.end()) present.insert(it->second);
  }
  std::vector<std::string> out;
  for (const auto& v : schema.attributes()[a].values) {
    if (present.count(v)) out.push_back(v);
  }
  return out;
}

// Features and class indices of the records labeled for `attribute`.
void Featurize(const Corpus& corpus, const std::string& attribute,
               const TfidfVectorizer& features,
               const std::vector<std::string>& classes,
               std::vector<SparseVector>& x, std::vector<std::size_t>& label) {
  for (const auto& r : corpus.records()) {
    auto it = r.attrs.find(attribute);
    if (it == r.attrs.end()) continue;
    auto c = std::find(classes.begin(), classes.end(), it->second);
    if (c == classes.end()) continue;
    x.push_back(features.Transform(r.text));
    label.push_back(static_cast<std::size_t>(c - classes.begin()));
  }
}

std::string Fixed(double v, int precision = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

TrigramSet Trigrams(std::string_view text) {
  const auto w = NormalizeWords(text);
  TrigramSet out;
  for (std::size_t i = 0; i + 2 < w.size(); ++i) {
    out.push_back(w[i] + kJoin + w[i + 1] + kJoin + w[i + 2]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool IsDuplicate(std::string_view a, std::string_view b) {
  const auto ta = Trigrams(a);
  const auto tb = Trigrams(b);
  if (ta.empty() || tb.empty()) return false;
  std::vector<std::string> common;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(),
                        std::back_inserter(common));
  return 2 * common.size() >= std::min(ta.size(), tb.size());
}

DuplicateStats DuplicateCount(const Corpus& synthetic, const Corpus& train) {
  std::unordered_map<std::string, std::vector<std::uint32_t>> postings;
  std::vector<std::size_t> train_sizes(train.size());
  for (std::size_t j = 0; j < train.size(); ++j) {
    const auto t = Trigrams(train.records()[j].text);
    train_sizes[j] = t.size();
    for (const auto& g : t)
      postings[g].push_back(static_cast<std::uint32_t>(j));
  }
  DuplicateStats stats;
  std::vector<std::uint32_t> shared(train.size(), 0);
  std::vector<std::uint32_t> touched;
  for (const auto& r : synthetic.records()) {
    const auto t = Trigrams(r.text);
    if (t.empty()) continue;
    touched.clear();
    for (const auto& g : t) {
      auto it = postings.find(g);
      if (it == postings.end()) continue;
      for (std::uint32_t j : it->second) {
        if (shared[j]++ == 0) touched.push_back(j);
      }
    }
    std::size_t hits = 0;
    for (std::uint32_t j : touched) {
      if (2 * shared[j] >= std::min(t.size(), train_sizes[j])) ++hits;
      shared[j] = 0;
    }
    stats.pairs += hits;
    if (hits > 0) ++stats.synthetic_records;
  }
  return stats;
}

std::vector<std::size_t> CanaryExtraction(
    const Corpus& synthetic, const std::vector<std::string>& canaries) {
  std::vector<std::size_t> counts(canaries.size(), 0);
  std::vector<std::vector<std::string>> patterns;
  std::vector<std::vector<std::size_t>> failure;
  for (const auto& c : canaries) {
    auto p = NormalizeWords(c);
    if (p.empty()) throw InvalidArgument("canary is empty");
    // KMP failure function.
    std::vector<std::size_t> f(p.size(), 0);
    for (std::size_t i = 1, k = 0; i < p.size(); ++i) {
      while (k > 0 && p[i] != p[k]) k = f[k - 1];
      if (p[i] == p[k]) ++k;
      f[i] = k;
    }
    patterns.push_back(std::move(p));
    failure.push_back(std::move(f));
  }
  for (const auto& r : synthetic.records()) {
    const auto words = NormalizeWords(r.text);
    for (std::size_t c = 0; c < patterns.size(); ++c) {
      const auto& p = patterns[c];
      const auto& f = failure[c];
      std::size_t k = 0;
      for (const auto& w : words) {
        while (k > 0 && w != p[k]) k = f[k - 1];
        if (w == p[k]) ++k;
        if (k == p.size()) {
          ++counts[c];
          break;
        }
      }
    }
  }
  return counts;
}

TfidfVectorizer TfidfVectorizer::Fit(
    const std::vector<const Corpus*>& corpora,
    const std::vector<std::string>& extra_terms) {
  std::map<std::string, std::size_t> df;
  std::size_t docs = 0;
  for (const Corpus* c : corpora) {
    for (const auto& r : c->records()) {
      ++docs;
      auto words = NormalizeWords(r.text);
      std::sort(words.begin(), words.end());
      words.erase(std::unique(words.begin(), words.end()), words.end());
      for (auto& w : words) ++df[std::move(w)];
    }
  }
  for (const auto& t : extra_terms) {
    for (auto& w : NormalizeWords(t)) df.emplace(std::move(w), 0);
  }
  TfidfVectorizer v;
  for (const auto& [term, count] : df) {
    v.index_.emplace(term, static_cast<std::uint32_t>(v.terms_.size()));
    v.terms_.push_back(term);
    v.idf_.push_back(std::log((1.0 + docs) / (1.0 + count)) + 1.0);
  }
  return v;
}

SparseVector TfidfVectorizer::Transform(std::string_view text) const {
  std::map<std::uint32_t, std::size_t> counts;
  for (const auto& w : NormalizeWords(text)) {
    auto it = index_.find(w);
    if (it != index_.end()) ++counts[it->second];
  }
  SparseVector out;
  double norm = 0.0;
  for (const auto& [i, c] : counts) {
    const double v = (1.0 + std::log(static_cast<double>(c))) * idf_[i];
    out.index.push_back(i);
    out.value.push_back(v);
    norm += v * v;
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& v : out.value) v /= norm;
  }
  return out;
}

LbfgsResult MinimizeLbfgs(
    std::vector<double> x0,
    const std::function<double(std::span<const double>, std::vector<double>&)>&
        value_and_gradient,
    double tolerance, std::size_t max_iterations, std::size_t memory) {
  const std::size_t n = x0.size();
  LbfgsResult r;
  r.x = std::move(x0);
  std::vector<double> g(n), g_new(n), d(n), x_new(n);
  r.value = value_and_gradient(r.x, g);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  auto inf_norm = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
  };
  r.gradient_norm = inf_norm(g);
  for (; r.iterations < max_iterations; ++r.iterations) {
    if (r.gradient_norm <= tolerance) {
      r.converged = true;
      break;
    }
    // Two-loop recursion.
    d = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      double a = 0.0;
      for (std::size_t i = 0; i < n; ++i) a += s_hist[k][i] * d[i];
      a *= rho_hist[k];
      alpha[k] = a;
      for (std::size_t i = 0; i < n; ++i) d[i] -= a * y_hist[k][i];
    }
    if (!s_hist.empty()) {
      double sy = 0.0, yy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sy += s_hist.back()[i] * y_hist.back()[i];
        yy += y_hist.back()[i] * y_hist.back()[i];
      }
      const double gamma = sy / yy;
      for (double& e : d) e *= gamma;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      double b = 0.0;
      for (std::size_t i = 0; i < n; ++i) b += y_hist[k][i] * d[i];
      b *= rho_hist[k];
      for (std::size_t i = 0; i < n; ++i) d[i] += s_hist[k][i] * (alpha[k] - b);
    }
    for (double& e : d) e = -e;
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += g[i] * d[i];
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) slope += g[i] * d[i];
    }
    double step = s_hist.empty() ? std::min(1.0, 1.0 / inf_norm(g)) : 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = r.x[i] + step * d[i];
      f_new = value_and_gradient(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= r.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    std::vector<double> s(n), y(n);
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - r.x[i];
      y[i] = g_new[i] - g[i];
      sy += s[i] * y[i];
    }
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    r.x.swap(x_new);
    g.swap(g_new);
    r.value = f_new;
    r.gradient_norm = inf_norm(g);
  }
  if (!r.converged && r.gradient_norm <= tolerance) r.converged = true;
  return r;
}

LinearClassifier::LinearClassifier(TfidfVectorizer features,
                                   std::string attribute,
                                   std::vector<std::string> classes,
                                   std::vector<std::vector<double>> weights)
    : features_(std::move(features)),
      attribute_(std::move(attribute)),
      classes_(std::move(classes)),
      weights_(std::move(weights)) {
  if (classes_.size() < 2 || classes_.size() != weights_.size()) {
    throw InvalidArgument("classifier needs one weight row per class (>= 2)");
  }
}

std::string LinearClassifier::Predict(std::string_view text) const {
  const SparseVector x = features_.Transform(text);
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    const double s = Score(weights_[c], x);
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return classes_[best];
}

double LinearClassifier::Accuracy(const Corpus& corpus) const {
  std::size_t total = 0, correct = 0;
  for (const auto& r : corpus.records()) {
    auto it = r.attrs.find(attribute_);
    if (it == r.attrs.end()) continue;
    ++total;
    if (Predict(r.text) == it->second) ++correct;
  }
  if (total == 0) throw InvalidArgument("no labeled records to score");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double LogisticObjective(const std::vector<SparseVector>& x,
                         const std::vector<double>& y, double l2,
                         std::span<const double> w, std::vector<double>& grad) {
  const std::size_t dim = w.size() - 1;
  grad.assign(w.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(x.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = y[i] * Score(w, x[i]);
    loss += Softplus(-t);
    const double coef = -y[i] * Sigmoid(-t) * inv_n;
    for (std::size_t k = 0; k < x[i].index.size(); ++k) {
      grad[x[i].index[k]] += coef * x[i].value[k];
    }
    grad[dim] += coef;
  }
  loss *= inv_n;
  for (std::size_t j = 0; j < dim; ++j) {
    loss += 0.5 * l2 * w[j] * w[j];
    grad[j] += l2 * w[j];
  }
  return loss;
}

LinearClassifier TrainTfidfClassifier(const Corpus& train,
                                      const std::string& attribute,
                                      const ClassifierOptions& options) {
  auto classes = ClassesPresent(train, attribute);
  if (classes.size() < 2) {
    throw InvalidArgument("classifier for '" + attribute +
                          "' needs at least two classes in the training data");
  }
  TfidfVectorizer features = TfidfVectorizer::Fit({&train});
  std::vector<SparseVector> x;
  std::vector<std::size_t> label;
  Featurize(train, attribute, features, classes, x, label);
  std::vector<std::vector<double>> weights;
  std::vector<double> y(x.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (std::size_t i = 0; i < x.size(); ++i)
      y[i] = label[i] == c ? 1.0 : -1.0;
    auto res = MinimizeLbfgs(
        std::vector<double>(features.dimension() + 1, 0.0),
        [&](std::span<const double> w, std::vector<double>& g) {
          return LogisticObjective(x, y, options.l2, w, g);
        },
        options.tolerance, options.max_iterations);
    if (!res.converged) {
      spdlog::warn("classifier '{}' class '{}' stopped at gradient norm {:.3g}",
                   attribute, classes[c], res.gradient_norm);
    }
    weights.push_back(std::move(res.x));
    if (classes.size() == 2) {
      // The second binary problem is the mirror image of the first.
      std::vector<double> mirror = weights.back();
      for (double& v : mirror) v = -v;
      weights.push_back(std::move(mirror));
      break;
    }
  }
  return LinearClassifier(std::move(features), attribute, std::move(classes),
                          std::move(weights));
}

UtilityResult UtilityGap(const Corpus& real_train,
                         const Corpus& synthetic_train, const Corpus& test,
                         const std::string& attribute,
                         const ClassifierOptions& options) {
  if (!(real_train.schema() == synthetic_train.schema()) ||
      !(real_train.schema() == test.schema())) {
    throw InvalidArgument("utility corpora must share a schema");
  }
  const auto real = TrainTfidfClassifier(real_train, attribute, options);
  const auto synth = TrainTfidfClassifier(synthetic_train, attribute, options);
  return {real.Accuracy(test), synth.Accuracy(test)};
}

DpClassifierResult DpClassifierBaseline(const Corpus& real_train,
                                        const Corpus& test,
                                        const std::string& attribute,
                                        const TfidfVectorizer& public_features,
                                        const DpClassifierPlan& plan) {
  // Classes come from the public schema, not from the private records.
  const std::size_t a = real_train.schema().FindAttribute(attribute);
  if (a == AttributeSchema::npos) {
    throw InvalidArgument("unknown attribute '" + attribute + "'");
  }
  const auto classes = real_train.schema().attributes()[a].values;
  std::vector<SparseVector> x;
  std::vector<std::size_t> label;
  Featurize(real_train, attribute, public_features, classes, x, label);
  const std::size_t n = x.size();
  if (n == 0) throw InvalidArgument("no labeled training records");
  const std::size_t row = public_features.dimension() + 1;
  const std::size_t k = classes.size();

  DpClassifierResult result;
  result.delta = plan.delta.value_or(DeltaDefault(n));
  DpOptimConfig cfg;
  cfg.learning_rate = plan.learning_rate;
  cfg.seed = DeriveSeed(plan.seed, Stream::kClassifier);
  double q = 1.0;
  if (plan.epsilon) {
    q = plan.sampling_rate;
    PrivacySpec spec;
    spec.epsilon = *plan.epsilon;
    spec.delta = result.delta;
    spec.dataset_size = n;
    spec.sampling_rate = q;
    spec.steps = plan.steps;
    result.sigma = CalibrateSigma(spec, plan.conversion);
    cfg.clip_norm = plan.clip_norm;
    cfg.noise_multiplier = result.sigma;
    result.epsilon = SpentEpsilon(result.sigma, q, plan.steps, result.delta,
                                  plan.conversion);
  } else {
    cfg.clip_norm = std::numeric_limits<double>::infinity();
    result.epsilon = std::numeric_limits<double>::infinity();
  }
  cfg.expected_batch_size = q * static_cast<double>(n);

  std::vector<double> theta(k * row, 0.0);
  TrainDpAdam(theta, n, q, plan.steps, cfg,
              [&](std::size_t i, std::vector<double>& g) {
                double loss = 0.0;
                for (std::size_t c = 0; c < k; ++c) {
                  std::span<const double> w(theta.data() + c * row, row);
                  double* gc = g.data() + c * row;
                  const double y = label[i] == c ? 1.0 : -1.0;
                  const double t = y * Score(w, x[i]);
                  loss += Softplus(-t);
                  const double coef = -y * Sigmoid(-t);
                  for (std::size_t m = 0; m < x[i].index.size(); ++m) {
                    gc[x[i].index[m]] += coef * x[i].value[m];
                  }
                  gc[row - 1] += coef;
                  for (std::size_t j = 0; j + 1 < row; ++j) {
                    loss += 0.5 * plan.l2 * w[j] * w[j];
                    gc[j] += plan.l2 * w[j];
                  }
                }
                return loss;
              });
  std::vector<std::vector<double>> weights;
  for (std::size_t c = 0; c < k; ++c) {
    weights.emplace_back(theta.begin() + c * row,
                         theta.begin() + (c + 1) * row);
  }
  const LinearClassifier clf(public_features, attribute, classes,
                             std::move(weights));
  result.accuracy = clf.Accuracy(test);
  return result;
}

double LabelFidelity(const Corpus& synthetic,
                     const LinearClassifier& reference) {
  std::size_t total = 0, agree = 0;
  for (const auto& r : synthetic.records()) {
    auto it = r.attrs.find(reference.attribute());
    if (it == r.attrs.end()) continue;
    ++total;
    if (reference.Predict(r.text) == it->second) ++agree;
  }
  if (total == 0) return 0.0;
  return static_cast<double>(agree) / static_cast<double>(total);
}

double DistributionSimilarity(const Corpus& a, const Corpus& b,
                              double pseudo_count) {
  if (a.empty() || b.empty()) {
    throw InvalidArgument("distribution similarity needs non-empty corpora");
  }
  if (!(pseudo_count >= 0.0))
    throw InvalidArgument("pseudo_count must be >= 0");
  // counts[e] = (count in a, count in b) per order.
  std::map<std::string, std::pair<double, double>> uni, bi;
  auto add = [&](const Corpus& c, bool first) {
    for (const auto& r : c.records()) {
      const auto w = NormalizeWords(r.text);
      for (std::size_t i = 0; i < w.size(); ++i) {
        auto& u = uni[w[i]];
        (first ? u.first : u.second) += 1.0;
        if (i + 1 < w.size()) {
          auto& p = bi[w[i] + kJoin + w[i + 1]];
          (first ? p.first : p.second) += 1.0;
        }
      }
    }
  };
  add(a, true);
  add(b, false);
  const bool has_bi = !bi.empty();
  const double w_uni = has_bi ? 0.5 : 1.0;
  double js = 0.0;
  auto accumulate =
      [&](const std::map<std::string, std::pair<double, double>>& m,
          double weight) {
        double ta = 0.0, tb = 0.0;
        for (const auto& [k, c] : m) {
          ta += c.first;
          tb += c.second;
        }
        const double support = static_cast<double>(m.size());
        const double za = ta + pseudo_count * support;
        const double zb = tb + pseudo_count * support;
        for (const auto& [k, c] : m) {
          const double p = za > 0 ? weight * (c.first + pseudo_count) / za
                                  : weight / support;
          const double q = zb > 0 ? weight * (c.second + pseudo_count) / zb
                                  : weight / support;
          const double mid = 0.5 * (p + q);
          double term = 0.0;
          if (p > 0) term += p * std::log2(p / mid);
          if (q > 0) term += q * std::log2(q / mid);
          js += 0.5 * term;
        }
      };
  accumulate(uni, w_uni);
  if (has_bi) accumulate(bi, 0.5);
  return std::clamp(1.0 - js, 0.0, 1.0);
}

AuditReport Audit(const Corpus& synthetic, const Corpus& real_train,
                  const Corpus& real_test,
                  const TfidfVectorizer& public_features,
                  const AuditOptions& options, std::size_t flagged_records) {
  if (synthetic.empty()) throw InvalidArgument("synthetic corpus is empty");
  AuditReport report;
  report.synthetic_size = synthetic.size();
  report.flagged_records = flagged_records;
  if (options.duplicates)
    report.duplicates = DuplicateCount(synthetic, real_train);
  const auto counts = CanaryExtraction(synthetic, options.canaries);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    report.canaries.emplace_back(options.canaries[i], counts[i]);
  }
  if (options.utility) {
    for (const auto& attr : real_train.schema().attributes()) {
      AttributeUtility u;
      const auto real =
          TrainTfidfClassifier(real_train, attr.name, options.classifier);
      u.real_accuracy = real.Accuracy(real_test);
      u.label_fidelity = LabelFidelity(synthetic, real);
      const auto synth =
          TrainTfidfClassifier(synthetic, attr.name, options.classifier);
      u.synthetic_accuracy = synth.Accuracy(real_test);
      if (options.dp_classifier) {
        const auto dp = DpClassifierBaseline(real_train, real_test, attr.name,
                                             public_features, options.dp_plan);
        u.dp_accuracy = dp.accuracy;
        u.dp_epsilon = dp.epsilon;
      }
      report.utility.emplace(attr.name, u);
    }
  }
  if (options.similarity) {
    report.similarity = DistributionSimilarity(real_train, synthetic);
  }
  return report;
}

std::string FormatReportTable(const AuditReport& report) {
  std::ostringstream os;
  os << "synthetic records      " << report.synthetic_size << " ("
     << report.flagged_records << " flagged)\n";
  os << "duplicate pairs        " << report.duplicates.pairs << "\n";
  os << "duplicating records    " << report.duplicates.synthetic_records
     << "\n";
  for (const auto& [canary, count] : report.canaries) {
    os << "canary \"" << canary << "\"  " << count << "\n";
  }
  os << "n-gram similarity      " << Fixed(report.similarity) << "\n";
  if (!report.utility.empty()) {
    os << std::left << std::setw(16) << "attribute" << std::setw(12) << "real"
       << std::setw(12) << "synthetic" << std::setw(12) << "dp-real"
       << "label-fidelity\n";
    for (const auto& [name, u] : report.utility) {
      os << std::left << std::setw(16) << name << std::setw(12)
         << Fixed(u.real_accuracy) << std::setw(12)
         << Fixed(u.synthetic_accuracy) << std::setw(12)
         << (u.dp_accuracy ? Fixed(*u.dp_accuracy) : "-")
         << Fixed(u.label_fidelity) << "\n";
    }
  }
  return os.str();
}

}  // namespace twinsynth
