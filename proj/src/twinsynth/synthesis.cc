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

#include "twinsynth/synthesis.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "spdlog/spdlog.h"
#include "twinsynth/common.h"
#include "twinsynth/rng.h"
#include "twinsynth/tokenizer.h"

namespace twinsynth {
namespace {

std::size_t CeilDiv(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Re-raises a divergence error with the training phase prefixed.
template <typename Fn>
auto WithPhase(const char* phase, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDivergence) throw;
    throw Error(ErrorCode::kDivergence, std::string(phase) + ": " + e.what());
  }
}

}  // namespace

void TrainPlan::Validate() const {
  if (pretrain_epochs > 0 && pretrain_batch_size == 0) {
    throw ConfigError("train.pretrain.batch_size must be positive");
  }
  if (!(pretrain_learning_rate > 0.0)) {
    throw ConfigError("train.pretrain.learning_rate must be positive");
  }
  if (target_epsilon && !(*target_epsilon > 0.0)) {
    throw ConfigError("train.epsilon must be positive or inf");
  }
  if (delta && !(*delta > 0.0 && *delta < 1.0)) {
    throw ConfigError("train.delta must lie in (0, 1)");
  }
  if (!(sampling_rate > 0.0 && sampling_rate <= 1.0)) {
    throw ConfigError("train.dp.sampling_rate must lie in (0, 1]");
  }
  if (!(clip_norm > 0.0))
    throw ConfigError("train.dp.clip_norm must be positive");
  if (!(dp_learning_rate > 0.0)) {
    throw ConfigError("train.dp.learning_rate must be positive");
  }
  if (!(nonprivate_learning_rate > 0.0)) {
    throw ConfigError("train.nonprivate.learning_rate must be positive");
  }
  if (nonprivate_batch_size == 0) {
    throw ConfigError("train.nonprivate.batch_size must be positive");
  }
  if (!(loss.lambda >= 0.0))
    throw ConfigError("train.loss.lambda must be >= 0");
  if (loss.wrong_cap_per_token && !(*loss.wrong_cap_per_token >= 0.0)) {
    throw ConfigError("train.loss.wrong_cap_per_token must be >= 0");
  }
  if (!(sigma_max > 0.0)) throw ConfigError("train.sigma_max must be positive");
}

Vocabulary BuildPublicVocabulary(const Corpus& public_corpus,
                                 const PromptTemplate& tmpl,
                                 const AttributeSchema& schema,
                                 const std::vector<std::string>& extra_tokens,
                                 std::size_t max_size) {
  std::set<std::string> required;
  for (const auto& a : schema.AllAssignments()) {
    for (auto& w : NormalizeWords(tmpl.Render(schema, a))) {
      required.insert(std::move(w));
    }
  }
  for (const auto& t : extra_tokens) {
    for (auto& w : NormalizeWords(t)) required.insert(std::move(w));
  }
  return Vocabulary::Build({&public_corpus}, max_size,
                           {required.begin(), required.end()});
}

std::uint64_t FinetuneSteps(const TrainPlan& plan, std::size_t n) {
  if (n == 0) return 0;
  if (plan.is_private()) {
    return static_cast<std::uint64_t>(
        std::ceil(static_cast<double>(plan.dp_epochs) / plan.sampling_rate));
  }
  return plan.nonprivate_epochs * CeilDiv(n, plan.nonprivate_batch_size);
}

TrainResult Train(const TrainPlan& plan, const Corpus& public_corpus,
                  const Corpus& private_corpus, const PromptTemplate& tmpl,
                  const AttributeSchema& schema,
                  const std::vector<std::string>& extra_tokens) {
  plan.Validate();
  const std::size_t n = private_corpus.size();

  PrivacyReport privacy;
  privacy.is_private = plan.is_private();
  privacy.conversion = plan.conversion;
  privacy.delta = plan.delta.value_or(n > 0 ? DeltaDefault(n) : 0.5);
  const std::uint64_t steps = FinetuneSteps(plan, n);
  if (plan.is_private()) {
    privacy.sampling_rate = plan.sampling_rate;
    privacy.steps = steps;
    PrivacySpec spec;
    spec.epsilon = *plan.target_epsilon;
    spec.delta = privacy.delta;
    spec.dataset_size = n;
    spec.sampling_rate = plan.sampling_rate;
    spec.steps = steps;
    privacy.sigma = CalibrateSigma(spec, plan.conversion, plan.sigma_max);
    spdlog::info(
        "calibrated sigma {:.4f} for epsilon {} delta {:.3g} q {} T {}",
        privacy.sigma, spec.epsilon, spec.delta, spec.sampling_rate, steps);
  } else {
    privacy.epsilon = std::numeric_limits<double>::infinity();
  }

  auto vocab = std::make_shared<const Vocabulary>(BuildPublicVocabulary(
      public_corpus, tmpl, schema, extra_tokens, plan.vocab_max_size));
  ModelConfig mc = plan.model;
  mc.vocab_size = vocab->size();
  mc.init_seed = DeriveSeed(plan.seed, Stream::kInit);
  LanguageModel model(mc, vocab);
  const std::size_t ctx = mc.context_length;
  const std::size_t dim = model.num_parameters();
  spdlog::info("model: vocab {} params {}", vocab->size(), dim);

  TrainResult result{std::move(model), std::move(privacy), {}, {}};
  LanguageModel& m = result.model;

  // Public pretraining.
  if (plan.pretrain_epochs > 0 && !public_corpus.empty()) {
    std::vector<TokenSequence> seqs;
    seqs.reserve(public_corpus.size());
    for (const auto& r : public_corpus.records()) {
      seqs.push_back(BuildSequence(*vocab, "", r.text, ctx));
    }
    DpOptimConfig cfg;
    cfg.learning_rate = plan.pretrain_learning_rate;
    cfg.seed = DeriveSeed(plan.seed, Stream::kShuffle, 0);
    const std::uint64_t pre_steps =
        plan.pretrain_epochs * CeilDiv(seqs.size(), plan.pretrain_batch_size);
    result.pretrain_trace = WithPhase("pretrain", [&] {
      return TrainAdam(m.mutable_params(), seqs.size(),
                       plan.pretrain_batch_size, pre_steps, cfg,
                       [&](std::size_t i, std::vector<double>& g) {
                         return NllGradient(m, seqs[i], g);
                       });
    });
    spdlog::info("pretrained {} steps on {} public records", pre_steps,
                 seqs.size());
  }

  if (steps == 0) {
    if (result.privacy.is_private) result.privacy.epsilon = 0.0;
    return result;
  }

  // Prompted sequences for the private records.
  const bool use_wrong = plan.loss.lambda > 0.0;
  std::vector<TokenSequence> correct;
  std::vector<std::vector<TokenSequence>> wrong;
  correct.reserve(n);
  wrong.resize(n);
  std::map<std::string, std::vector<std::string>> wrong_by_key;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = private_corpus.records()[i];
    correct.push_back(BuildSequence(*vocab, tmpl.Render(schema, r.attrs),
                                    r.text, ctx, plan.loss.text_only_loss));
    if (!use_wrong) continue;
    const std::string key = AssignmentKey(r.attrs);
    auto it = wrong_by_key.find(key);
    if (it == wrong_by_key.end()) {
      it = wrong_by_key
               .emplace(key,
                        WrongPrompts(tmpl, schema, r.attrs, plan.wrong_mode))
               .first;
    }
    if (it->second.empty()) {
      throw ConfigError(
          "lambda > 0 needs at least one wrong prompt per record");
    }
    for (const auto& w : it->second) {
      wrong[i].push_back(
          BuildSequence(*vocab, w, r.text, ctx, plan.loss.text_only_loss));
    }
  }

  const std::size_t k = plan.loss.wrong_samples;
  std::uint64_t wrong_draws = 0;
  std::vector<TokenSequence> subset;
  auto grad_fn = [&](std::size_t i, std::vector<double>& g) {
    std::span<const TokenSequence> w;
    if (use_wrong) {
      w = wrong[i];
      if (k > 0 && k < wrong[i].size()) {
        std::vector<std::size_t> idx(wrong[i].size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng(DeriveSeed(plan.seed, Stream::kWrongPrompts, wrong_draws++));
        rng.Shuffle(idx);
        subset.clear();
        for (std::size_t j = 0; j < k; ++j) subset.push_back(wrong[i][idx[j]]);
        w = subset;
      }
    }
    return PerSampleGradient(m, correct[i], w, plan.loss, g);
  };

  if (result.privacy.is_private) {
    DpOptimConfig cfg;
    cfg.clip_norm = plan.clip_norm;
    cfg.noise_multiplier = result.privacy.sigma;
    cfg.expected_batch_size = plan.sampling_rate * static_cast<double>(n);
    cfg.learning_rate = plan.dp_learning_rate;
    cfg.seed = DeriveSeed(plan.seed, Stream::kBatchSampling, 0);
    result.finetune_trace = WithPhase("fine-tune", [&] {
      return TrainDpAdam(m.mutable_params(), n, plan.sampling_rate, steps, cfg,
                         grad_fn);
    });
    result.privacy.ledger.Append(result.privacy.sigma, plan.sampling_rate,
                                 steps);
    const auto spent = ComposeAndConvert(result.privacy.ledger,
                                         result.privacy.delta, plan.conversion);
    result.privacy.epsilon = spent.epsilon;
    result.privacy.best_alpha = spent.alpha;
    spdlog::info("DP fine-tune: {} steps, sigma {:.4f}, spent epsilon {:.4f}",
                 steps, result.privacy.sigma, spent.epsilon);
  } else {
    DpOptimConfig cfg;
    cfg.learning_rate = plan.nonprivate_learning_rate;
    cfg.seed = DeriveSeed(plan.seed, Stream::kShuffle, 1);
    result.finetune_trace = WithPhase("fine-tune", [&] {
      return TrainAdam(m.mutable_params(), n, plan.nonprivate_batch_size, steps,
                       cfg, grad_fn);
    });
    result.privacy.steps = steps;
    spdlog::info("non-private fine-tune: {} steps", steps);
  }
  return result;
}

std::vector<std::size_t> LargestRemainderCounts(
    const std::vector<double>& proportions, std::size_t total) {
  std::vector<std::size_t> counts(proportions.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < proportions.size(); ++i) {
    const double exact = proportions[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(
      remainders.begin(), remainders.end(),
      [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; assigned < total && j < remainders.size(); ++j) {
    ++counts[remainders[j].second];
    ++assigned;
  }
  return counts;
}

GenerationResult Generate(const LanguageModel& model,
                          const GenerationPlan& plan,
                          const PromptTemplate& tmpl,
                          std::shared_ptr<const AttributeSchema> schema) {
  if (!model.vocab()) throw InvalidArgument("model has no vocabulary bound");
  const Vocabulary& vocab = *model.vocab();

  std::vector<AttributeAssignment> assignments;
  std::vector<double> proportions;
  if (plan.distribution.empty()) {
    assignments = schema->AllAssignments();
    proportions.assign(assignments.size(), 1.0 / assignments.size());
  } else {
    double sum = 0.0;
    for (const auto& [a, p] : plan.distribution) {
      schema->ValidateComplete(a);
      if (!(p >= 0.0)) throw ConfigError("generation proportions must be >= 0");
      assignments.push_back(a);
      proportions.push_back(p);
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("generation proportions must sum to 1");
    }
  }
  const auto counts = LargestRemainderCounts(proportions, plan.total);

  std::vector<LabeledRecord> records;
  records.reserve(plan.total);
  GenerationResult out{Corpus({}, schema, CorpusRole::kSynthetic), {}, {}};
  std::uint64_t index = 0;
  for (std::size_t c = 0; c < assignments.size(); ++c) {
    const auto& a = assignments[c];
    out.counts[AssignmentKey(a)] += counts[c];
    std::vector<TokenId> prefix = {Vocabulary::kBos};
    for (TokenId id : EncodeWords(vocab, tmpl.Render(*schema, a))) {
      prefix.push_back(id);
    }
    for (std::size_t j = 0; j < counts[c]; ++j, ++index) {
      std::string text;
      bool ok = false;
      for (std::size_t attempt = 0; attempt < GenerationPlan::kMaxAttempts;
           ++attempt) {
        auto ids =
            Sample(model, prefix, plan.sampler,
                   DeriveSeed(plan.seed, Stream::kGeneration,
                              index * GenerationPlan::kMaxAttempts + attempt));
        text = Decode(vocab, ids);
        if (!text.empty() && NormalizeWords(text).size() >=
                                 std::max<std::size_t>(1, plan.min_words)) {
          ok = true;
          break;
        }
      }
      if (!ok) {
        if (text.empty()) text = Vocabulary::kSpecialTokens[Vocabulary::kUnk];
        out.flagged.push_back(records.size());
        spdlog::debug("synthetic record {} kept after {} short samples",
                      records.size(), GenerationPlan::kMaxAttempts);
      }
      records.push_back({std::move(text), a});
    }
  }
  out.corpus =
      Corpus(std::move(records), std::move(schema), CorpusRole::kSynthetic);
  return out;
}

}  // namespace twinsynth
