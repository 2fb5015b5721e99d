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

#include <cmath>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "spdlog/spdlog.h"
#include "twinsynth/accountant.h"
#include "twinsynth/common.h"
#include "twinsynth/pipeline.h"
#include "twinsynth/pipeline_config.h"
#include "twinsynth/twinsynth.h"

struct ts_pipeline {
  twinsynth::PipelineConfig config;
  std::string config_json;
  std::string config_hash;
  std::string result = "{}";
};

namespace {

thread_local std::string g_last_error;

ts_status StatusOf(twinsynth::ErrorCode code) {
  return static_cast<ts_status>(static_cast<int>(code));
}

// Runs `fn`, translating exceptions into a status and the last error.
template <typename Fn>
ts_status Guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return TS_OK;
  } catch (const twinsynth::Error& e) {
    g_last_error = e.what();
    return StatusOf(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TS_ERR_RUNTIME;
  }
}

ts_status NullArgument(const char* what) {
  g_last_error = std::string(what) + " must not be NULL";
  return TS_ERR_INVALID_ARGUMENT;
}

// Validates `next` and installs it on success.
void Install(ts_pipeline* p, twinsynth::PipelineConfig next) {
  next.Validate();
  p->config_hash = twinsynth::ConfigHash(next);
  p->config_json = twinsynth::PipelineConfigToJson(next).dump();
  p->config = std::move(next);
}

template <typename Mutate>
ts_status Override(ts_pipeline* p, Mutate&& mutate) {
  if (!p) return NullArgument("pipeline");
  return Guard([&] {
    twinsynth::PipelineConfig next = p->config;
    mutate(next);
    Install(p, std::move(next));
  });
}

template <typename Stage>
ts_status RunStage(ts_pipeline* p, Stage&& stage) {
  if (!p) return NullArgument("pipeline");
  return Guard([&] {
    const twinsynth::Pipeline pipeline(p->config);
    p->result = stage(pipeline).dump();
  });
}

std::optional<std::filesystem::path> OptionalPath(const char* s) {
  if (!s || !*s) return std::nullopt;
  return std::filesystem::path(s);
}

void Create(twinsynth::PipelineConfig config, ts_pipeline** out) {
  auto p = std::make_unique<ts_pipeline>();
  Install(p.get(), std::move(config));
  *out = p.release();
}

}  // namespace

extern "C" {

const char* ts_version(void) { return "0.1.0"; }

const char* ts_last_error(void) { return g_last_error.c_str(); }

const char* ts_status_name(ts_status status) {
  switch (status) {
    case TS_OK:
      return "ok";
    case TS_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case TS_ERR_CONFIG:
      return "config error";
    case TS_ERR_IO:
      return "i/o error";
    case TS_ERR_RUNTIME:
      return "runtime error";
    case TS_ERR_DIVERGENCE:
      return "divergence";
    case TS_ERR_INFEASIBLE:
      return "infeasible privacy target";
  }
  return "unknown";
}

ts_status ts_set_log_level(const char* level) {
  if (!level) return NullArgument("level");
  const auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && std::string(level) != "off") {
    g_last_error = std::string("unknown log level '") + level + "'";
    return TS_ERR_INVALID_ARGUMENT;
  }
  spdlog::set_level(parsed);
  g_last_error.clear();
  return TS_OK;
}

ts_status ts_pipeline_create_from_file(const char* path, ts_pipeline** out) {
  if (!path) return NullArgument("path");
  if (!out) return NullArgument("out");
  *out = nullptr;
  return Guard([&] { Create(twinsynth::LoadPipelineConfig(path), out); });
}

ts_status ts_pipeline_create_from_json(const char* json_text,
                                       ts_pipeline** out) {
  if (!json_text) return NullArgument("json_text");
  if (!out) return NullArgument("out");
  *out = nullptr;
  return Guard([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
      throw twinsynth::ConfigError(std::string("invalid JSON: ") + e.what());
    }
    Create(twinsynth::ParsePipelineConfig(j), out);
  });
}

void ts_pipeline_destroy(ts_pipeline* pipeline) { delete pipeline; }

ts_status ts_pipeline_set_seed(ts_pipeline* p, uint64_t seed) {
  return Override(p, [&](twinsynth::PipelineConfig& c) { c.seed = seed; });
}

ts_status ts_pipeline_set_epsilon(ts_pipeline* p, double epsilon) {
  return Override(p, [&](twinsynth::PipelineConfig& c) {
    if (std::isnan(epsilon)) throw twinsynth::ConfigError("epsilon is NaN");
    if (std::isinf(epsilon) && epsilon > 0) {
      c.train.target_epsilon.reset();
    } else {
      c.train.target_epsilon = epsilon;
    }
  });
}

ts_status ts_pipeline_set_lambda(ts_pipeline* p, double lambda) {
  return Override(
      p, [&](twinsynth::PipelineConfig& c) { c.train.loss.lambda = lambda; });
}

ts_status ts_pipeline_set_output_dir(ts_pipeline* p, const char* dir) {
  if (!dir) return NullArgument("dir");
  return Override(p, [&](twinsynth::PipelineConfig& c) { c.output_dir = dir; });
}

ts_status ts_pipeline_set_jsonl_input(ts_pipeline* p, const char* private_path,
                                      const char* public_path,
                                      const char* test_path) {
  if (!private_path) return NullArgument("private_path");
  return Override(p, [&](twinsynth::PipelineConfig& c) {
    auto& src = c.corpus;
    if (src.kind != twinsynth::CorpusSourceConfig::Kind::kJsonl &&
        !public_path) {
      throw twinsynth::ConfigError(
          "corpus.jsonl.public is required when switching to a JSONL input");
    }
    src.kind = twinsynth::CorpusSourceConfig::Kind::kJsonl;
    src.toy = {};
    src.pseudo_lexicon.reset();
    src.private_path = private_path;
    if (public_path) src.public_path = public_path;
    if (test_path) src.test_path = std::filesystem::path(test_path);
  });
}

ts_status ts_pipeline_set_train_fraction(ts_pipeline* p, double fraction) {
  return Override(p, [&](twinsynth::PipelineConfig& c) {
    c.corpus.train_fraction = fraction;
  });
}

const char* ts_pipeline_config_json(ts_pipeline* p) {
  return p ? p->config_json.c_str() : "";
}

const char* ts_pipeline_config_hash(ts_pipeline* p) {
  return p ? p->config_hash.c_str() : "";
}

ts_status ts_pipeline_gen_corpus(ts_pipeline* p) {
  return RunStage(p,
                  [](const twinsynth::Pipeline& s) { return s.GenCorpus(); });
}

ts_status ts_pipeline_train(ts_pipeline* p) {
  return RunStage(p, [](const twinsynth::Pipeline& s) { return s.Train(); });
}

ts_status ts_pipeline_generate(ts_pipeline* p, const char* checkpoint_path) {
  return RunStage(p, [&](const twinsynth::Pipeline& s) {
    return s.Generate(OptionalPath(checkpoint_path));
  });
}

ts_status ts_pipeline_evaluate(ts_pipeline* p, const char* synthetic_path,
                               const char* real_train_path,
                               const char* real_test_path) {
  return RunStage(p, [&](const twinsynth::Pipeline& s) {
    return s.Evaluate({OptionalPath(synthetic_path),
                       OptionalPath(real_train_path),
                       OptionalPath(real_test_path)});
  });
}

ts_status ts_pipeline_run(ts_pipeline* p) {
  return RunStage(p, [](const twinsynth::Pipeline& s) { return s.Run(); });
}

const char* ts_pipeline_result_json(ts_pipeline* p) {
  return p ? p->result.c_str() : "{}";
}

ts_status ts_calibrate_sigma(double epsilon, double delta,
                             uint64_t dataset_size, double sampling_rate,
                             uint64_t steps, double* sigma_out) {
  if (!sigma_out) return NullArgument("sigma_out");
  return Guard([&] {
    twinsynth::PrivacySpec spec;
    spec.epsilon = epsilon;
    spec.dataset_size = dataset_size;
    spec.delta = delta > 0 ? delta : twinsynth::DeltaDefault(dataset_size);
    spec.sampling_rate = sampling_rate;
    spec.steps = steps;
    *sigma_out = twinsynth::CalibrateSigma(spec);
  });
}

ts_status ts_spent_epsilon(double sigma, double sampling_rate, uint64_t steps,
                           double delta, double* epsilon_out) {
  if (!epsilon_out) return NullArgument("epsilon_out");
  return Guard([&] {
    if (!(delta > 0.0 && delta < 1.0)) {
      throw twinsynth::InvalidArgument("delta must lie in (0, 1)");
    }
    *epsilon_out = twinsynth::SpentEpsilon(sigma, sampling_rate, steps, delta);
  });
}

}  // extern "C"
