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

#ifndef TWINSYNTH_TWINSYNTH_H_
#define TWINSYNTH_TWINSYNTH_H_

#include <stdint.h>

#if defined(TWINSYNTH_BUILDING_LIBRARY)
#define TS_API __attribute__((visibility("default")))
#else
#define TS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ts_status {
  TS_OK = 0,
  TS_ERR_INVALID_ARGUMENT = 1,
  TS_ERR_CONFIG = 2,
  TS_ERR_IO = 3,
  TS_ERR_RUNTIME = 4,
  TS_ERR_DIVERGENCE = 5,
  TS_ERR_INFEASIBLE = 6,
} ts_status;

// Opaque pipeline handle owning a validated configuration.
typedef struct ts_pipeline ts_pipeline;

TS_API const char* ts_version(void);

// Message of the last failure on the calling thread; "" after success.
TS_API const char* ts_last_error(void);

TS_API const char* ts_status_name(ts_status status);

// One of trace, debug, info, warn, error, off.
TS_API ts_status ts_set_log_level(const char* level);

// Parses a JSON config file; relative paths inside resolve against the
// file's directory.
TS_API ts_status ts_pipeline_create_from_file(const char* path,
                                              ts_pipeline** out);
TS_API ts_status ts_pipeline_create_from_json(const char* json_text,
                                              ts_pipeline** out);
TS_API void ts_pipeline_destroy(ts_pipeline* pipeline);

// Overrides. Each re-validates the configuration; on failure the handle
// keeps its previous configuration.
TS_API ts_status ts_pipeline_set_seed(ts_pipeline* pipeline, uint64_t seed);
// INFINITY selects the non-private regime.
TS_API ts_status ts_pipeline_set_epsilon(ts_pipeline* pipeline, double epsilon);
TS_API ts_status ts_pipeline_set_lambda(ts_pipeline* pipeline, double lambda);
TS_API ts_status ts_pipeline_set_output_dir(ts_pipeline* pipeline,
                                            const char* dir);
// Switches the corpus source to a JSONL private file; the public file and
// an optional test file may be NULL to keep the configured ones.
TS_API ts_status ts_pipeline_set_jsonl_input(ts_pipeline* pipeline,
                                             const char* private_path,
                                             const char* public_path,
                                             const char* test_path);
TS_API ts_status ts_pipeline_set_train_fraction(ts_pipeline* pipeline,
                                                double fraction);

// Effective configuration as canonical JSON and its hash. The returned
// strings live until the next call on the same handle.
TS_API const char* ts_pipeline_config_json(ts_pipeline* pipeline);
TS_API const char* ts_pipeline_config_hash(ts_pipeline* pipeline);

// Stages. On success the stage summary is available as JSON through
// ts_pipeline_result_json. NULL paths select the output-directory defaults.
TS_API ts_status ts_pipeline_gen_corpus(ts_pipeline* pipeline);
TS_API ts_status ts_pipeline_train(ts_pipeline* pipeline);
TS_API ts_status ts_pipeline_generate(ts_pipeline* pipeline,
                                      const char* checkpoint_path);
TS_API ts_status ts_pipeline_evaluate(ts_pipeline* pipeline,
                                      const char* synthetic_path,
                                      const char* real_train_path,
                                      const char* real_test_path);
// All stages, skipping those whose outputs exist.
TS_API ts_status ts_pipeline_run(ts_pipeline* pipeline);

// Summary of the last successful stage; "{}" before any.
TS_API const char* ts_pipeline_result_json(ts_pipeline* pipeline);

// Accountant entry points. delta <= 0 selects 1 / (2 n).
TS_API ts_status ts_calibrate_sigma(double epsilon, double delta,
                                    uint64_t dataset_size, double sampling_rate,
                                    uint64_t steps, double* sigma_out);
TS_API ts_status ts_spent_epsilon(double sigma, double sampling_rate,
                                  uint64_t steps, double delta,
                                  double* epsilon_out);

#ifdef __cplusplus
}  // extern "C"
#endif

#endif  // TWINSYNTH_TWINSYNTH_H_
