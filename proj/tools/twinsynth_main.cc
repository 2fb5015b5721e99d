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

// Command-line front end over the C API.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "twinsynth/twinsynth.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> epsilon;
  std::optional<double> lambda;
  std::optional<std::string> out;
  std::optional<std::string> input;
  std::optional<std::string> public_input;
  std::optional<std::string> test_input;
  std::optional<double> train_fraction;
  std::optional<std::string> checkpoint;
  std::optional<std::string> synthetic;
  std::optional<std::string> real_train;
  std::optional<std::string> real_test;
};

int ExitCode(ts_status s) {
  return s == TS_ERR_CONFIG || s == TS_ERR_INVALID_ARGUMENT ? kExitConfig
                                                            : kExitRuntime;
}

int Fail(ts_status s) {
  std::cerr << "error: " << ts_last_error() << "\n";
  return ExitCode(s);
}

std::optional<double> ParseEpsilon(const std::string& text) {
  if (text == "inf" || text == "infinity") {
    return std::numeric_limits<double>::infinity();
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

std::string Number(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", j.get<double>());
  return buf;
}

void PrintPrivacy(const nlohmann::json& p) {
  std::cout << "sigma: " << Number(p.at("sigma")) << "\n"
            << "spent epsilon: " << Number(p.at("epsilon")) << " (delta "
            << Number(p.at("delta")) << ", steps "
            << p.at("steps").get<std::uint64_t>() << ")\n";
}

// Applies flag overrides; returns a status.
ts_status ApplyOverrides(ts_pipeline* p, const Options& o) {
  ts_status s = TS_OK;
  if (o.seed && (s = ts_pipeline_set_seed(p, *o.seed)) != TS_OK) return s;
  if (o.epsilon) {
    const auto eps = ParseEpsilon(*o.epsilon);
    if (!eps) {
      std::cerr << "error: --epsilon expects a positive number or inf, got '"
                << *o.epsilon << "'\n";
      return TS_ERR_CONFIG;
    }
    if ((s = ts_pipeline_set_epsilon(p, *eps)) != TS_OK) return s;
  }
  if (o.lambda && (s = ts_pipeline_set_lambda(p, *o.lambda)) != TS_OK) return s;
  if (o.out && (s = ts_pipeline_set_output_dir(p, o.out->c_str())) != TS_OK) {
    return s;
  }
  if (o.input) {
    s = ts_pipeline_set_jsonl_input(
        p, o.input->c_str(), o.public_input ? o.public_input->c_str() : nullptr,
        o.test_input ? o.test_input->c_str() : nullptr);
    if (s != TS_OK) return s;
  }
  if (o.train_fraction &&
      (s = ts_pipeline_set_train_fraction(p, *o.train_fraction)) != TS_OK) {
    return s;
  }
  return TS_OK;
}

const char* CStr(const std::optional<std::string>& s) {
  return s ? s->c_str() : nullptr;
}

int Run(const std::string& command, const Options& o) {
  ts_pipeline* p = nullptr;
  ts_status s = ts_pipeline_create_from_file(o.config.c_str(), &p);
  if (s != TS_OK) return Fail(s);
  std::unique_ptr<ts_pipeline, decltype(&ts_pipeline_destroy)> guard(
      p, &ts_pipeline_destroy);
  s = ApplyOverrides(p, o);
  if (s != TS_OK) {
    if (*ts_last_error()) return Fail(s);
    return ExitCode(s);
  }
  if (command == "gen-corpus") {
    s = ts_pipeline_gen_corpus(p);
  } else if (command == "train") {
    s = ts_pipeline_train(p);
  } else if (command == "generate") {
    s = ts_pipeline_generate(p, CStr(o.checkpoint));
  } else if (command == "evaluate") {
    s = ts_pipeline_evaluate(p, CStr(o.synthetic), CStr(o.real_train),
                             CStr(o.real_test));
  } else {
    s = ts_pipeline_run(p);
  }
  if (s != TS_OK) return Fail(s);

  const auto result = nlohmann::json::parse(ts_pipeline_result_json(p));
  std::cout << "config hash: " << ts_pipeline_config_hash(p) << "\n";
  if (command == "gen-corpus") {
    const auto& c = result.at("counts");
    std::cout << "public " << c.at("public") << ", private train "
              << c.at("private_train") << ", private test "
              << c.at("private_test") << " records\n";
  } else if (command == "train") {
    PrintPrivacy(result.at("privacy"));
  } else if (command == "generate") {
    std::cout << "synthetic records: " << result.at("total") << " ("
              << result.at("flagged").size() << " flagged)\n"
              << "epsilon: " << Number(result.at("epsilon")) << "\n";
  } else if (command == "evaluate") {
    std::cout << result.at("table").get<std::string>();
  } else {
    PrintPrivacy(result.at("privacy"));
    if (result.contains("table")) {
      std::cout << result.at("table").get<std::string>();
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* level = std::getenv("TWINSYNTH_LOG_LEVEL")) {
    if (ts_set_log_level(level) != TS_OK) {
      std::cerr << "warning: " << ts_last_error() << "\n";
    }
  } else {
    ts_set_log_level("warn");
  }

  CLI::App app{"Differentially private synthetic twin datasets"};
  app.set_version_flag("--version", std::string(ts_version()));
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "Pipeline config (JSON)")->required();
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--epsilon", o.epsilon, "Target epsilon, or inf");
    sub->add_option("--lambda", o.lambda, "Prompt-mismatch weight");
    sub->add_option("--out,--output", o.out, "Output directory");
  };
  CLI::App* gen = app.add_subcommand("gen-corpus", "Write the corpora");
  common(gen);
  gen->add_option("--input", o.input, "Private JSONL corpus");
  gen->add_option("--public", o.public_input, "Public JSONL corpus");
  gen->add_option("--test", o.test_input, "Private test JSONL corpus");
  gen->add_option("--train-fraction", o.train_fraction,
                  "Share of private records used for training");
  CLI::App* train = app.add_subcommand("train", "Pretrain and fine-tune");
  common(train);
  CLI::App* generate =
      app.add_subcommand("generate", "Sample a synthetic corpus");
  common(generate);
  generate->add_option("--checkpoint", o.checkpoint, "Model checkpoint");
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Audit a synthetic corpus");
  common(evaluate);
  evaluate->add_option("--synthetic", o.synthetic, "Synthetic JSONL");
  evaluate->add_option("--real-train", o.real_train, "Real training JSONL");
  evaluate->add_option("--real-test", o.real_test, "Real test JSONL");
  CLI::App* pipeline = app.add_subcommand("pipeline", "Run every stage");
  common(pipeline);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  return Run(app.get_subcommands().front()->get_name(), o);
}
