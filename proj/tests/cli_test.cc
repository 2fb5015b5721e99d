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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "json.hpp"
#include "tiny_config.h"

namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Outcome {
  int exit_code;
  std::string output;  // stdout and stderr together
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) / "cli" /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_ = dir_ / "tiny.json";
    std::ofstream(config_) << twinsynth::testing_configs::TinyConfigJson(
        (dir_ / "out").string());
  }

  Outcome Run(const std::string& args) const {
    const fs::path log = dir_ / "cli.log";
    const std::string cmd = std::string(TWINSYNTH_CLI_PATH) + " " + args +
                            " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, Slurp(log)};
  }

  std::string Config() const { return "--config '" + config_.string() + "'"; }

  fs::path dir_;
  fs::path config_;
};

TEST_F(CliTest, PipelineSucceedsAndPrintsPrivacyAndTable) {
  const Outcome o = Run("pipeline " + Config());
  ASSERT_EQ(o.exit_code, 0) << o.output;
  EXPECT_NE(o.output.find("config hash: "), std::string::npos);
  EXPECT_NE(o.output.find("sigma: "), std::string::npos);
  EXPECT_NE(o.output.find("spent epsilon: "), std::string::npos);
  EXPECT_NE(o.output.find("sentiment"), std::string::npos);
  EXPECT_TRUE(fs::is_regular_file(dir_ / "out" / "manifest.json"));
}

TEST_F(CliTest, StagesRunOneByOne) {
  ASSERT_EQ(Run("gen-corpus " + Config()).exit_code, 0);
  ASSERT_EQ(Run("train " + Config()).exit_code, 0);
  ASSERT_EQ(Run("generate " + Config()).exit_code, 0);
  const Outcome o = Run("evaluate " + Config());
  ASSERT_EQ(o.exit_code, 0) << o.output;
  EXPECT_TRUE(fs::is_regular_file(dir_ / "out" / "report.json"));
}

TEST_F(CliTest, InvalidTrainFractionExitsWithConfigCode) {
  const Outcome o = Run("gen-corpus " + Config() + " --train-fraction 1.5");
  EXPECT_EQ(o.exit_code, 2);
  EXPECT_NE(o.output.find("corpus.train_fraction"), std::string::npos)
      << o.output;
  EXPECT_FALSE(fs::exists(dir_ / "out" / "public.jsonl"));
}

TEST_F(CliTest, UsageErrorsExitWithConfigCode) {
  EXPECT_EQ(Run("pipeline").exit_code, 2);
  EXPECT_EQ(Run("pipeline " + Config() + " --epsilon lots").exit_code, 2);
  EXPECT_EQ(Run("pipeline --config /nonexistent/c.json").exit_code, 2);
}

TEST_F(CliTest, MissingInputFileIsNamed) {
  const Outcome o =
      Run("gen-corpus " + Config() + " --input /nonexistent/private.jsonl" +
          " --public /nonexistent/public.jsonl");
  EXPECT_NE(o.exit_code, 0);
  EXPECT_NE(o.output.find("/nonexistent/private.jsonl"), std::string::npos)
      << o.output;
}

TEST_F(CliTest, CorruptCheckpointIsNamed) {
  ASSERT_EQ(Run("gen-corpus " + Config()).exit_code, 0);
  const fs::path bad = dir_ / "broken.ckpt";
  std::ofstream(bad) << "TWSCKPT1 truncated";
  const Outcome o =
      Run("generate " + Config() + " --checkpoint '" + bad.string() + "'");
  EXPECT_EQ(o.exit_code, 3);
  EXPECT_NE(o.output.find("broken.ckpt"), std::string::npos) << o.output;
}

TEST_F(CliTest, InfiniteEpsilonWritesAnEmptyLedger) {
  ASSERT_EQ(Run("gen-corpus " + Config()).exit_code, 0);
  const Outcome o = Run("train " + Config() + " --epsilon inf");
  ASSERT_EQ(o.exit_code, 0) << o.output;
  const auto ledger = nlohmann::json::parse(Slurp(dir_ / "out/ledger.json"));
  EXPECT_EQ(ledger["privacy"]["epsilon"], "inf");
  EXPECT_TRUE(ledger["privacy"]["entries"].empty());
  EXPECT_NE(o.output.find("spent epsilon: inf"), std::string::npos) << o.output;
}

TEST_F(CliTest, SameSeedGivesIdenticalFiles) {
  const std::string a = (dir_ / "a").string(), b = (dir_ / "b").string();
  ASSERT_EQ(
      Run("pipeline " + Config() + " --seed 11 --out '" + a + "'").exit_code,
      0);
  ASSERT_EQ(
      Run("pipeline " + Config() + " --seed 11 --out '" + b + "'").exit_code,
      0);
  for (const char* name : {"synthetic.jsonl", "report.json", "ledger.json"}) {
    EXPECT_EQ(Slurp(fs::path(a) / name), Slurp(fs::path(b) / name)) << name;
  }
}

TEST_F(CliTest, ReusingAnOutputDirectoryForAnotherConfigFails) {
  ASSERT_EQ(Run("gen-corpus " + Config()).exit_code, 0);
  const Outcome o = Run("pipeline " + Config() + " --seed 12");
  EXPECT_EQ(o.exit_code, 2);
  EXPECT_NE(o.output.find("fresh --out"), std::string::npos) << o.output;
}

}  // namespace
