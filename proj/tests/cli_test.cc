// Copyright 2026 The Clause Arena Authors
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

// Runs the clause-arena binary as a subprocess.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "clause_arena/eval.h"
#include "clause_arena/transcript_io.h"

namespace clause_arena {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code;
  std::string output;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("clause_arena_cli_" + std::string(
                ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult Run(const std::string& args, const std::string& env = "") {
    const fs::path out = dir_ / "stdout.txt";
    const std::string cmd = env + " " CLAUSE_ARENA_CLI " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ReadFile(out)};
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(Run("").exit_code, 2);
  EXPECT_EQ(Run("frobnicate").exit_code, 2);
  EXPECT_EQ(Run("train --out x").exit_code, 2);                   // no --behavior
  EXPECT_EQ(Run("train --behavior qq --out x").exit_code, 2);     // bad choice
  EXPECT_EQ(Run("gen-testset --count -3 --out x").exit_code, 2);  // not positive
  EXPECT_EQ(Run("--help").exit_code, 0);
}

TEST_F(CliTest, RuntimeErrorsExitWithOne) {
  const RunResult r = Run("eval --agent-a /nonexistent.json --agent-b random --games 3 --out " +
                          (dir_ / "e").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("nonexistent"), std::string::npos);
  EXPECT_EQ(Run("meta-train --models-dir /nonexistent --out " + dir_.string()).exit_code, 1);
}

TEST_F(CliTest, GenTestsetIsDeterministic) {
  ASSERT_EQ(Run("gen-testset --count 50 --seed 7 --out " + (dir_ / "a.jsonl").string()).exit_code, 0);
  ASSERT_EQ(Run("gen-testset --count 50 --seed 7 --out " + (dir_ / "b.jsonl").string()).exit_code, 0);
  ASSERT_EQ(Run("gen-testset --count 50 --seed 8 --out " + (dir_ / "c.jsonl").string()).exit_code, 0);
  EXPECT_EQ(ReadFile(dir_ / "a.jsonl"), ReadFile(dir_ / "b.jsonl"));
  EXPECT_NE(ReadFile(dir_ / "a.jsonl"), ReadFile(dir_ / "c.jsonl"));
  EXPECT_EQ(ReadTestSet(dir_ / "a.jsonl"), GenerateTestSet(7, 50));
}

TEST_F(CliTest, SeedFromEnvironmentAndConfigFile) {
  ASSERT_EQ(Run("gen-testset --count 20 --out " + (dir_ / "env.jsonl").string(),
                "CLAUSE_ARENA_SEED=42")
                .exit_code,
            0);
  EXPECT_EQ(ReadTestSet(dir_ / "env.jsonl"), GenerateTestSet(42, 20));

  WriteFile(dir_ / "run.cfg", "# defaults\ncount = 12\nseed=43\n");
  ASSERT_EQ(Run("--config " + (dir_ / "run.cfg").string() + " gen-testset --out " +
                (dir_ / "cfg.jsonl").string())
                .exit_code,
            0);
  EXPECT_EQ(ReadTestSet(dir_ / "cfg.jsonl"), GenerateTestSet(43, 12));
  // The command line wins over the file.
  ASSERT_EQ(Run("--config " + (dir_ / "run.cfg").string() + " gen-testset --seed 44 --out " +
                (dir_ / "cli.jsonl").string())
                .exit_code,
            0);
  EXPECT_EQ(ReadTestSet(dir_ / "cli.jsonl"), GenerateTestSet(44, 12));
}

TEST_F(CliTest, EvalCommonWritesReportAndManifest) {
  const fs::path out = dir_ / "common";
  ASSERT_EQ(Run("eval --agent-a common --agent-b common --games 200 --test-seed 3 --out " +
                out.string())
                .exit_code,
            0);
  const Json report = Json::parse(ReadFile(out / "report.json"));
  const MatchResult expected = RunCommon(GenerateTestSet(3, 200), {}, 1);
  EXPECT_EQ(MetricsReport::FromJson(report.contains("metrics") ? report["metrics"] : report),
            expected.report);
  EXPECT_EQ(ReadTranscripts(out / "transcripts.jsonl"), expected.transcripts);

  const Json manifest = Json::parse(ReadFile(out / "manifest_eval.json"));
  EXPECT_EQ(manifest["command"], "eval");
  EXPECT_EQ(manifest["seed"], 1);
  EXPECT_TRUE(manifest.contains("argv"));
  EXPECT_TRUE(manifest.contains("config"));
  EXPECT_TRUE(manifest.contains("tool_version"));
  EXPECT_TRUE(manifest.contains("started_at"));
  EXPECT_TRUE(fs::exists(out / "manifest_eval.done.json"));
}

TEST_F(CliTest, TrainIsReproducibleFromTheCommandLine) {
  const std::string flags =
      "train --behavior pp --episodes-per-epoch 4 --eval-every 4 --eval-games 3 --seed 5 --out ";
  ASSERT_EQ(Run(flags + (dir_ / "r1").string()).exit_code, 0);
  ASSERT_EQ(Run(flags + (dir_ / "r2").string()).exit_code, 0);
  EXPECT_EQ(ReadFile(dir_ / "r1" / "pp.json"), ReadFile(dir_ / "r2" / "pp.json"));
  EXPECT_EQ(ReadFile(dir_ / "r1" / "pp_learning_curve.csv"),
            ReadFile(dir_ / "r2" / "pp_learning_curve.csv"));
  const Json manifest = Json::parse(ReadFile(dir_ / "r1" / "manifest_train.json"));
  EXPECT_EQ(manifest["seed"], 5);
}

}  // namespace
}  // namespace clause_arena
