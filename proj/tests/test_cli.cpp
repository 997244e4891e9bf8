// Copyright 2026 The Spillover Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
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

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("spillover_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path Write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  Result Run(const std::string& args) {
    const fs::path out = dir_ / "stdout";
    const fs::path err = dir_ / "stderr";
    const std::string cmd = std::string(SPILLOVER_LAB_BIN) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, Slurp(out), Slurp(err)};
  }

  fs::path dir_;
};

const char* kConfig = R"({
  "seed": 5, "n": 30, "replications": 2,
  "graph": {"model": "rdpg", "latent": {"a": 1, "b": 2}},
  "design": {"type": "bernoulli", "probability": 0.5},
  "outcome": {"model": "gmrf", "beta": 2, "gamma": 1, "delta": 0.4},
  "test": {"focal_fraction": 0.3, "resamples": 99}
})";

TEST_F(CliTest, InvalidDeltaNamesField) {
  std::string bad = kConfig;
  bad.replace(bad.find("0.4"), 3, "1.2");
  const Result r = Run("simulate --config " + Write("bad.json", bad).string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("outcome.delta"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("|delta| < 1"), std::string::npos) << r.err;
}

TEST_F(CliTest, ErrorsAndExitCodes) {
  EXPECT_EQ(Run("simulate --config " + (dir_ / "missing.json").string()).code, 3);
  EXPECT_EQ(Run("frobnicate").code, 2);
  const fs::path cfg = Write("c.json", kConfig);
  EXPECT_EQ(Run("estimate --config " + cfg.string() + " --data " + cfg.string() + " --graph " +
                (dir_ / "none.edges").string())
                .code,
            3);
  EXPECT_EQ(Run("reproduce --figure pvals-9").code, 2);
  const Result unknown = Run("simulate --config " + Write("u.json", R"({"n": 4, "graph": {"model": "rdpg"},
      "outcome": {"model": "gmrf"}, "colour": 1})").string());
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("colour"), std::string::npos);
}

TEST_F(CliTest, ConfigFromStdin) {
  const fs::path cfg = Write("c.json", kConfig);
  const Result a = Run("simulate < " + cfg.string());
  const Result b = Run("simulate --config " + cfg.string());
  EXPECT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("replicate,seed,unit,treated,outcome\n", 0), 0u);
}

TEST_F(CliTest, EverySubcommandRuns) {
  const fs::path cfg = Write("c.json", kConfig);
  for (const char* sub : {"graph", "simulate", "effects", "test"}) {
    const Result r = Run(std::string(sub) + " --config " + cfg.string());
    EXPECT_EQ(r.code, 0) << sub << ": " << r.err;
    EXPECT_FALSE(r.out.empty()) << sub;
  }
  const fs::path graph = dir_ / "g.edges";
  const fs::path data = dir_ / "d.csv";
  ASSERT_EQ(Run("simulate --config " + cfg.string() + " --graph-out " + graph.string() + " --out " + data.string())
                .code,
            0);
  const Result est = Run("estimate --config " + cfg.string() + " --data " + data.string() + " --graph " +
                         graph.string());
  EXPECT_EQ(est.code, 0) << est.err;
  EXPECT_NE(est.out.find("gmrf_mle"), std::string::npos);
}

TEST_F(CliTest, OracleTable) {
  const Result r = Run("oracle --n 8 --instances 4");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST_F(CliTest, PvalueFigureHasThreeBlocks) {
  const Result r = Run("reproduce --figure pvals-500 --seed 7 --replications 3 --resamples 99");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "scenario,n,replicate,seed,observed_stat,p_value");
  std::string blocks;
  while (std::getline(lines, line)) {
    if (blocks.empty() || blocks.back() != line[0]) blocks.push_back(line[0]);
  }
  EXPECT_EQ(blocks, "abc");
}

TEST_F(CliTest, OutputIndependentOfThreads) {
  const std::string base = "reproduce --figure pvals-500 --seed 11 --replications 4 --resamples 99 --threads ";
  const Result one = Run(base + "1");
  const Result eight = Run(base + "8");
  ASSERT_EQ(one.code, 0);
  EXPECT_EQ(one.out, eight.out);
  const fs::path cfg = Write("c.json", kConfig);
  EXPECT_EQ(Run("test --threads 1 --config " + cfg.string()).out,
            Run("test --threads 8 --config " + cfg.string()).out);
}

TEST_F(CliTest, HistogramOutput) {
  const fs::path out = dir_ / "p.csv";
  const Result r = Run("reproduce --figure pvals-500 --replications 3 --resamples 99 --emit-hist bins=5 --out " +
                       out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string hist = Slurp(fs::path(out.string() + ".hist.csv"));
  EXPECT_EQ(hist.rfind("group,bin,lower,upper,count\n", 0), 0u) << hist;
}

}  // namespace
