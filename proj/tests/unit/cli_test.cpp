// Copyright 2026 The AdaRC Lab Authors.
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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "test_util.hpp"

namespace adarc {
namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(ADARC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = testing::scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::ofstream(dir_ / "small.cfg") << "n = 200\ndim = 20\nhidden_dim = 8\nhops = 3\n"
                                         "train.epochs = 30\nadapt.epochs = 4\nseeds = 1\n";
  }
  std::string cfg() const { return "--config " + (dir_ / "small.cfg").string(); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, Pipeline) {
  ASSERT_EQ(run(cfg() + " --out " + path("data") + " generate --scenario homo2hetero"), 0);
  ASSERT_TRUE(fs::exists(dir_ / "data/source"));
  ASSERT_EQ(run(cfg() + " --out " + path("m.ckpt") + " pretrain --data " + path("data/source") +
                " --history " + path("hist.csv")),
            0);
  ASSERT_EQ(run(cfg() + " --out " + path("a.ckpt") + " adapt --ckpt " + path("m.ckpt") +
                " --data " + path("data/target") + " --trace " + path("trace.csv") +
                " --predictions " + path("pred.csv")),
            0);
  EXPECT_EQ(run(cfg() + " --out " + path("eval.json") + " eval --ckpt " + path("a.ckpt") +
                " --data " + path("data/target")),
            0);
  EXPECT_NE(slurp(dir_ / "eval.json").find("\"accuracy\""), std::string::npos);
  EXPECT_EQ(run(cfg() + " eval --ckpt " + path("m.ckpt") + " --data " + path("data/source") +
                " --mask test"),
            0);
  EXPECT_EQ(run(cfg() + " eval --ckpt " + path("m.ckpt") + " --data " + path("data/source") +
                " --mask holdout"),
            2);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("--config /nonexistent.cfg scenario"), 2);
  EXPECT_EQ(run(cfg() + " --out " + path("x.json") + " scenario --scenario sideways"), 2);
  EXPECT_EQ(run(cfg() + " scenario"), 2);  // missing --out
  std::ofstream(dir_ / "bad.cfg") << "adapt.rate = 1\n";
  EXPECT_EQ(run("--config " + path("bad.cfg") + " --out " + path("x.json") + " scenario"), 2);
  EXPECT_EQ(run("--out " + path("m.ckpt") + " pretrain --data " + path("missing")), 2);
}

TEST_F(Cli, DivergenceExitsWithNumericalCode) {
  ASSERT_EQ(run(cfg() + " --out " + path("data") + " generate"), 0);
  ASSERT_EQ(run(cfg() + " --out " + path("m.ckpt") + " pretrain --data " + path("data/source")),
            0);
  EXPECT_EQ(run(cfg() + " adapt --ckpt " + path("m.ckpt") + " --data " + path("data/target") +
                " --loss diff --lr 1e300"),
            3);
}

TEST_F(Cli, ScenarioAndTheoryAreByteDeterministic) {
  for (const char* run_name : {"r1", "r2"}) {
    const std::string r = run_name;
    ASSERT_EQ(run(cfg() + " --out " + path(r + "_sc.json") +
                  " scenario --methods erm,erm+adarc,t3a --seeds 1,2"),
              0);
    ASSERT_EQ(run("--out " + path(r + "_th.csv") +
                  " theory --degree 2,5 --homophily 0.3,0.9 --gamma-steps 3 --trials 500"),
              0);
  }
  EXPECT_EQ(slurp(dir_ / "r1_sc.json"), slurp(dir_ / "r2_sc.json"));
  EXPECT_EQ(slurp(dir_ / "r1_th.csv"), slurp(dir_ / "r2_th.csv"));
  EXPECT_EQ(slurp(dir_ / "r1_th.csv").substr(0, 34), "d,h,gamma,closed_form,monte_carlo\n");
}

}  // namespace
}  // namespace adarc
