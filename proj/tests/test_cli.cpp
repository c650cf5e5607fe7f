/*
 Copyright 2026 The stochmin Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "support.hpp"

namespace stochmin {
namespace {

namespace fs = std::filesystem;
using testing::config_path;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("stochmin_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& out = "out") const {
    const std::string cmd = std::string(STOCHMIN_CLI) + " " + args + " --out-dir " +
                            (dir_ / out).string() + " > " + (dir_ / "stdout.txt").string() +
                            " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  nlohmann::json report(const std::string& out = "out") const {
    std::ifstream in(dir_ / out / "report.json");
    return nlohmann::json::parse(in);
  }

  std::string write(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  fs::path dir_;
};

TEST_F(Cli, CheckFlagship) {
  ASSERT_EQ(run("check --config " + config_path("flagship.json") + " --paths 1000"), 0);
  const auto r = report();
  EXPECT_TRUE(r["controllable"].get<bool>());
  EXPECT_NEAR(r["riccati"]["margin"].get<double>(), 1.0, 1e-10);
  EXPECT_EQ(r["gramian"]["rank"].get<int>(), 1);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "riccati.csv"));
}

TEST_F(Cli, CheckSquareIsNotControllable) {
  EXPECT_EQ(run("check --config " + config_path("square.json") + " --paths 500"), 3);
  EXPECT_FALSE(report()["controllable"].get<bool>());
}

TEST_F(Cli, ValidationFailure) {
  const std::string doc = write("bad.json", R"({
    "n": 1, "m": 2, "T": 1.0, "steps": 10, "x0": [0.0],
    "A": 0.0, "B": [0.0, 1.0], "C": 0.0, "D": [1.0, 0.0],
    "R": [[1.0, 2.0], [2.0, 1.0]], "target": {"a": [0.0], "b": [1.0]}
  })");
  EXPECT_EQ(run("check --config " + doc), 2);
  EXPECT_EQ(run("solve --config " + write("broken.json", "{ nope")), 2);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("check --config " + config_path("flagship.json") + " --bogus"), 1);
  EXPECT_EQ(run("frobnicate --config " + config_path("flagship.json")), 1);
  EXPECT_EQ(run("check"), 1);
  EXPECT_EQ(run("oracle --config " + config_path("flagship.json") + " --tree-depth 20"), 1);
}

TEST_F(Cli, SimulateIsReproducible) {
  const std::string args =
      "simulate --config " + config_path("flagship.json") + " --paths 400 --steps 200 --seed 7";
  ASSERT_EQ(run(args, "a"), 0);
  ASSERT_EQ(run(args, "b"), 0);
  auto a = report("a");
  auto b = report("b");
  a.erase("timing");
  b.erase("timing");
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_NEAR(a["simulation"]["energy"]["mean"].get<double>(), std::log(2.0), 0.1);
  for (const char* f : {"trajectories.csv", "terminal.csv", "energy.csv", "summary.csv",
                        "riccati.csv", "bsde.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;
  }
}

TEST_F(Cli, SolveWritesExports) {
  ASSERT_EQ(run("solve --config " + config_path("switching.json") + " --steps 100"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "riccati.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "bsde.csv"));
  EXPECT_EQ(report()["solution"]["K"].size(), 2u);
}

TEST_F(Cli, OracleDeterministic) {
  ASSERT_EQ(run("oracle --config " + config_path("deterministic.json") +
                " --tree-depth 5 --paths 100 --steps 100"),
            0);
  EXPECT_NEAR(report()["tree"]["J"].get<double>(), 2.25, 1e-10);
}

TEST_F(Cli, OracleInfeasibleExitCode) {
  EXPECT_EQ(run("oracle --config " + config_path("square.json") + " --tree-depth 3"), 3);
}

TEST_F(Cli, LqFlagship) {
  ASSERT_EQ(run("lq --config " + config_path("flagship_lq.json") + " --paths 100"), 0);
  EXPECT_NEAR(report()["lq"]["total_cost"].get<double>(), 1.0 / std::tanh(1.0), 5e-3);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "lq_riccati.csv"));
}

}  // namespace
}  // namespace stochmin
