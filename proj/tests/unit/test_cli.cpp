// Copyright 2026 The nbd Authors
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

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "nbd/image.hpp"
#include "nbd/png_io.hpp"

namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "nbd_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI with stdout redirected to out.txt and returns its exit code.
  int run(const std::string& args) const {
    const std::string cmd = std::string("\"") + NBD_CLI_PATH + "\" " + args + " >\"" +
                            (dir_ / "out.txt").string() + "\" 2>\"" + (dir_ / "err.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string slurp(const fs::path& p) const {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string p(const char* name) const { return "\"" + (dir_ / name).string() + "\""; }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, VersionAndUsageErrors) {
  EXPECT_EQ(run("--version"), 0);
  EXPECT_NE(slurp(dir_ / "out.txt").find("nbd "), std::string::npos);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("wiener --in a.png --kernel k.txt --out o.png"), 2);
  EXPECT_EQ(run("wiener --in a.png --kernel k.txt --sigma8 1 --estimate-nsr --out o.png"), 2);
  EXPECT_EQ(run("synth-kernel --out k.txt"), 2);
}

TEST_F(CliTest, RuntimeFailuresExitOne) {
  std::ofstream(dir_ / "k.txt") << "1 1\n1\n";
  EXPECT_EQ(run("wiener --in " + p("missing.png") + " --kernel " + p("k.txt") +
                " --sigma8 0 --out " + p("o.png")),
            1);
  EXPECT_NE(slurp(dir_ / "err.txt").find("i/o error"), std::string::npos);
  EXPECT_EQ(run("synth-kernel --size-min 12 --seed 1 --out " + p("bad.txt")), 2);
}

TEST_F(CliTest, DeltaKernelWienerIsNearIdentity) {
  ASSERT_EQ(run("synth-images --out-dir " + p("img") + " --count 1 --height 40 --width 36 --seed 3"), 0);
  std::ofstream(dir_ / "delta.txt") << "3 3\n0 0 0\n0 1 0\n0 0 0\n";
  const std::string in = p("img/scene_0000.png");
  ASSERT_EQ(run("blur --in " + in + " --kernel " + p("delta.txt") + " --sigma8 0 --seed 1 --out " +
                p("y.png")),
            0);
  ASSERT_EQ(run("wiener --in " + p("y.png") + " --kernel " + p("delta.txt") + " --sigma8 0 --out " +
                p("x.png")),
            0);
  const auto a = nbd::read_png(dir_ / "img" / "scene_0000.png");
  const auto b = nbd::read_png(dir_ / "x.png");
  ASSERT_TRUE(a.same_shape(b));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(std::abs(a.data()[i] - b.data()[i]), 1.0 / 255 + 1e-12);
}

TEST_F(CliTest, BlurIsReproducible) {
  ASSERT_EQ(run("synth-images --out-dir " + p("img") + " --count 1 --height 32 --width 32 --seed 4"), 0);
  ASSERT_EQ(run("synth-kernel --size-min 11 --size-max 15 --seed 7 --out " + p("k.txt")), 0);
  const std::string base = "blur --in " + p("img/scene_0000.png") + " --kernel " + p("k.txt") + " --sigma8 7.65";
  ASSERT_EQ(run(base + " --seed 5 --out " + p("a.png")), 0);
  ASSERT_EQ(run(base + " --seed 5 --out " + p("b.png")), 0);
  ASSERT_EQ(run(base + " --seed 6 --out " + p("c.png")), 0);
  EXPECT_EQ(slurp(dir_ / "a.png"), slurp(dir_ / "b.png"));
  EXPECT_NE(slurp(dir_ / "a.png"), slurp(dir_ / "c.png"));
}

TEST_F(CliTest, NoiseStatsWithinThreeStandardErrors) {
  ASSERT_EQ(run("synth-kernel --size-min 11 --size-max 11 --seed 2 --out " + p("k.txt")), 0);
  ASSERT_EQ(run("noise-stats --kernel " + p("k.txt") + " --trials 300 --seed 8"), 0);
  std::map<std::string, std::string> kv;
  std::istringstream in(slurp(dir_ / "out.txt"));
  std::string key, value;
  while (in >> key >> value) kv[key] = value;
  EXPECT_EQ(kv["trials"], "300");
  EXPECT_EQ(kv["within_3_stderr"], "yes");
}

TEST_F(CliTest, EmptyTestsetGivesHeaderOnlyCsv) {
  ASSERT_EQ(run("synth-images --out-dir " + p("img") + " --count 1 --height 64 --width 64 --seed 1"), 0);
  ASSERT_EQ(run("build-dataset --src " + p("img") + " --count 2 --patch 32 --kernel-max 15 --seed 1 "
                "--manifest-out " + p("m.txt")),
            0);
  ASSERT_EQ(run("train --manifest " + p("m.txt") + " --arch depth=1,base=2 --epochs 0 --ckpt-dir " +
                p("ck")),
            0);
  ASSERT_TRUE(fs::exists(dir_ / "ck" / "final.nbdw"));
  std::ofstream(dir_ / "t.txt") << "NBD-TESTSET 1\n";
  ASSERT_EQ(run("eval --testset " + p("t.txt") + " --ckpt " + p("ck/final.nbdw") + " --csv-out " +
                p("r.csv")),
            0);
  const std::string csv = slurp(dir_ / "r.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_NE(csv.find("image_id,kernel_id,sigma8"), std::string::npos);

  std::ofstream(dir_ / "t.txt", std::ios::app) << "0 2.55 1 synth:1:11:11 " << (dir_ / "gone.png").string() << "\n";
  EXPECT_EQ(run("eval --testset " + p("t.txt") + " --ckpt " + p("ck/final.nbdw") + " --csv-out " +
                p("r.csv")),
            1);
}
