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

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "nbd/dataset.hpp"
#include "nbd/error.hpp"
#include "nbd/png_io.hpp"

using namespace nbd;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no nbd::Error thrown";
  return ErrorCode::kInvalidArgument;
}

class DatasetTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "nbd_dataset_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_ / "src");
    write_png(synth_scene(1, 256, 256, 1), dir_ / "src" / "b.png");
    write_png(synth_scene(1, 256, 256, 2), dir_ / "src" / "a.png");
    std::ofstream(dir_ / "src" / "notes.txt") << "ignored";
  }
  void TearDown() override { fs::remove_all(dir_); }

  DatasetRequest request(std::size_t count) const {
    DatasetRequest r;
    r.src_dir = dir_ / "src";
    r.count = count;
    r.patch = 64;
    r.seed = 17;
    return r;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(DatasetTest, ListsPngsSorted) {
  const auto files = list_images(dir_ / "src");
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0].filename(), "a.png");
  EXPECT_EQ(files[1].filename(), "b.png");
  EXPECT_EQ(code_of([&] { list_images(dir_ / "missing"); }), ErrorCode::kIo);
}

TEST_F(DatasetTest, ZeroCountIsEmpty) {
  const auto m = build_dataset(request(0));
  EXPECT_TRUE(m.records.empty());
  std::stringstream ss;
  write_manifest(ss, m);
  EXPECT_TRUE(parse_manifest(ss).records.empty());
}

TEST_F(DatasetTest, DeterministicAndInBounds) {
  const auto a = build_dataset(request(10));
  const auto b = build_dataset(request(10));
  ASSERT_EQ(a.records.size(), 10u);
  EXPECT_EQ(a.records, b.records);
  std::stringstream sa, sb;
  write_manifest(sa, a);
  write_manifest(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  for (const auto& r : a.records) {
    EXPECT_GE(r.top, 0);
    EXPECT_GE(r.left, 0);
    EXPECT_LE(r.top + 64, 256);
    EXPECT_LE(r.left + 64, 256);
    EXPECT_EQ(r.patch, 64);
    EXPECT_EQ(r.sigma8, 2.55);
  }
  auto other = request(10);
  other.seed = 18;
  EXPECT_NE(build_dataset(other).records, a.records);
}

TEST_F(DatasetTest, PrefixStable) {
  const auto small = build_dataset(request(4));
  const auto big = build_dataset(request(9));
  for (std::size_t i = 0; i < small.records.size(); ++i) EXPECT_EQ(small.records[i], big.records[i]);
}

TEST_F(DatasetTest, ManifestRoundTrip) {
  auto req = request(5);
  req.wiener = WienerConfig::estimated(5);
  const auto m = build_dataset(req);
  const fs::path path = dir_ / "manifest.txt";
  write_manifest(m, path);
  const auto back = read_manifest(path);
  EXPECT_EQ(back.records, m.records);
  EXPECT_EQ(back.wiener.nsr_mode, NsrMode::kEstimated);
  EXPECT_EQ(back.wiener.window, 5);
  EXPECT_EQ(back.kernel_spec.size_max, m.kernel_spec.size_max);
}

TEST_F(DatasetTest, ParseErrors) {
  std::istringstream bad_version("NBD-MANIFEST 2\n");
  EXPECT_EQ(code_of([&] { parse_manifest(bad_version); }), ErrorCode::kVersionMismatch);
  std::istringstream bad_magic("HELLO 1\n");
  EXPECT_EQ(code_of([&] { parse_manifest(bad_magic); }), ErrorCode::kFormat);
  std::istringstream short_count(
      "NBD-MANIFEST 1\nkernel-spec 11 35 64 0.7\nwiener known 1e-10\ncount 2\n"
      "0 0 0 1 2 3 4 2.55 64 x.png\n");
  EXPECT_EQ(code_of([&] { parse_manifest(short_count); }), ErrorCode::kFormat);
  std::istringstream same_seeds(
      "NBD-MANIFEST 1\nkernel-spec 11 35 64 0.7\nwiener known 1e-10\ncount 1\n"
      "0 0 0 1 1 3 4 2.55 64 x.png\n");
  EXPECT_EQ(code_of([&] { parse_manifest(same_seeds); }), ErrorCode::kFormat);
}

TEST_F(DatasetTest, SourcePathsMayContainSpaces) {
  std::istringstream in(
      "NBD-MANIFEST 1\nkernel-spec 11 35 64 0.7\nwiener fixed 0.01 1e-10\ncount 1\n"
      "0 1 2 1 2 3 4 2.55 64 my photos/x y.png\n");
  const auto m = parse_manifest(in);
  EXPECT_EQ(m.records[0].source, "my photos/x y.png");
  EXPECT_EQ(m.wiener.nsr_mode, NsrMode::kFixed);
}

TEST_F(DatasetTest, RejectsUnusableRequests) {
  auto small_patch = request(3);
  small_patch.patch = 16;
  EXPECT_EQ(code_of([&] { build_dataset(small_patch); }), ErrorCode::kInvalidArgument);
  auto huge = request(3);
  huge.patch = 300;
  huge.kernel_spec.size_max = 35;
  EXPECT_THROW(build_dataset(huge), Error);
}

TEST_F(DatasetTest, PairSourceRegeneratesDeterministically) {
  const auto m = build_dataset(request(3));
  const ManifestPairSource a(m);
  const ManifestPairSource b(m);
  EXPECT_EQ(a.size(), 3u);
  const auto pa = a.pair(1);
  const auto pb = b.pair(1);
  EXPECT_EQ(pa.input, pb.input);
  EXPECT_EQ(pa.target, pb.target);
  EXPECT_NE(pa.input, pa.target);
  EXPECT_EQ(pa.input.height(), 64);
  EXPECT_EQ(pa.provenance.seeds.kernel1, m.records[1].seeds.kernel1);
  EXPECT_EQ(code_of([&] { a.pair(3); }), ErrorCode::kOutOfBounds);
}
