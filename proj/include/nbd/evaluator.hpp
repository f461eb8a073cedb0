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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "nbd/blur_lab.hpp"
#include "nbd/trainer.hpp"
#include "nbd/unet.hpp"
#include "nbd/wiener.hpp"

namespace nbd {

inline constexpr int kTestsetVersion = 1;

// Kernel field: a kernel text file path, or "synth:<seed>:<size_min>:<size_max>"
// for a trajectory kernel with default shape parameters.
struct TestRecord {
  std::string id;
  double sigma8 = 0.0;
  std::uint64_t noise_seed = 0;
  std::string kernel;
  std::string image;  // clean reference, PNG

  friend bool operator==(const TestRecord&, const TestRecord&) = default;
};

// Text layout:
//   NBD-TESTSET <version>
//   <id> <sigma8> <noise_seed> <kernel> <image path (rest of line)>
// '#' lines are comments.
struct Testset {
  std::vector<TestRecord> records;
};

void write_testset(std::ostream& out, const Testset& t);
void write_testset(const Testset& t, const std::filesystem::path& path);
Testset parse_testset(std::istream& in);
Testset read_testset(const std::filesystem::path& path);

Kernel resolve_kernel(const std::string& kernel_field);

struct TestsetRequest {
  std::filesystem::path src_dir;
  int kernels_per_image = 1;
  std::vector<double> sigma8s{2.55, 7.65, 12.75};
  int kernel_size_min = 11;
  int kernel_size_max = 35;
  std::uint64_t seed = 0;
};

// One record per (sigma, image, kernel draw). Kernel seeds come from a
// stream disjoint from the training pair seeds.
Testset build_testset(const TestsetRequest& request);

// clamp01(denoiser(wiener(y))). Input is padded internally to the
// network's size multiple.
ImageBuffer deblur(const ImageBuffer& y, const Kernel& k, const ModelParams& params,
                   const WienerConfig& cfg);

struct EvalRecord {
  std::string image_id;
  std::string kernel_id;
  double sigma8 = 0.0;
  double psnr_blurry = 0.0;
  double psnr_wiener = 0.0;
  double psnr_restored = 0.0;
  double ssim_restored = 0.0;
  double runtime_ms = 0.0;
};

struct SigmaSummary {
  double sigma8 = 0.0;
  std::size_t count = 0;
  double psnr_blurry = 0.0;
  double psnr_wiener = 0.0;
  double psnr_restored = 0.0;
  double ssim_restored = 0.0;
};

struct BenchmarkResult {
  std::vector<EvalRecord> records;
  std::vector<SigmaSummary> summary;  // ascending sigma8
  std::vector<std::string> failures;  // one message per skipped record
  std::string color = "none";         // gray, rgb or mixed
};

// Synthesizes each blurry input (blur_and_noise with the record's seed),
// deblurs it and scores against the clean reference. Unreadable assets are
// recorded in `failures` and skipped. In known-sigma mode the record's
// sigma8 sets the noise level.
BenchmarkResult run_benchmark(const Testset& testset, const ModelParams& params,
                              const WienerConfig& cfg);

std::vector<SigmaSummary> summarize(const std::vector<EvalRecord>& records);

void write_records_csv(std::ostream& out, const BenchmarkResult& result);
void write_summary_csv(std::ostream& out, const BenchmarkResult& result);

// Mean restored PSNR over the testset, for TrainOutputs::validator.
Validator make_validator(Testset testset, WienerConfig cfg);

}  // namespace nbd
