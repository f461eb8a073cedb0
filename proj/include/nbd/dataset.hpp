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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "nbd/blur_lab.hpp"

namespace nbd {

inline constexpr int kManifestVersion = 1;

// One training sample, fully determined by its fields and the manifest
// header. Field order on disk:
//   index top left kernel_seed1 kernel_seed2 noise_seed1 noise_seed2 sigma8 patch source
// with `source` taking the rest of the line so paths may contain spaces.
struct ManifestRecord {
  std::size_t index = 0;
  int top = 0;
  int left = 0;
  PairSeeds seeds;
  double sigma8 = 0.0;
  int patch = 0;
  std::string source;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

// Text layout:
//   NBD-MANIFEST <version>
//   kernel-spec <size_min> <size_max> <trajectory_steps> <smoothing_sigma>
//   wiener known <nsr_floor> | wiener estimated <window> <nsr_floor> | wiener fixed <nsr> <nsr_floor>
//   count <n>
//   <n record lines>
// Lines starting with '#' are comments.
struct DatasetManifest {
  SynthKernelSpec kernel_spec;
  WienerConfig wiener;
  std::vector<ManifestRecord> records;
};

void write_manifest(std::ostream& out, const DatasetManifest& m);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest parse_manifest(std::istream& in);
DatasetManifest read_manifest(const std::filesystem::path& path);

// *.png files directly inside dir, sorted by filename.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

struct DatasetRequest {
  std::filesystem::path src_dir;
  std::size_t count = 0;
  int patch = 256;
  NoiseLevel noise{2.55};
  SynthKernelSpec kernel_spec;
  WienerConfig wiener;
  std::uint64_t seed = 0;
};

// Draws `count` records: source image, crop offsets and the four pair seeds
// per sample, all derived from request.seed. Every listed source must be at
// least patch x patch.
DatasetManifest build_dataset(const DatasetRequest& request);

// Produces training pairs on demand. Implementations hand out corrupted
// observations only.
class PairSource {
 public:
  virtual ~PairSource() = default;
  virtual std::size_t size() const = 0;
  virtual TrainingPair pair(std::size_t i) const = 0;
};

// Regenerates pairs from a manifest; sources are decoded once and cached.
class ManifestPairSource final : public PairSource {
 public:
  explicit ManifestPairSource(DatasetManifest manifest);

  std::size_t size() const override { return manifest_.records.size(); }
  TrainingPair pair(std::size_t i) const override;
  const DatasetManifest& manifest() const noexcept { return manifest_; }

 private:
  std::shared_ptr<const ImageBuffer> source(const std::string& path) const;

  DatasetManifest manifest_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, std::shared_ptr<const ImageBuffer>> cache_;
};

}  // namespace nbd
