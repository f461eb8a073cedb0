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

#include "nbd/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "nbd/error.hpp"
#include "nbd/png_io.hpp"
#include "nbd/rng.hpp"
#include "text_util.hpp"

namespace nbd {

using detail::format_double;
using detail::parse_number;
using detail::split_fields;

namespace {

constexpr std::uint64_t kPairSeedTag = 0x5041495253ULL;

bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    return true;
  }
  return false;
}

void expect_keyword(const std::vector<std::string>& f, const char* key, std::size_t n) {
  require(!f.empty() && f[0] == key && f.size() == n, ErrorCode::kFormat,
          std::string("manifest: malformed '") + key + "' line");
}

}  // namespace

void write_manifest(std::ostream& out, const DatasetManifest& m) {
  out << "NBD-MANIFEST " << kManifestVersion << '\n';
  out << "# index top left kernel_seed1 kernel_seed2 noise_seed1 noise_seed2 sigma8 patch source\n";
  const auto& ks = m.kernel_spec;
  out << "kernel-spec " << ks.size_min << ' ' << ks.size_max << ' ' << ks.trajectory_steps << ' '
      << format_double(ks.smoothing_sigma) << '\n';
  switch (m.wiener.nsr_mode) {
    case NsrMode::kKnownSigma:
      out << "wiener known " << format_double(m.wiener.nsr_floor) << '\n';
      break;
    case NsrMode::kEstimated:
      out << "wiener estimated " << m.wiener.window << ' ' << format_double(m.wiener.nsr_floor)
          << '\n';
      break;
    case NsrMode::kFixed:
      out << "wiener fixed " << format_double(m.wiener.nsr) << ' '
          << format_double(m.wiener.nsr_floor) << '\n';
      break;
  }
  out << "count " << m.records.size() << '\n';
  for (const auto& r : m.records) {
    out << r.index << ' ' << r.top << ' ' << r.left << ' ' << r.seeds.kernel1 << ' '
        << r.seeds.kernel2 << ' ' << r.seeds.noise1 << ' ' << r.seeds.noise2 << ' '
        << format_double(r.sigma8) << ' ' << r.patch << ' ' << r.source << '\n';
  }
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write manifest " + path.string());
  write_manifest(out, m);
  if (!out) fail(ErrorCode::kIo, "failed writing manifest " + path.string());
}

DatasetManifest parse_manifest(std::istream& in) {
  std::string line;
  if (!next_content_line(in, line)) fail(ErrorCode::kFormat, "manifest: empty input");
  auto f = split_fields(line);
  require(f.size() == 2 && f[0] == "NBD-MANIFEST", ErrorCode::kFormat,
          "manifest: missing NBD-MANIFEST header");
  const int version = parse_number<int>(f[1], "manifest version");
  require(version == kManifestVersion, ErrorCode::kVersionMismatch,
          "manifest: unsupported version " + f[1] + " (expected " +
              std::to_string(kManifestVersion) + ")");

  DatasetManifest m;
  require(next_content_line(in, line), ErrorCode::kFormat, "manifest: missing kernel-spec");
  f = split_fields(line);
  expect_keyword(f, "kernel-spec", 5);
  m.kernel_spec.size_min = parse_number<int>(f[1], "kernel-spec size_min");
  m.kernel_spec.size_max = parse_number<int>(f[2], "kernel-spec size_max");
  m.kernel_spec.trajectory_steps = parse_number<int>(f[3], "kernel-spec steps");
  m.kernel_spec.smoothing_sigma = parse_number<double>(f[4], "kernel-spec smoothing");
  try {
    m.kernel_spec.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("manifest: ") + e.what());
  }

  require(next_content_line(in, line), ErrorCode::kFormat, "manifest: missing wiener line");
  f = split_fields(line);
  require(f.size() >= 3 && f[0] == "wiener", ErrorCode::kFormat, "manifest: malformed wiener line");
  if (f[1] == "known" && f.size() == 3) {
    m.wiener = WienerConfig::known_sigma(0.0);
    m.wiener.nsr_floor = parse_number<double>(f[2], "nsr_floor");
  } else if (f[1] == "estimated" && f.size() == 4) {
    m.wiener = WienerConfig::estimated(parse_number<int>(f[2], "window"));
    m.wiener.nsr_floor = parse_number<double>(f[3], "nsr_floor");
  } else if (f[1] == "fixed" && f.size() == 4) {
    m.wiener = WienerConfig::fixed(parse_number<double>(f[2], "nsr"));
    m.wiener.nsr_floor = parse_number<double>(f[3], "nsr_floor");
  } else {
    fail(ErrorCode::kFormat, "manifest: unknown wiener mode '" + f[1] + "'");
  }
  require(m.wiener.nsr_floor > 0.0, ErrorCode::kFormat, "manifest: nsr_floor must be positive");

  require(next_content_line(in, line), ErrorCode::kFormat, "manifest: missing count line");
  f = split_fields(line);
  expect_keyword(f, "count", 2);
  const auto count = parse_number<std::size_t>(f[1], "count");

  m.records.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    require(next_content_line(in, line), ErrorCode::kFormat,
            "manifest: expected " + std::to_string(count) + " records, found " +
                std::to_string(i));
    f = split_fields(line, 10);
    require(f.size() == 10, ErrorCode::kFormat,
            "manifest: record " + std::to_string(i) + " has " + std::to_string(f.size()) +
                " fields, expected 10");
    ManifestRecord r;
    r.index = parse_number<std::size_t>(f[0], "index");
    r.top = parse_number<int>(f[1], "top");
    r.left = parse_number<int>(f[2], "left");
    r.seeds.kernel1 = parse_number<std::uint64_t>(f[3], "kernel_seed1");
    r.seeds.kernel2 = parse_number<std::uint64_t>(f[4], "kernel_seed2");
    r.seeds.noise1 = parse_number<std::uint64_t>(f[5], "noise_seed1");
    r.seeds.noise2 = parse_number<std::uint64_t>(f[6], "noise_seed2");
    r.sigma8 = parse_number<double>(f[7], "sigma8");
    r.patch = parse_number<int>(f[8], "patch");
    r.source = f[9];
    require(r.index == i, ErrorCode::kFormat, "manifest: records out of order at " + std::to_string(i));
    require(r.top >= 0 && r.left >= 0 && r.patch > 0 && r.sigma8 >= 0.0, ErrorCode::kFormat,
            "manifest: record " + std::to_string(i) + " has invalid geometry or sigma");
    require(r.seeds.kernel1 != r.seeds.kernel2 && r.seeds.noise1 != r.seeds.noise2,
            ErrorCode::kFormat, "manifest: record " + std::to_string(i) + " reuses a seed");
    m.records.push_back(std::move(r));
  }
  require(!next_content_line(in, line), ErrorCode::kFormat, "manifest: trailing records");
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open manifest " + path.string());
  return parse_manifest(in);
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::error_code ec;
  require(std::filesystem::is_directory(dir, ec), ErrorCode::kIo,
          "not a readable directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png") out.push_back(entry.path());
  }
  if (ec) fail(ErrorCode::kIo, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

DatasetManifest build_dataset(const DatasetRequest& request) {
  request.kernel_spec.validate();
  require(request.patch > 0, ErrorCode::kInvalidArgument, "patch must be positive");
  require(request.patch >= request.kernel_spec.size_max, ErrorCode::kInvalidArgument,
          "patch must be at least as large as the largest kernel");

  DatasetManifest m;
  m.kernel_spec = request.kernel_spec;
  m.kernel_spec.rng_seed = 0;
  m.wiener = request.wiener;
  const auto sources = list_images(request.src_dir);
  if (request.count == 0) return m;
  require(!sources.empty(), ErrorCode::kIo, "no PNG images in " + request.src_dir.string());

  struct Dims {
    int h;
    int w;
  };
  std::vector<Dims> dims;
  dims.reserve(sources.size());
  for (const auto& p : sources) {
    const ImageBuffer img = read_png(p);
    require(img.height() >= request.patch && img.width() >= request.patch,
            ErrorCode::kInvalidArgument,
            p.string() + " (" + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                ") is smaller than the " + std::to_string(request.patch) + " patch");
    dims.push_back({img.height(), img.width()});
  }

  m.records.reserve(request.count);
  for (std::size_t i = 0; i < request.count; ++i) {
    const std::uint64_t sample_seed = mix_seed(request.seed, i);
    Rng rng(sample_seed);
    const std::size_t src = rng.below(sources.size());
    ManifestRecord r;
    r.index = i;
    r.top = static_cast<int>(rng.below(static_cast<std::uint64_t>(dims[src].h - request.patch + 1)));
    r.left = static_cast<int>(rng.below(static_cast<std::uint64_t>(dims[src].w - request.patch + 1)));
    r.seeds = derive_pair_seeds(mix_seed(sample_seed, kPairSeedTag));
    r.sigma8 = request.noise.sigma8;
    r.patch = request.patch;
    r.source = sources[src].string();
    m.records.push_back(std::move(r));
  }
  return m;
}

ManifestPairSource::ManifestPairSource(DatasetManifest manifest) : manifest_(std::move(manifest)) {
  manifest_.kernel_spec.validate();
}

std::shared_ptr<const ImageBuffer> ManifestPairSource::source(const std::string& path) const {
  std::lock_guard lock(cache_mutex_);
  if (auto it = cache_.find(path); it != cache_.end()) return it->second;
  auto img = std::make_shared<const ImageBuffer>(read_png(path));
  cache_.emplace(path, img);
  return img;
}

TrainingPair ManifestPairSource::pair(std::size_t i) const {
  require(i < manifest_.records.size(), ErrorCode::kOutOfBounds, "sample index out of range");
  const ManifestRecord& r = manifest_.records[i];
  const auto img = source(r.source);
  TrainingPair p = make_training_pair(extract_patch(*img, r.top, r.left, r.patch), r.seeds,
                                      NoiseLevel(r.sigma8), manifest_.kernel_spec,
                                      manifest_.wiener);
  p.provenance.clean_id =
      r.source + "@" + std::to_string(r.top) + "," + std::to_string(r.left);
  return p;
}

}  // namespace nbd
