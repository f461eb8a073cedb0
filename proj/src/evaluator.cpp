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

#include "nbd/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "nbd/error.hpp"
#include "nbd/dataset.hpp"
#include "nbd/png_io.hpp"
#include "nbd/rng.hpp"
#include "text_util.hpp"

namespace nbd {

using detail::format_double;
using detail::parse_number;
using detail::split_fields;

namespace {

constexpr std::uint64_t kTestKernelTag = 0x544553544BULL;
constexpr std::uint64_t kTestNoiseTag = 0x544553544EULL;
constexpr std::string_view kSynthPrefix = "synth:";

std::string synth_field(std::uint64_t seed, int size_min, int size_max) {
  return std::string(kSynthPrefix) + std::to_string(seed) + ":" + std::to_string(size_min) + ":" +
         std::to_string(size_max);
}

}  // namespace

void write_testset(std::ostream& out, const Testset& t) {
  out << "NBD-TESTSET " << kTestsetVersion << '\n';
  out << "# id sigma8 noise_seed kernel image\n";
  for (const auto& r : t.records)
    out << r.id << ' ' << format_double(r.sigma8) << ' ' << r.noise_seed << ' ' << r.kernel << ' '
        << r.image << '\n';
}

void write_testset(const Testset& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write testset " + path.string());
  write_testset(out, t);
  if (!out) fail(ErrorCode::kIo, "failed writing testset " + path.string());
}

Testset parse_testset(std::istream& in) {
  std::string line;
  bool header = false;
  Testset t;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      const auto f = split_fields(line);
      require(f.size() == 2 && f[0] == "NBD-TESTSET", ErrorCode::kFormat,
              "testset: missing NBD-TESTSET header");
      const int version = parse_number<int>(f[1], "testset version");
      require(version == kTestsetVersion, ErrorCode::kVersionMismatch,
              "testset: unsupported version " + f[1]);
      header = true;
      continue;
    }
    const auto f = split_fields(line, 5);
    require(f.size() == 5, ErrorCode::kFormat, "testset: malformed record '" + line + "'");
    TestRecord r;
    r.id = f[0];
    r.sigma8 = parse_number<double>(f[1], "sigma8");
    require(r.sigma8 >= 0.0, ErrorCode::kFormat, "testset: negative sigma8");
    r.noise_seed = parse_number<std::uint64_t>(f[2], "noise_seed");
    r.kernel = f[3];
    r.image = f[4];
    t.records.push_back(std::move(r));
  }
  require(header, ErrorCode::kFormat, "testset: empty input");
  return t;
}

Testset read_testset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open testset " + path.string());
  return parse_testset(in);
}

Kernel resolve_kernel(const std::string& field) {
  if (field.rfind(kSynthPrefix, 0) != 0) return read_kernel(field);
  const std::string rest = field.substr(kSynthPrefix.size());
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t c = rest.find(':', pos);
    parts.push_back(rest.substr(pos, c == std::string::npos ? std::string::npos : c - pos));
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  require(parts.size() == 3, ErrorCode::kFormat,
          "kernel spec must be synth:<seed>:<size_min>:<size_max>, got '" + field + "'");
  SynthKernelSpec spec;
  spec.rng_seed = parse_number<std::uint64_t>(parts[0], "kernel seed");
  spec.size_min = parse_number<int>(parts[1], "kernel size_min");
  spec.size_max = parse_number<int>(parts[2], "kernel size_max");
  return synth_kernel(spec);
}

Testset build_testset(const TestsetRequest& request) {
  require(request.kernels_per_image >= 1, ErrorCode::kInvalidArgument,
          "kernels_per_image must be at least 1");
  SynthKernelSpec check;
  check.size_min = request.kernel_size_min;
  check.size_max = request.kernel_size_max;
  check.validate();
  const auto images = list_images(request.src_dir);
  Testset t;
  std::size_t n = 0;
  for (double s8 : request.sigma8s) {
    static_cast<void>(NoiseLevel(s8));
    for (std::size_t i = 0; i < images.size(); ++i)
      for (int k = 0; k < request.kernels_per_image; ++k, ++n) {
        TestRecord r;
        r.id = std::to_string(n);
        r.sigma8 = s8;
        r.noise_seed = mix_seed(mix_seed(request.seed, kTestNoiseTag), n);
        const std::uint64_t kseed =
            mix_seed(mix_seed(request.seed, kTestKernelTag), i * 1000003ULL + static_cast<std::uint64_t>(k));
        r.kernel = synth_field(kseed, request.kernel_size_min, request.kernel_size_max);
        r.image = images[i].string();
        t.records.push_back(std::move(r));
      }
  }
  return t;
}

ImageBuffer deblur(const ImageBuffer& y, const Kernel& k, const ModelParams& params,
                   const WienerConfig& cfg) {
  return clamp01(predict(params, wiener_deconvolve(y, k, cfg)));
}

std::vector<SigmaSummary> summarize(const std::vector<EvalRecord>& records) {
  std::map<double, SigmaSummary> by_sigma;
  for (const auto& r : records) {
    SigmaSummary& s = by_sigma[r.sigma8];
    s.sigma8 = r.sigma8;
    ++s.count;
    s.psnr_blurry += r.psnr_blurry;
    s.psnr_wiener += r.psnr_wiener;
    s.psnr_restored += r.psnr_restored;
    s.ssim_restored += r.ssim_restored;
  }
  std::vector<SigmaSummary> out;
  for (auto& [sigma, s] : by_sigma) {
    const double n = static_cast<double>(s.count);
    s.psnr_blurry /= n;
    s.psnr_wiener /= n;
    s.psnr_restored /= n;
    s.ssim_restored /= n;
    out.push_back(s);
  }
  return out;
}

BenchmarkResult run_benchmark(const Testset& testset, const ModelParams& params,
                              const WienerConfig& cfg) {
  BenchmarkResult result;
  bool saw_gray = false;
  bool saw_rgb = false;
  for (const auto& rec : testset.records) {
    try {
      const ImageBuffer clean = read_png(rec.image);
      const Kernel k = resolve_kernel(rec.kernel);
      const NoiseLevel nl(rec.sigma8);
      const ImageBuffer y = blur_and_noise(clean, k, nl, rec.noise_seed);
      WienerConfig resolved = cfg;
      if (resolved.nsr_mode == NsrMode::kKnownSigma) resolved.sigma = nl.sigma01();

      const auto start = std::chrono::steady_clock::now();
      const ImageBuffer wiener = wiener_deconvolve(y, k, resolved);
      const ImageBuffer restored = clamp01(predict(params, wiener));
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

      EvalRecord r;
      r.image_id = rec.id;
      r.kernel_id = rec.kernel;
      r.sigma8 = rec.sigma8;
      r.psnr_blurry = psnr(clamp01(y), clean);
      r.psnr_wiener = psnr(clamp01(wiener), clean);
      r.psnr_restored = psnr(restored, clean);
      r.ssim_restored = ssim(restored, clean);
      r.runtime_ms = ms;
      result.records.push_back(std::move(r));
      (clean.channels() == 1 ? saw_gray : saw_rgb) = true;
    } catch (const Error& e) {
      result.failures.push_back("record " + rec.id + ": " + e.what());
    }
  }
  result.color = saw_gray && saw_rgb ? "mixed" : saw_rgb ? "rgb" : saw_gray ? "gray" : "none";
  result.summary = summarize(result.records);
  return result;
}

void write_records_csv(std::ostream& out, const BenchmarkResult& result) {
  out << "# nbd-eval v1 color=" << result.color << " peak=1 metric_channels=mean\n";
  out << "image_id,kernel_id,sigma8,psnr_blurry,psnr_wiener,psnr_restored,ssim_restored,runtime_ms\n";
  for (const auto& r : result.records)
    out << r.image_id << ',' << r.kernel_id << ',' << format_double(r.sigma8) << ','
        << format_double(r.psnr_blurry) << ',' << format_double(r.psnr_wiener) << ','
        << format_double(r.psnr_restored) << ',' << format_double(r.ssim_restored) << ','
        << format_double(std::round(r.runtime_ms * 1000.0) / 1000.0) << '\n';
}

void write_summary_csv(std::ostream& out, const BenchmarkResult& result) {
  out << "# nbd-eval-summary v1 color=" << result.color << '\n';
  out << "sigma8,count,psnr_blurry,psnr_wiener,psnr_restored,ssim_restored\n";
  for (const auto& s : result.summary)
    out << format_double(s.sigma8) << ',' << s.count << ',' << format_double(s.psnr_blurry) << ','
        << format_double(s.psnr_wiener) << ',' << format_double(s.psnr_restored) << ','
        << format_double(s.ssim_restored) << '\n';
}

Validator make_validator(Testset testset, WienerConfig cfg) {
  return [testset = std::move(testset), cfg](const ModelParams& params) {
    const BenchmarkResult r = run_benchmark(testset, params, cfg);
    require(!r.records.empty(), ErrorCode::kInvalidArgument, "validation set produced no records");
    double acc = 0.0;
    for (const auto& rec : r.records) acc += rec.psnr_restored;
    return acc / static_cast<double>(r.records.size());
  };
}

}  // namespace nbd
