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

#include "nbd/kernel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "nbd/error.hpp"

namespace nbd {

namespace {

constexpr double kSumTolerance = 1e-9;
constexpr double kParseRenormTolerance = 1e-3;

void check_kernel_dims(int height, int width, std::size_t count) {
  require(height >= 1 && width >= 1 && height % 2 == 1 && width % 2 == 1,
          ErrorCode::kInvalidArgument,
          "kernel dims must be odd and positive, got " + std::to_string(height) + "x" +
              std::to_string(width));
  require(count == static_cast<std::size_t>(height) * width, ErrorCode::kShapeMismatch,
          "kernel weight count does not match H*W");
}

double checked_sum(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    require(std::isfinite(w), ErrorCode::kNumeric, "kernel weight is not finite");
    require(w >= 0.0, ErrorCode::kInvalidArgument, "kernel weights must be non-negative");
    sum += w;
  }
  return sum;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

Kernel::Kernel() : height_(1), width_(1), weights_{1.0} {}

Kernel::Kernel(int height, int width, std::vector<double> weights)
    : height_(height), width_(width), weights_(std::move(weights)) {
  check_kernel_dims(height_, width_, weights_.size());
  const double sum = checked_sum(weights_);
  require(std::abs(sum - 1.0) <= kSumTolerance, ErrorCode::kInvalidArgument,
          "kernel weights must sum to 1 (got " + format_double(sum) + ")");
}

Kernel Kernel::normalized(int height, int width, std::vector<double> weights) {
  check_kernel_dims(height, width, weights.size());
  const double sum = checked_sum(weights);
  require(sum > 0.0, ErrorCode::kInvalidArgument, "kernel weights sum to zero");
  for (double& w : weights) w /= sum;
  return Kernel(height, width, std::move(weights));
}

Kernel Kernel::delta(int size) {
  std::vector<double> w(static_cast<std::size_t>(size) * size, 0.0);
  check_kernel_dims(size, size, w.size());
  w[w.size() / 2] = 1.0;
  return Kernel(size, size, std::move(w));
}

Kernel Kernel::box(int size) {
  return normalized(size, size, std::vector<double>(static_cast<std::size_t>(size) * size, 1.0));
}

Kernel Kernel::gaussian(int size, double sigma) {
  require(sigma > 0.0, ErrorCode::kInvalidArgument, "gaussian kernel sigma must be positive");
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  const int r = size / 2;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double dy = y - r;
      const double dx = x - r;
      w[static_cast<std::size_t>(y) * size + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  return normalized(size, size, std::move(w));
}

Kernel parse_kernel(std::istream& in) {
  int h = 0;
  int w = 0;
  if (!(in >> h >> w)) fail(ErrorCode::kFormat, "kernel file: missing 'H W' header");
  require(h >= 1 && w >= 1 && h % 2 == 1 && w % 2 == 1, ErrorCode::kFormat,
          "kernel file: dims must be odd and positive");
  std::vector<double> weights(static_cast<std::size_t>(h) * w);
  std::string token;
  for (double& v : weights) {
    if (!(in >> token)) fail(ErrorCode::kFormat, "kernel file: too few weights");
    const char* first = token.data();
    const char* last = first + token.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
      fail(ErrorCode::kFormat, "kernel file: bad weight '" + token + "'");
  }
  if (in >> token) fail(ErrorCode::kFormat, "kernel file: trailing data after weights");
  for (double v : weights)
    require(std::isfinite(v) && v >= 0.0, ErrorCode::kFormat,
            "kernel file: weights must be finite and non-negative");
  double sum = 0.0;
  for (double v : weights) sum += v;
  require(std::abs(sum - 1.0) <= kParseRenormTolerance, ErrorCode::kFormat,
          "kernel file: weights sum to " + format_double(sum) + ", expected 1");
  if (std::abs(sum - 1.0) <= kSumTolerance) return Kernel(h, w, std::move(weights));
  return Kernel::normalized(h, w, std::move(weights));
}

Kernel read_kernel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open kernel file " + path.string());
  return parse_kernel(in);
}

void write_kernel(std::ostream& out, const Kernel& k) {
  out << k.height() << ' ' << k.width() << '\n';
  for (int y = 0; y < k.height(); ++y) {
    for (int x = 0; x < k.width(); ++x) {
      if (x > 0) out << ' ';
      out << format_double(k.at(y, x));
    }
    out << '\n';
  }
}

void write_kernel(const Kernel& k, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write kernel file " + path.string());
  write_kernel(out, k);
  if (!out) fail(ErrorCode::kIo, "failed writing kernel file " + path.string());
}

}  // namespace nbd
