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

#include "nbd/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "nbd/error.hpp"

namespace nbd {

namespace {

void check_dims(int channels, int height, int width) {
  require(channels == 1 || channels == 3, ErrorCode::kInvalidArgument,
          "image must have 1 or 3 channels, got " + std::to_string(channels));
  require(height > 0 && width > 0, ErrorCode::kInvalidArgument,
          "image dimensions must be positive");
}

void check_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* op) {
  require(a.same_shape(b), ErrorCode::kShapeMismatch,
          std::string(op) + ": shape mismatch (" + std::to_string(a.channels()) + "x" +
              std::to_string(a.height()) + "x" + std::to_string(a.width()) + " vs " +
              std::to_string(b.channels()) + "x" + std::to_string(b.height()) + "x" +
              std::to_string(b.width()) + ")");
}

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::array<double, kSsimWindow> ssim_taps() {
  std::array<double, kSsimWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    taps[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Valid-mode separable filtering of one plane.
std::vector<double> gaussian_valid(std::span<const double> plane, int h, int w,
                                   const std::array<double, kSsimWindow>& taps) {
  const int oh = h - kSsimWindow + 1;
  const int ow = w - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += taps[k] * plane[y * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k)
        acc += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

double ssim_plane(std::span<const double> a, std::span<const double> b, int h, int w,
                  double peak) {
  static const auto taps = ssim_taps();
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);

  const std::size_t n = a.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = gaussian_valid(a, h, w, taps);
  const auto mu_b = gaussian_valid(b, h, w, taps);
  const auto e_aa = gaussian_valid(aa, h, w, taps);
  const auto e_bb = gaussian_valid(bb, h, w, taps);
  const auto e_ab = gaussian_valid(ab, h, w, taps);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
    const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
    const double den =
        (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

}  // namespace

ImageBuffer::ImageBuffer(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  check_dims(channels, height, width);
  require(std::isfinite(fill), ErrorCode::kNumeric, "non-finite fill value");
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

ImageBuffer::ImageBuffer(int channels, int height, int width, std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  check_dims(channels, height, width);
  require(data_.size() == static_cast<std::size_t>(channels) * height * width,
          ErrorCode::kShapeMismatch, "image data length does not match C*H*W");
  require(all_finite(), ErrorCode::kNumeric, "image data contains NaN or Inf");
}

bool ImageBuffer::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double mse(const ImageBuffer& a, const ImageBuffer& b) {
  check_same_shape(a, b, "mse");
  require(!a.empty(), ErrorCode::kInvalidArgument, "mse: empty image");
  double acc = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    acc += d * d;
  }
  return acc / static_cast<double>(da.size());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b, double peak) {
  require(peak > 0.0, ErrorCode::kInvalidArgument, "psnr: peak must be positive");
  const double err = mse(a, b);
  if (err == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / err));
}

double ssim(const ImageBuffer& a, const ImageBuffer& b, double peak) {
  check_same_shape(a, b, "ssim");
  require(a.height() >= kSsimWindow && a.width() >= kSsimWindow,
          ErrorCode::kInvalidArgument, "ssim: image smaller than the 11x11 window");
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c)
    total += ssim_plane(a.plane(c), b.plane(c), a.height(), a.width(), peak);
  return total / a.channels();
}

MetricReport compare(const ImageBuffer& a, const ImageBuffer& b, double peak) {
  MetricReport r;
  r.mse = mse(a, b);
  r.psnr = psnr(a, b, peak);
  r.ssim = ssim(a, b, peak);
  return r;
}

ImageBuffer median_filter(const ImageBuffer& img, int window) {
  require(window >= 3 && window % 2 == 1, ErrorCode::kInvalidArgument,
          "median_filter: window must be odd and >= 3");
  const int h = img.height();
  const int w = img.width();
  const int radius = window / 2;
  ImageBuffer out(img.channels(), h, w);
  std::vector<double> hood(static_cast<std::size_t>(window) * window);
  const auto mid = hood.begin() + static_cast<std::ptrdiff_t>(hood.size() / 2);
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        std::size_t n = 0;
        for (int dy = -radius; dy <= radius; ++dy) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -radius; dx <= radius; ++dx) {
            const int xx = std::clamp(x + dx, 0, w - 1);
            hood[n++] = img.at(c, yy, xx);
          }
        }
        std::nth_element(hood.begin(), mid, hood.end());
        out.at(c, y, x) = *mid;
      }
    }
  }
  return out;
}

ImageBuffer extract_patch(const ImageBuffer& img, int top, int left, int size) {
  require(size > 0, ErrorCode::kInvalidArgument, "extract_patch: size must be positive");
  require(top >= 0 && left >= 0 && top + size <= img.height() &&
              left + size <= img.width(),
          ErrorCode::kOutOfBounds,
          "extract_patch: patch (" + std::to_string(top) + "," + std::to_string(left) +
              ") size " + std::to_string(size) + " exceeds " +
              std::to_string(img.height()) + "x" + std::to_string(img.width()));
  ImageBuffer out(img.channels(), size, size);
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) out.at(c, y, x) = img.at(c, top + y, left + x);
  return out;
}

ImageBuffer to_luma(const ImageBuffer& img) {
  if (img.channels() == 1) return img;
  ImageBuffer out(1, img.height(), img.width());
  const auto r = img.plane(0);
  const auto g = img.plane(1);
  const auto b = img.plane(2);
  auto dst = out.plane(0);
  for (std::size_t i = 0; i < dst.size(); ++i)
    dst[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  return out;
}

ImageBuffer clamp01(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

double mean(std::span<const double> values) {
  require(!values.empty(), ErrorCode::kInvalidArgument, "mean of empty range");
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

double variance(std::span<const double> values) {
  const double mu = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - mu) * (v - mu);
  return acc / static_cast<double>(values.size());
}

}  // namespace nbd
