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
#include <span>
#include <vector>

namespace nbd {

// C x H x W raster of doubles, row-major within each channel plane. Nominal
// intensity range is [0, 1] but nothing here clamps; clamp01 does that
// explicitly. Channel count is 1 (gray) or 3 (RGB).
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int channels, int height, int width, double fill = 0.0);
  ImageBuffer(int channels, int height, int width, std::vector<double> data);

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool same_shape(const ImageBuffer& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }

  double& at(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }

  std::span<double> plane(int c) noexcept {
    return {data_.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }
  std::span<const double> plane(int c) const noexcept {
    return {data_.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int c, int y, int x) const noexcept {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height_) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

inline constexpr double kPsnrCap = 99.0;

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double mse = 0.0;
};

double mse(const ImageBuffer& a, const ImageBuffer& b);

// 10 log10(peak^2 / mse), saturating at kPsnrCap. mse == 0 reports the cap.
double psnr(const ImageBuffer& a, const ImageBuffer& b, double peak = 1.0);

// Mean local SSIM over all fully-contained 11x11 Gaussian (sigma 1.5)
// windows, C1 = (0.01 peak)^2, C2 = (0.03 peak)^2. Multichannel inputs
// report the mean of the per-channel scores.
double ssim(const ImageBuffer& a, const ImageBuffer& b, double peak = 1.0);

MetricReport compare(const ImageBuffer& a, const ImageBuffer& b, double peak = 1.0);

// Per-channel median over a window x window neighbourhood, replicate borders.
ImageBuffer median_filter(const ImageBuffer& img, int window);

ImageBuffer extract_patch(const ImageBuffer& img, int top, int left, int size);

// Rec.601 luma for RGB; gray input is returned unchanged.
ImageBuffer to_luma(const ImageBuffer& img);

ImageBuffer clamp01(const ImageBuffer& img);

double mean(std::span<const double> values);
// Population variance.
double variance(std::span<const double> values);

}  // namespace nbd
