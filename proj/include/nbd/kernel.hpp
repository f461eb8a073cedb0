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

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace nbd {

// Odd-sized, non-negative point spread function whose weights sum to 1.
class Kernel {
 public:
  // Identity (1x1 impulse).
  Kernel();

  // Strict: rejects even dims, negative or non-finite weights, and sums that
  // are not 1 within 1e-9.
  Kernel(int height, int width, std::vector<double> weights);

  // Scales weights to sum 1. Rejects even dims, negative weights, zero sum.
  static Kernel normalized(int height, int width, std::vector<double> weights);

  static Kernel delta(int size = 1);
  static Kernel box(int size);
  // Isotropic Gaussian, size x size, normalized.
  static Kernel gaussian(int size, double sigma);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int radius_y() const noexcept { return height_ / 2; }
  int radius_x() const noexcept { return width_ / 2; }
  double at(int y, int x) const noexcept { return weights_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const double> weights() const noexcept { return weights_; }

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  int height_;
  int width_;
  std::vector<double> weights_;
};

// Text format: first line "H W", then H lines of W whitespace-separated
// weights. Sums within 1e-3 of 1 are renormalized, others rejected.
Kernel parse_kernel(std::istream& in);
Kernel read_kernel(const std::filesystem::path& path);
void write_kernel(std::ostream& out, const Kernel& k);
void write_kernel(const Kernel& k, const std::filesystem::path& path);

}  // namespace nbd
