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

#include "nbd/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "nbd/error.hpp"

namespace nbd {

namespace {

// FFTW's planner is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per (H, W, direction) and never freed.
class PlanCache {
 public:
  fftw_plan get(int h, int w, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(h, w, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<Complex> scratch_in(static_cast<std::size_t>(h) * w);
    std::vector<Complex> scratch_out(scratch_in.size());
    fftw_plan plan = fftw_plan_dft_2d(h, w, as_fftw(scratch_in.data()),
                                      as_fftw(scratch_out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) fail(ErrorCode::kNumeric, "fftw planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  static fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

std::vector<Complex> transform(std::span<const Complex> in, int h, int w, int sign) {
  require(h >= 1 && w >= 1, ErrorCode::kInvalidArgument, "fft: dims must be positive");
  require(in.size() == static_cast<std::size_t>(h) * w, ErrorCode::kShapeMismatch,
          "fft: sample count does not match H*W");
  fftw_plan plan = plan_cache().get(h, w, sign);
  std::vector<Complex> src(in.begin(), in.end());
  std::vector<Complex> dst(src.size());
  fftw_execute_dft(plan, PlanCache::as_fftw(src.data()), PlanCache::as_fftw(dst.data()));
  return dst;
}

}  // namespace

Spectrum fft2_complex(std::span<const Complex> plane, int height, int width) {
  Spectrum s;
  s.height = height;
  s.width = width;
  s.data = transform(plane, height, width, FFTW_FORWARD);
  return s;
}

Spectrum fft2(std::span<const double> plane, int height, int width) {
  std::vector<Complex> c(plane.begin(), plane.end());
  return fft2_complex(c, height, width);
}

std::vector<Complex> ifft2_complex(const Spectrum& spec) {
  auto out = transform(spec.data, spec.height, spec.width, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(out.size());
  for (Complex& v : out) v *= scale;
  return out;
}

std::vector<double> ifft2(const Spectrum& spec) {
  const auto full = ifft2_complex(spec);
  std::vector<double> out(full.size());
  double max_real = 1.0;
  double max_imag = 0.0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    out[i] = full[i].real();
    max_real = std::max(max_real, std::abs(full[i].real()));
    max_imag = std::max(max_imag, std::abs(full[i].imag()));
  }
  if (max_imag > kMaxImaginaryResidue * max_real)
    fail(ErrorCode::kNumeric, "ifft2: imaginary residue " + std::to_string(max_imag) +
                              " indicates a non-Hermitian spectrum");
  return out;
}

Spectrum psf_to_otf(const Kernel& k, int height, int width) {
  require(k.height() <= height && k.width() <= width, ErrorCode::kShapeMismatch,
          "psf_to_otf: kernel " + std::to_string(k.height()) + "x" +
              std::to_string(k.width()) + " exceeds grid " + std::to_string(height) + "x" +
              std::to_string(width));
  std::vector<Complex> padded(static_cast<std::size_t>(height) * width);
  const int cy = k.radius_y();
  const int cx = k.radius_x();
  for (int y = 0; y < k.height(); ++y) {
    const int py = ((y - cy) % height + height) % height;
    for (int x = 0; x < k.width(); ++x) {
      const int px = ((x - cx) % width + width) % width;
      padded[static_cast<std::size_t>(py) * width + px] += k.at(y, x);
    }
  }
  return fft2_complex(padded, height, width);
}

ImageBuffer circular_convolve(const ImageBuffer& img, const Kernel& k) {
  const Spectrum otf = psf_to_otf(k, img.height(), img.width());
  ImageBuffer out(img.channels(), img.height(), img.width());
  for (int c = 0; c < img.channels(); ++c) {
    Spectrum s = fft2(img.plane(c), img.height(), img.width());
    for (std::size_t i = 0; i < s.data.size(); ++i) s.data[i] *= otf.data[i];
    const auto plane = ifft2(s);
    std::copy(plane.begin(), plane.end(), out.plane(c).begin());
  }
  return out;
}

}  // namespace nbd
