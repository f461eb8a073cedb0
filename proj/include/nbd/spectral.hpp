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

#include <complex>
#include <span>
#include <vector>

#include "nbd/image.hpp"
#include "nbd/kernel.hpp"

namespace nbd {

using Complex = std::complex<double>;

// H x W grid of DFT bins, row-major. Forward transforms are unnormalized,
// inverse transforms carry the 1/(H W) factor.
struct Spectrum {
  int height = 0;
  int width = 0;
  std::vector<Complex> data;

  Spectrum() = default;
  Spectrum(int h, int w, Complex fill = {0.0, 0.0})
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  Complex& at(int u, int v) noexcept { return data[static_cast<std::size_t>(u) * width + v]; }
  Complex at(int u, int v) const noexcept { return data[static_cast<std::size_t>(u) * width + v]; }
};

// Largest imaginary part ifft2 tolerates before declaring the spectrum
// non-Hermitian, relative to max(1, largest real magnitude).
inline constexpr double kMaxImaginaryResidue = 1e-6;

Spectrum fft2(std::span<const double> plane, int height, int width);
Spectrum fft2_complex(std::span<const Complex> plane, int height, int width);

// Real part of the inverse DFT. Throws kNumeric if the discarded imaginary
// residue exceeds kMaxImaginaryResidue.
std::vector<double> ifft2(const Spectrum& spec);
std::vector<Complex> ifft2_complex(const Spectrum& spec);

// Zero-pads k to H x W, circularly shifts its centre tap to (0, 0) and
// transforms. Multiplying by the result equals circular convolution with k.
Spectrum psf_to_otf(const Kernel& k, int height, int width);

// Per-channel circular convolution through the frequency domain.
ImageBuffer circular_convolve(const ImageBuffer& img, const Kernel& k);

}  // namespace nbd
