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

// Slow, direct reference implementations used as test oracles. None of them
// call into the library code they check.

#include <complex>
#include <cstdint>
#include <vector>

#include "nbd/image.hpp"
#include "nbd/kernel.hpp"

namespace nbd::oracle {

using cd = std::complex<double>;

// O(N^2) forward DFT of an H x W complex grid, unnormalized.
std::vector<cd> naive_dft(const std::vector<cd>& x, int h, int w);
// O(N^2) inverse DFT with the 1/(H W) factor.
std::vector<cd> naive_idft(const std::vector<cd>& X, int h, int w);
// DFT of k embedded on H x W with its centre tap at the origin, by direct
// summation over taps.
std::vector<cd> naive_otf(const Kernel& k, int h, int w);
// Spatial-domain circular convolution of one plane.
std::vector<double> spatial_circular_convolve(const std::vector<double>& img, int h, int w,
                                              const Kernel& k);

double scalar_mse(const ImageBuffer& a, const ImageBuffer& b);
double scalar_psnr(const ImageBuffer& a, const ImageBuffer& b, double peak = 1.0);
// Window-by-window SSIM with a non-separable 11x11 Gaussian (sigma 1.5).
double scalar_ssim(const ImageBuffer& a, const ImageBuffer& b, double peak = 1.0);
// Sort-based median, replicate borders.
ImageBuffer sorted_median(const ImageBuffer& img, int window);

// Uniform [0, 1) samples from an LCG unrelated to the library generator.
std::vector<double> lcg_uniform(std::size_t n, std::uint64_t seed);
ImageBuffer random_image(int c, int h, int w, std::uint64_t seed);
// Positive random weights, normalized.
Kernel random_kernel(int h, int w, std::uint64_t seed);

}  // namespace nbd::oracle
