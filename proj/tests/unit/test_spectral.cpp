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

#include <gtest/gtest.h>

#include <cmath>

#include "nbd/error.hpp"
#include "nbd/spectral.hpp"
#include "oracles.hpp"

using namespace nbd;

namespace {

double max_abs(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<Complex> as_complex(std::span<const double> v) {
  return {v.begin(), v.end()};
}

}  // namespace

TEST(Fft2, DeltaAndConstant) {
  std::vector<double> delta(12, 0.0);
  delta[0] = 1.0;
  for (const Complex& z : fft2(delta, 3, 4).data) EXPECT_NEAR(std::abs(z - Complex(1.0)), 0.0, 1e-15);

  const std::vector<double> c(15, 0.4);
  const Spectrum s = fft2(c, 3, 5);
  EXPECT_NEAR(s.at(0, 0).real(), 0.4 * 15, 1e-12);
  for (std::size_t i = 1; i < s.data.size(); ++i) EXPECT_NEAR(std::abs(s.data[i]), 0.0, 1e-12);
}

TEST(Fft2, MatchesNaiveDft) {
  const auto x = oracle::lcg_uniform(16, 1);
  EXPECT_LT(max_abs(fft2(x, 4, 4).data, oracle::naive_dft(as_complex(x), 4, 4)), 1e-10);
  const auto y = oracle::lcg_uniform(35, 2);
  EXPECT_LT(max_abs(fft2(y, 5, 7).data, oracle::naive_dft(as_complex(y), 5, 7)), 1e-10);
}

TEST(Ifft2, RoundTripAndAllOnes) {
  const auto x = oracle::lcg_uniform(6 * 10, 3);
  const auto back = ifft2(fft2(x, 6, 10));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-9);

  Spectrum ones(4, 6, Complex(1.0));
  const auto d = ifft2(ones);
  EXPECT_NEAR(d[0], 1.0, 1e-15);
  for (std::size_t i = 1; i < d.size(); ++i) EXPECT_NEAR(d[i], 0.0, 1e-15);
}

TEST(Ifft2, HermitianSpectrumMatchesNaiveInverse) {
  const int h = 5, w = 6;
  const auto x = oracle::lcg_uniform(h * w, 4);
  const Spectrum s = fft2(x, h, w);
  const auto naive = oracle::naive_idft(s.data, h, w);
  const auto fast = ifft2(s);
  for (int i = 0; i < h * w; ++i) {
    EXPECT_NEAR(fast[i], naive[i].real(), 1e-10);
    EXPECT_NEAR(naive[i].imag(), 0.0, 1e-10);
  }
}

TEST(Ifft2, RejectsNonHermitianSpectrum) {
  Spectrum s(4, 4);
  s.at(0, 1) = Complex(0.0, 3.0);
  try {
    ifft2(s);
    FAIL() << "expected kNumeric";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
  const auto full = ifft2_complex(s);
  EXPECT_NEAR(full[0].imag(), 3.0 / 16.0, 1e-15);
}

TEST(PsfToOtf, DeltaKernels) {
  for (const Kernel& k : {Kernel(), Kernel::delta(3)})
    for (const Complex& z : psf_to_otf(k, 6, 5).data) EXPECT_NEAR(std::abs(z - Complex(1.0)), 0.0, 1e-15);
}

TEST(PsfToOtf, BoxKernelMatchesShiftedNaiveDft) {
  const Kernel box = Kernel::box(3);
  const Spectrum otf = psf_to_otf(box, 8, 8);
  EXPECT_NEAR(otf.at(0, 0).real(), 1.0, 1e-12);
  EXPECT_LT(max_abs(otf.data, oracle::naive_otf(box, 8, 8)), 1e-12);
}

TEST(PsfToOtf, RejectsKernelLargerThanGrid) {
  EXPECT_THROW(psf_to_otf(Kernel::box(5), 4, 8), Error);
}

TEST(CircularConvolve, DeltaConstantAndSpatialOracle) {
  const auto img = oracle::random_image(3, 7, 9, 5);
  const auto same = circular_convolve(img, Kernel::delta(3));
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(same.data()[i], img.data()[i], 1e-9);

  const ImageBuffer c(1, 8, 8, 0.37);
  const auto cc = circular_convolve(c, oracle::random_kernel(5, 3, 6));
  for (double v : cc.data()) EXPECT_NEAR(v, 0.37, 1e-12);

  const auto x = oracle::random_image(1, 8, 8, 7);
  const Kernel k = oracle::random_kernel(3, 3, 8);
  const auto fast = circular_convolve(x, k);
  const auto slow = oracle::spatial_circular_convolve(x.values(), 8, 8, k);
  for (std::size_t i = 0; i < slow.size(); ++i) EXPECT_NEAR(fast.data()[i], slow[i], 1e-12);
}

TEST(CircularConvolve, ShiftCommutes) {
  const auto x = oracle::random_image(1, 10, 12, 9);
  const Kernel k = oracle::random_kernel(5, 5, 10);
  ImageBuffer shifted(1, 10, 12);
  for (int y = 0; y < 10; ++y)
    for (int xx = 0; xx < 12; ++xx) shifted.at(0, (y + 3) % 10, (xx + 5) % 12) = x.at(0, y, xx);
  const auto a = circular_convolve(x, k);
  const auto b = circular_convolve(shifted, k);
  for (int y = 0; y < 10; ++y)
    for (int xx = 0; xx < 12; ++xx)
      EXPECT_NEAR(b.at(0, (y + 3) % 10, (xx + 5) % 12), a.at(0, y, xx), 1e-12);
}
