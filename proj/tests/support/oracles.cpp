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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nbd::oracle {

namespace {

int wrap(int i, int n) { return ((i % n) + n) % n; }

cd twiddle(double sign, int u, int y, int h, int v, int x, int w) {
  const double phase = sign * 2.0 * std::numbers::pi *
                       (static_cast<double>(u) * y / h + static_cast<double>(v) * x / w);
  return {std::cos(phase), std::sin(phase)};
}

}  // namespace

std::vector<cd> naive_dft(const std::vector<cd>& x, int h, int w) {
  std::vector<cd> out(x.size());
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      cd acc = 0.0;
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) acc += x[y * w + xx] * twiddle(-1.0, u, y, h, v, xx, w);
      out[u * w + v] = acc;
    }
  return out;
}

std::vector<cd> naive_idft(const std::vector<cd>& X, int h, int w) {
  std::vector<cd> out(X.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      cd acc = 0.0;
      for (int u = 0; u < h; ++u)
        for (int v = 0; v < w; ++v) acc += X[u * w + v] * twiddle(1.0, u, y, h, v, x, w);
      out[y * w + x] = acc / static_cast<double>(h * w);
    }
  return out;
}

std::vector<cd> naive_otf(const Kernel& k, int h, int w) {
  std::vector<cd> out(static_cast<std::size_t>(h) * w);
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      cd acc = 0.0;
      for (int i = 0; i < k.height(); ++i)
        for (int j = 0; j < k.width(); ++j)
          acc += k.at(i, j) * twiddle(-1.0, u, i - k.radius_y(), h, v, j - k.radius_x(), w);
      out[u * w + v] = acc;
    }
  return out;
}

std::vector<double> spatial_circular_convolve(const std::vector<double>& img, int h, int w,
                                              const Kernel& k) {
  std::vector<double> out(img.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k.height(); ++i)
        for (int j = 0; j < k.width(); ++j)
          acc += k.at(i, j) *
                 img[wrap(y - (i - k.radius_y()), h) * w + wrap(x - (j - k.radius_x()), w)];
      out[y * w + x] = acc;
    }
  return out;
}

double scalar_mse(const ImageBuffer& a, const ImageBuffer& b) {
  double acc = 0.0;
  for (int c = 0; c < a.channels(); ++c)
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        const double d = a.at(c, y, x) - b.at(c, y, x);
        acc += d * d;
      }
  return acc / static_cast<double>(a.channels() * a.height() * a.width());
}

double scalar_psnr(const ImageBuffer& a, const ImageBuffer& b, double peak) {
  const double m = scalar_mse(a, b);
  if (m == 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(peak * peak / m));
}

double scalar_ssim(const ImageBuffer& a, const ImageBuffer& b, double peak) {
  constexpr int n = 11;
  constexpr int r = n / 2;
  double g[n][n];
  double gsum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      g[i][j] = std::exp(-((i - r) * (i - r) + (j - r) * (j - r)) / (2.0 * 1.5 * 1.5));
      gsum += g[i][j];
    }
  for (auto& row : g)
    for (double& v : row) v /= gsum;
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    double acc = 0.0;
    int windows = 0;
    for (int y = 0; y + n <= a.height(); ++y)
      for (int x = 0; x + n <= a.width(); ++x) {
        double ma = 0, mb = 0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            ma += g[i][j] * a.at(c, y + i, x + j);
            mb += g[i][j] * b.at(c, y + i, x + j);
          }
        double va = 0, vb = 0, cov = 0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const double da = a.at(c, y + i, x + j) - ma;
            const double db = b.at(c, y + i, x + j) - mb;
            va += g[i][j] * da * da;
            vb += g[i][j] * db * db;
            cov += g[i][j] * da * db;
          }
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++windows;
      }
    total += acc / windows;
  }
  return total / a.channels();
}

ImageBuffer sorted_median(const ImageBuffer& img, int window) {
  ImageBuffer out(img.channels(), img.height(), img.width());
  const int r = window / 2;
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        std::vector<double> v;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx)
            v.push_back(img.at(c, std::clamp(y + dy, 0, img.height() - 1),
                               std::clamp(x + dx, 0, img.width() - 1)));
        std::sort(v.begin(), v.end());
        out.at(c, y, x) = v[v.size() / 2];
      }
  return out;
}

std::vector<double> lcg_uniform(std::size_t n, std::uint64_t seed) {
  std::vector<double> out(n);
  std::uint64_t s = seed * 2862933555777941757ULL + 3037000493ULL;
  for (double& v : out) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    v = static_cast<double>(s >> 11) / 9007199254740992.0;
  }
  return out;
}

ImageBuffer random_image(int c, int h, int w, std::uint64_t seed) {
  return ImageBuffer(c, h, w, lcg_uniform(static_cast<std::size_t>(c) * h * w, seed));
}

Kernel random_kernel(int h, int w, std::uint64_t seed) {
  auto v = lcg_uniform(static_cast<std::size_t>(h) * w, seed);
  for (double& x : v) x += 0.05;
  return Kernel::normalized(h, w, std::move(v));
}

}  // namespace nbd::oracle
