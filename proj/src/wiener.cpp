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

#include "nbd/wiener.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "nbd/error.hpp"
#include "nbd/rng.hpp"
#include "nbd/spectral.hpp"

namespace nbd {

namespace {

// Variance at or below this counts as a flat image.
constexpr double kFlatVariance = 1e-24;

}  // namespace

WienerConfig WienerConfig::known_sigma(double sigma01) {
  require(sigma01 >= 0.0, ErrorCode::kInvalidArgument, "sigma must be non-negative");
  WienerConfig cfg;
  cfg.nsr_mode = NsrMode::kKnownSigma;
  cfg.sigma = sigma01;
  return cfg;
}

WienerConfig WienerConfig::estimated(int window) {
  WienerConfig cfg;
  cfg.nsr_mode = NsrMode::kEstimated;
  cfg.window = window;
  return cfg;
}

WienerConfig WienerConfig::fixed(double r) {
  require(r >= 0.0, ErrorCode::kInvalidArgument, "nsr must be non-negative");
  WienerConfig cfg;
  cfg.nsr_mode = NsrMode::kFixed;
  cfg.nsr = r;
  return cfg;
}

NsrEstimate estimate_nsr(const ImageBuffer& y, int window, double nsr_floor) {
  require(!y.empty(), ErrorCode::kInvalidArgument, "estimate_nsr: empty image");
  require(nsr_floor > 0.0, ErrorCode::kInvalidArgument, "nsr_floor must be positive");
  const double signal = variance(y.data());
  if (signal <= kFlatVariance) return {nsr_floor, true};
  const ImageBuffer smooth = median_filter(y, window);
  std::vector<double> residual(y.size());
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = y.data()[i] - smooth.data()[i];
  return {std::max(nsr_floor, variance(residual) / signal), false};
}

double resolve_nsr(const ImageBuffer& y, const WienerConfig& cfg) {
  require(cfg.nsr_floor > 0.0, ErrorCode::kInvalidArgument, "nsr_floor must be positive");
  switch (cfg.nsr_mode) {
    case NsrMode::kKnownSigma: {
      require(cfg.sigma >= 0.0, ErrorCode::kInvalidArgument, "sigma must be non-negative");
      const double signal = variance(y.data());
      if (signal <= kFlatVariance) return cfg.nsr_floor;
      return cfg.sigma * cfg.sigma / signal;
    }
    case NsrMode::kEstimated:
      return estimate_nsr(y, cfg.window, cfg.nsr_floor).value;
    case NsrMode::kFixed:
      require(cfg.nsr >= 0.0, ErrorCode::kInvalidArgument, "nsr must be non-negative");
      return cfg.nsr;
  }
  fail(ErrorCode::kInvalidArgument, "unknown nsr mode");
}

ImageBuffer wiener_deconvolve(const ImageBuffer& y, const Kernel& k, double nsr,
                              double nsr_floor) {
  require(nsr >= 0.0 && std::isfinite(nsr), ErrorCode::kInvalidArgument,
          "wiener: nsr must be finite and non-negative");
  require(nsr_floor > 0.0, ErrorCode::kInvalidArgument, "wiener: nsr_floor must be positive");
  const int h = y.height();
  const int w = y.width();
  const Spectrum otf = psf_to_otf(k, h, w);
  std::vector<Complex> gain(otf.data.size());
  for (std::size_t i = 0; i < gain.size(); ++i) {
    const double denom = std::max(std::norm(otf.data[i]) + nsr, nsr_floor);
    gain[i] = std::conj(otf.data[i]) / denom;
  }
  ImageBuffer out(y.channels(), h, w);
  for (int c = 0; c < y.channels(); ++c) {
    Spectrum s = fft2(y.plane(c), h, w);
    for (std::size_t i = 0; i < s.data.size(); ++i) s.data[i] *= gain[i];
    const auto plane = ifft2(s);
    std::copy(plane.begin(), plane.end(), out.plane(c).begin());
  }
  require(out.all_finite(), ErrorCode::kNumeric, "wiener: non-finite output");
  return out;
}

ImageBuffer wiener_deconvolve(const ImageBuffer& y, const Kernel& k, const WienerConfig& cfg) {
  const double r = resolve_nsr(y, cfg);
  if (cfg.edge_taper) return wiener_deconvolve(edge_taper(y, k), k, r, cfg.nsr_floor);
  return wiener_deconvolve(y, k, r, cfg.nsr_floor);
}

ImageBuffer colored_noise(const ImageBuffer& noise, const Kernel& k, double nsr,
                          double nsr_floor) {
  return wiener_deconvolve(noise, k, nsr, nsr_floor);
}

namespace {

ImageBuffer white_noise(int height, int width, double sigma, std::uint64_t seed) {
  ImageBuffer n(1, height, width);
  if (sigma == 0.0) return n;
  Rng rng(seed);
  for (double& v : n.data()) v = sigma * rng.normal();
  return n;
}

std::vector<double> taper_weights(int n, int band) {
  std::vector<double> w(n, 1.0);
  if (band <= 1) return w;
  for (int i = 0; i < n; ++i) {
    const int d = std::min(i, n - 1 - i);
    if (d < band) w[i] = 0.5 - 0.5 * std::cos(std::numbers::pi * d / band);
  }
  return w;
}

}  // namespace

ImageBuffer colored_noise_sample(const Kernel& k, int height, int width, double sigma,
                                 double nsr, std::uint64_t seed) {
  require(sigma >= 0.0, ErrorCode::kInvalidArgument, "sigma must be non-negative");
  const ImageBuffer n = white_noise(height, width, sigma, seed);
  if (sigma == 0.0) {
    // Still validate the kernel/grid pairing, but the residue is exactly zero.
    require(k.height() <= height && k.width() <= width, ErrorCode::kShapeMismatch,
            "colored_noise_sample: kernel exceeds grid");
    return n;
  }
  return colored_noise(n, k, nsr);
}

ImageBuffer edge_taper(const ImageBuffer& y, const Kernel& k) {
  require(k.height() <= y.height() && k.width() <= y.width(), ErrorCode::kShapeMismatch,
          "edge_taper: kernel exceeds image");
  const auto wy = taper_weights(y.height(), k.height());
  const auto wx = taper_weights(y.width(), k.width());
  const ImageBuffer blurred = circular_convolve(y, k);
  ImageBuffer out = y;
  for (int c = 0; c < y.channels(); ++c)
    for (int r = 0; r < y.height(); ++r)
      for (int col = 0; col < y.width(); ++col) {
        const double w = wy[r] * wx[col];
        if (w == 1.0) continue;
        out.at(c, r, col) = w * y.at(c, r, col) + (1.0 - w) * blurred.at(c, r, col);
      }
  return out;
}

NoiseStats colored_noise_stats(const Kernel& k, int height, int width, double sigma,
                               double nsr, int trials, std::uint64_t seed) {
  require(trials >= 2, ErrorCode::kInvalidArgument, "noise stats need at least 2 trials");
  NoiseStats st;
  st.trials = trials;
  std::vector<double> means(trials);
  double pooled_sq = 0.0;
  double lag_num = 0.0;
  double lag_den = 0.0;
  for (int t = 0; t < trials; ++t) {
    const ImageBuffer nc = colored_noise_sample(k, height, width, sigma, nsr,
                                                mix_seed(seed, static_cast<std::uint64_t>(t)));
    const auto v = nc.data();
    means[t] = mean(v);
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        const double a = nc.at(0, r, c);
        pooled_sq += a * a;
        lag_num += a * nc.at(0, r, (c + 1) % width);
        lag_den += a * a;
      }
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= trials;
  double spread = 0.0;
  for (double m : means) spread += (m - grand) * (m - grand);
  const double std_of_means = std::sqrt(spread / (trials - 1));

  st.grand_mean = grand;
  st.standard_error = std_of_means / std::sqrt(static_cast<double>(trials));
  // The spatial mean of n_c is the DC bin of the filter output: the kernel's
  // DC gain is 1, so mean(n_c) = mean(n) / (1 + r).
  const double dc_gain = 1.0 / std::max(1.0 + nsr, kDefaultNsrFloor);
  st.expected_standard_error =
      dc_gain * sigma / std::sqrt(static_cast<double>(height) * width * trials);
  st.pixel_std = std::sqrt(pooled_sq / (static_cast<double>(trials) * height * width));
  st.lag1_correlation = lag_den > 0.0 ? lag_num / lag_den : 0.0;
  return st;
}

}  // namespace nbd
