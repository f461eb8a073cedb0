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

#include <cstdint>

#include "nbd/image.hpp"
#include "nbd/kernel.hpp"

namespace nbd {

inline constexpr double kDefaultNsrFloor = 1e-10;
inline constexpr int kDefaultNsrWindow = 3;

enum class NsrMode {
  kKnownSigma,  // r = sigma^2 / var(y)
  kEstimated,   // r from the median-filter residual
  kFixed,       // r given directly
};

struct WienerConfig {
  NsrMode nsr_mode = NsrMode::kKnownSigma;
  double sigma = 0.0;  // noise std on the [0, 1] scale, kKnownSigma only
  int window = kDefaultNsrWindow;  // kEstimated only
  double nsr = 0.0;  // kFixed only
  double nsr_floor = kDefaultNsrFloor;
  bool edge_taper = false;

  static WienerConfig known_sigma(double sigma01);
  static WienerConfig estimated(int window = kDefaultNsrWindow);
  static WienerConfig fixed(double r);
};

struct NsrEstimate {
  double value = 0.0;
  bool degenerate = false;  // flat y; value is the floor
};

// var(y - median(y)) / var(y), floored at nsr_floor.
NsrEstimate estimate_nsr(const ImageBuffer& y, int window = kDefaultNsrWindow,
                         double nsr_floor = kDefaultNsrFloor);

// The scalar NSR a config resolves to for observation y.
double resolve_nsr(const ImageBuffer& y, const WienerConfig& cfg);

// x = F^-1( conj(K) F(y) / (|K|^2 + r) ) per channel, with the denominator
// held at or above nsr_floor. Output is not clamped.
ImageBuffer wiener_deconvolve(const ImageBuffer& y, const Kernel& k, double nsr,
                              double nsr_floor = kDefaultNsrFloor);

// Resolves r from cfg and applies the edge taper first when requested.
ImageBuffer wiener_deconvolve(const ImageBuffer& y, const Kernel& k, const WienerConfig& cfg);

// The residue the filter leaves from a given noise field n.
ImageBuffer colored_noise(const ImageBuffer& noise, const Kernel& k, double nsr,
                          double nsr_floor = kDefaultNsrFloor);

// Draws white Gaussian noise (std sigma, [0, 1] scale) on an H x W grid and
// returns its filtered residue.
ImageBuffer colored_noise_sample(const Kernel& k, int height, int width, double sigma,
                                 double nsr, std::uint64_t seed);

// Blends y toward circular_convolve(y, k) inside a raised-cosine border band
// as wide as the kernel along each axis. Pixels at least one kernel size
// from every border are copied unchanged; a 1x1 kernel is a no-op.
ImageBuffer edge_taper(const ImageBuffer& y, const Kernel& k);

struct NoiseStats {
  int trials = 0;
  double grand_mean = 0.0;        // mean over trials of the spatial mean of n_c
  double standard_error = 0.0;    // Monte-Carlo std of those means / sqrt(trials)
  double expected_standard_error = 0.0;  // from the filter's DC gain
  double pixel_std = 0.0;         // pooled per-pixel std of n_c
  double lag1_correlation = 0.0;  // mean horizontal neighbour correlation
};

NoiseStats colored_noise_stats(const Kernel& k, int height, int width, double sigma,
                               double nsr, int trials, std::uint64_t seed);

}  // namespace nbd
