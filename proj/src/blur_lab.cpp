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

#include "nbd/blur_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "nbd/error.hpp"
#include "nbd/rng.hpp"
#include "nbd/spectral.hpp"

namespace nbd {

NoiseLevel::NoiseLevel(double s8) : sigma8(s8) {
  require(s8 >= 0.0 && std::isfinite(s8), ErrorCode::kInvalidArgument,
          "sigma8 must be finite and non-negative");
}

void SynthKernelSpec::validate() const {
  require(size_min >= 3 && size_min <= size_max && size_max <= 63 && size_min % 2 == 1 &&
              size_max % 2 == 1,
          ErrorCode::kInvalidArgument,
          "kernel size range must satisfy 3 <= min <= max <= 63, both odd (got " +
              std::to_string(size_min) + ".." + std::to_string(size_max) + ")");
  require(trajectory_steps >= 1, ErrorCode::kInvalidArgument,
          "trajectory_steps must be at least 1");
  require(smoothing_sigma >= 0.0 && std::isfinite(smoothing_sigma),
          ErrorCode::kInvalidArgument, "smoothing_sigma must be non-negative");
}

namespace {

struct Sample {
  double x;
  double y;
  double mass;
};

std::vector<Sample> trajectory_samples(const SynthKernelSpec& spec, Rng& rng) {
  const int steps = spec.trajectory_steps;
  std::vector<double> px(steps, 0.0);
  std::vector<double> py(steps, 0.0);
  const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
  double vx = std::cos(heading);
  double vy = std::sin(heading);
  constexpr double kInertia = 0.8;
  constexpr double kJitter = 0.35;
  for (int t = 1; t < steps; ++t) {
    vx = kInertia * vx + kJitter * rng.normal();
    vy = kInertia * vy + kJitter * rng.normal();
    px[t] = px[t - 1] + vx;
    py[t] = py[t - 1] + vy;
  }

  std::vector<Sample> samples;
  if (steps == 1) {
    samples.push_back({0.0, 0.0, 1.0});
    return samples;
  }
  // Equal exposure time per segment; each segment is subdivided finely
  // enough that the bilinear splat traces a continuous stroke.
  const double segment_mass = 1.0 / (steps - 1);
  for (int t = 1; t < steps; ++t) {
    const double dx = px[t] - px[t - 1];
    const double dy = py[t] - py[t - 1];
    const int sub = std::max(1, static_cast<int>(std::ceil(std::hypot(dx, dy) * 8.0)));
    for (int s = 0; s < sub; ++s) {
      const double f = (s + 0.5) / sub;
      samples.push_back({px[t - 1] + f * dx, py[t - 1] + f * dy, segment_mass / sub});
    }
  }
  return samples;
}

std::vector<double> gaussian_smooth(const std::vector<double>& grid, int size, double sigma) {
  if (sigma <= 0.0) return grid;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  std::vector<double> tmp(grid.size(), 0.0);
  std::vector<double> out(grid.size(), 0.0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int xx = x + i;
        if (xx >= 0 && xx < size) acc += taps[i + radius] * grid[y * size + xx];
      }
      tmp[y * size + x] = acc;
    }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int yy = y + i;
        if (yy >= 0 && yy < size) acc += taps[i + radius] * tmp[yy * size + x];
      }
      out[y * size + x] = acc;
    }
  return out;
}

double smoothstep_edge(double signed_distance) {
  // signed_distance > 0 inside; one-pixel soft edge.
  const double t = std::clamp(signed_distance + 0.5, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

Kernel synth_kernel(const SynthKernelSpec& spec) {
  spec.validate();
  Rng rng(spec.rng_seed);
  const int odd_choices = (spec.size_max - spec.size_min) / 2 + 1;
  const int size = spec.size_min + 2 * static_cast<int>(rng.below(odd_choices));
  const double centre = size / 2;

  std::vector<Sample> samples = trajectory_samples(spec, rng);
  double cx = 0.0;
  double cy = 0.0;
  for (const Sample& s : samples) {
    cx += s.mass * s.x;
    cy += s.mass * s.y;
  }
  double extent = 0.0;
  for (Sample& s : samples) {
    s.x -= cx;
    s.y -= cy;
    extent = std::max({extent, std::abs(s.x), std::abs(s.y)});
  }
  const double room =
      std::max(0.0, (size - 1) / 2.0 - 1.0 - std::ceil(spec.smoothing_sigma));
  const double fill = rng.uniform(0.5, 1.0);
  const double scale = extent > 0.0 ? fill * room / extent : 0.0;

  std::vector<double> grid(static_cast<std::size_t>(size) * size, 0.0);
  for (const Sample& s : samples) {
    const double gx = centre + scale * s.x;
    const double gy = centre + scale * s.y;
    const int x0 = static_cast<int>(std::floor(gx));
    const int y0 = static_cast<int>(std::floor(gy));
    const double fx = gx - x0;
    const double fy = gy - y0;
    const auto splat = [&](int yy, int xx, double w) {
      if (w == 0.0) return;
      if (xx >= 0 && xx < size && yy >= 0 && yy < size)
        grid[static_cast<std::size_t>(yy) * size + xx] += w * s.mass;
    };
    splat(y0, x0, (1.0 - fx) * (1.0 - fy));
    splat(y0, x0 + 1, fx * (1.0 - fy));
    splat(y0 + 1, x0, (1.0 - fx) * fy);
    splat(y0 + 1, x0 + 1, fx * fy);
  }
  return Kernel::normalized(size, size, gaussian_smooth(grid, size, spec.smoothing_sigma));
}

ImageBuffer blur_and_noise(const ImageBuffer& x, const Kernel& k, const NoiseLevel& nl,
                           std::uint64_t seed) {
  ImageBuffer y = circular_convolve(x, k);
  const double sigma = nl.sigma01();
  if (sigma > 0.0) {
    Rng rng(seed);
    for (double& v : y.data()) v += sigma * rng.normal();
  }
  return y;
}

PairSeeds derive_pair_seeds(std::uint64_t seed) {
  std::uint64_t out[4];
  std::uint64_t tag = 1;
  for (int i = 0; i < 4; ++i) {
    for (;;) {
      const std::uint64_t candidate = mix_seed(seed, tag++);
      if (std::find(out, out + i, candidate) == out + i) {
        out[i] = candidate;
        break;
      }
    }
  }
  return {out[0], out[1], out[2], out[3]};
}

TrainingPair make_training_pair(const ImageBuffer& x, const Kernel& k1, const Kernel& k2,
                                const NoiseLevel& nl, const WienerConfig& cfg,
                                std::uint64_t noise_seed1, std::uint64_t noise_seed2) {
  require(noise_seed1 != noise_seed2, ErrorCode::kInvalidArgument,
          "training pair noise seeds must differ");
  WienerConfig resolved = cfg;
  if (resolved.nsr_mode == NsrMode::kKnownSigma) resolved.sigma = nl.sigma01();
  const ImageBuffer y1 = blur_and_noise(x, k1, nl, noise_seed1);
  const ImageBuffer y2 = blur_and_noise(x, k2, nl, noise_seed2);
  TrainingPair pair;
  pair.input = wiener_deconvolve(y1, k1, resolved);
  pair.target = wiener_deconvolve(y2, k2, resolved);
  pair.provenance.sigma8 = nl.sigma8;
  pair.provenance.seeds.noise1 = noise_seed1;
  pair.provenance.seeds.noise2 = noise_seed2;
  return pair;
}

TrainingPair make_training_pair(const ImageBuffer& x, const PairSeeds& seeds,
                                const NoiseLevel& nl, const SynthKernelSpec& kernel_spec,
                                const WienerConfig& cfg) {
  require(seeds.kernel1 != seeds.kernel2, ErrorCode::kInvalidArgument,
          "training pair kernel seeds must differ");
  SynthKernelSpec s1 = kernel_spec;
  SynthKernelSpec s2 = kernel_spec;
  s1.rng_seed = seeds.kernel1;
  s2.rng_seed = seeds.kernel2;
  TrainingPair pair = make_training_pair(x, synth_kernel(s1), synth_kernel(s2), nl, cfg,
                                         seeds.noise1, seeds.noise2);
  pair.provenance.seeds = seeds;
  return pair;
}

TrainingPair make_training_pair(const ImageBuffer& x, const NoiseLevel& nl,
                                const WienerConfig& cfg, std::uint64_t seed,
                                const SynthKernelSpec& kernel_spec) {
  return make_training_pair(x, derive_pair_seeds(seed), nl, kernel_spec, cfg);
}

ImageBuffer synth_scene(int channels, int height, int width, std::uint64_t seed) {
  Rng rng(seed);
  ImageBuffer img(channels, height, width);
  const double scale = std::min(height, width);

  std::vector<double> base(channels), gx(channels), gy(channels);
  for (int c = 0; c < channels; ++c) {
    base[c] = rng.uniform(0.2, 0.8);
    gx[c] = rng.uniform(-0.3, 0.3);
    gy[c] = rng.uniform(-0.3, 0.3);
  }
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        img.at(c, y, x) = base[c] + gx[c] * (x / static_cast<double>(width) - 0.5) +
                          gy[c] * (y / static_cast<double>(height) - 0.5);

  const int shapes = 6 + static_cast<int>(rng.below(6));
  std::vector<double> colour(channels);
  for (int s = 0; s < shapes; ++s) {
    const bool ellipse = rng.uniform() < 0.5;
    const double cx = rng.uniform(0.0, width);
    const double cy = rng.uniform(0.0, height);
    const double rx = rng.uniform(0.05, 0.3) * scale;
    const double ry = rng.uniform(0.05, 0.3) * scale;
    const double theta = rng.uniform(0.0, std::numbers::pi);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    for (double& v : colour) v = rng.uniform(0.0, 1.0);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double u = ct * (x - cx) + st * (y - cy);
        const double v = -st * (x - cx) + ct * (y - cy);
        double inside;
        if (ellipse) {
          const double rho = std::hypot(u / rx, v / ry);
          inside = (1.0 - rho) * std::min(rx, ry);
        } else {
          inside = std::min(rx - std::abs(u), ry - std::abs(v));
        }
        const double a = smoothstep_edge(inside);
        if (a == 0.0) continue;
        for (int c = 0; c < channels; ++c)
          img.at(c, y, x) = (1.0 - a) * img.at(c, y, x) + a * colour[c];
      }
  }

  const int textures = 1 + static_cast<int>(rng.below(3));
  for (int t = 0; t < textures; ++t) {
    const double cx = rng.uniform(0.0, width);
    const double cy = rng.uniform(0.0, height);
    const double radius = rng.uniform(0.1, 0.3) * scale;
    const double freq = rng.uniform(0.3, 1.2);
    const double theta = rng.uniform(0.0, std::numbers::pi);
    const double amp = rng.uniform(0.05, 0.2);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double a = smoothstep_edge(radius - std::hypot(x - cx, y - cy));
        if (a == 0.0) continue;
        const double wave =
            amp * std::sin(freq * (std::cos(theta) * x + std::sin(theta) * y));
        for (int c = 0; c < channels; ++c) img.at(c, y, x) += a * wave;
      }
  }
  return clamp01(img);
}

}  // namespace nbd
