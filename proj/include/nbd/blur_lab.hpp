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
#include <string>

#include "nbd/image.hpp"
#include "nbd/kernel.hpp"
#include "nbd/wiener.hpp"

namespace nbd {

// Noise std on the 0-255 scale; the pipeline works in [0, 1] units.
struct NoiseLevel {
  double sigma8 = 0.0;

  NoiseLevel() = default;
  explicit NoiseLevel(double s8);
  double sigma01() const noexcept { return sigma8 / 255.0; }
};

struct SynthKernelSpec {
  int size_min = 11;
  int size_max = 35;
  int trajectory_steps = 64;
  double smoothing_sigma = 0.7;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Random inertial camera trajectory, splatted bilinearly on an S x S grid
// (S odd, uniform over [size_min, size_max]), Gaussian-smoothed and
// normalized. The path is centred so its centre of mass sits on the centre
// tap.
Kernel synth_kernel(const SynthKernelSpec& spec);

// circular_convolve(x, k) + N(0, sigma01^2) per sample. Unclamped.
ImageBuffer blur_and_noise(const ImageBuffer& x, const Kernel& k, const NoiseLevel& nl,
                           std::uint64_t seed);

struct PairSeeds {
  std::uint64_t kernel1 = 0;
  std::uint64_t kernel2 = 0;
  std::uint64_t noise1 = 0;
  std::uint64_t noise2 = 0;

  friend bool operator==(const PairSeeds&, const PairSeeds&) = default;
};

// Four pairwise-distinct child seeds of `seed`.
PairSeeds derive_pair_seeds(std::uint64_t seed);

struct PairProvenance {
  std::string clean_id;
  PairSeeds seeds;
  double sigma8 = 0.0;
};

// Two Wiener-filtered observations of one latent patch. The clean patch
// itself is deliberately not part of this type.
struct TrainingPair {
  ImageBuffer input;
  ImageBuffer target;
  PairProvenance provenance;
};

TrainingPair make_training_pair(const ImageBuffer& x, const Kernel& k1, const Kernel& k2,
                                const NoiseLevel& nl, const WienerConfig& cfg,
                                std::uint64_t noise_seed1, std::uint64_t noise_seed2);

// Synthesizes both kernels from seeds.kernel1/2 using kernel_spec's size and
// shape parameters (its rng_seed is ignored).
TrainingPair make_training_pair(const ImageBuffer& x, const PairSeeds& seeds,
                                const NoiseLevel& nl, const SynthKernelSpec& kernel_spec,
                                const WienerConfig& cfg);

TrainingPair make_training_pair(const ImageBuffer& x, const NoiseLevel& nl,
                                const WienerConfig& cfg, std::uint64_t seed,
                                const SynthKernelSpec& kernel_spec = {});

// Procedural test scene: smooth background gradient, random rectangles and
// ellipses with soft edges, and a few oriented sinusoid patches. Values in
// [0, 1]. Used for self-contained datasets when no photo corpus is at hand.
ImageBuffer synth_scene(int channels, int height, int width, std::uint64_t seed);

}  // namespace nbd
