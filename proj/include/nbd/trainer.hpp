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
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "nbd/dataset.hpp"
#include "nbd/image.hpp"
#include "nbd/unet.hpp"

namespace nbd {

struct TrainConfig {
  int batch_size = 8;
  double lr0 = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  int epochs = 60;
  int lr_halving_period = 10;
  std::uint64_t seed = 0;
  // 0 derives floor(pairs / batch_size); the trailing partial batch is dropped.
  int steps_per_epoch = 0;
  InitOptions init;

  void validate() const;
};

struct OptimizerState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;

  static OptimizerState zeros_like(const ModelParams& params);
};

struct AdamW {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct LossResult {
  double loss = 0.0;
  ImageBuffer grad;
};

// Mean squared difference over C*H*W; grad = 2 (pred - target) / (C*H*W).
LossResult l2_loss(const ImageBuffer& pred, const ImageBuffer& target);

// One decoupled-weight-decay Adam update in place.
void adamw_step(ModelParams& params, const std::vector<std::vector<double>>& grads,
                OptimizerState& state, double lr, const AdamW& hyper);

// Seed handed to init_params by train().
std::uint64_t init_seed(const TrainConfig& cfg);

// lr0 * 0.5^floor(epoch / lr_halving_period)
double lr_schedule(int epoch, const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  std::int64_t step = 0;  // optimizer steps taken so far
  double lr = 0.0;
  double loss = 0.0;  // mean batch loss over the epoch
  double first_batch_loss = 0.0;
  double wall_ms = 0.0;
  std::optional<double> val_psnr;
};

// Reporting hook that may look at clean images; it only ever receives the
// current parameters and never feeds back into the update.
using Validator = std::function<double(const ModelParams&)>;

struct TrainOutputs {
  std::filesystem::path ckpt_dir;  // empty: no checkpoints
  std::filesystem::path log_csv;   // empty: no CSV log
  Validator validator;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

// Noise2Noise loop: each step regresses pair.input onto pair.target, both
// noisy. A non-finite loss aborts with kNumeric; the last checkpoint on
// disk is left as it was.
TrainResult train(const PairSource& data, const Arch& arch, const TrainConfig& cfg,
                  const TrainOutputs& outputs = {});

TrainResult train(const DatasetManifest& manifest, const Arch& arch, const TrainConfig& cfg,
                  const TrainOutputs& outputs = {});

}  // namespace nbd
