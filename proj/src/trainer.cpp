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

#include "nbd/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "nbd/checkpoint.hpp"
#include "nbd/error.hpp"
#include "nbd/parallel.hpp"
#include "nbd/rng.hpp"
#include "text_util.hpp"

namespace nbd {

namespace {

constexpr std::uint64_t kInitTag = 0x494E4954ULL;
constexpr std::uint64_t kShuffleTag = 0x5348554646ULL;

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

std::string epoch_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%03d.nbdw", epoch);
  return buf;
}

void append_log_row(const std::filesystem::path& path, const EpochLog& e) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) fail(ErrorCode::kIo, "cannot append to training log " + path.string());
  out << e.epoch << ',' << e.step << ',' << detail::format_double(e.lr) << ','
      << detail::format_double(e.loss) << ',' << detail::format_double(std::round(e.wall_ms))
      << ',';
  if (e.val_psnr) out << detail::format_double(*e.val_psnr);
  out << '\n';
}

}  // namespace

void TrainConfig::validate() const {
  require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch_size must be at least 1");
  require(lr0 > 0.0 && beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0 &&
              adam_eps > 0.0,
          ErrorCode::kInvalidArgument, "learning rate and Adam constants must be positive (betas < 1)");
  require(weight_decay >= 0.0, ErrorCode::kInvalidArgument, "weight_decay must be non-negative");
  require(epochs >= 0, ErrorCode::kInvalidArgument, "epochs must be non-negative");
  require(lr_halving_period >= 1, ErrorCode::kInvalidArgument, "lr_halving_period must be at least 1");
  require(steps_per_epoch >= 0, ErrorCode::kInvalidArgument, "steps_per_epoch must be non-negative");
}

OptimizerState OptimizerState::zeros_like(const ModelParams& params) {
  OptimizerState s;
  s.m = zero_gradients(params);
  s.v = zero_gradients(params);
  return s;
}

LossResult l2_loss(const ImageBuffer& pred, const ImageBuffer& target) {
  require(pred.same_shape(target), ErrorCode::kShapeMismatch, "l2_loss: shape mismatch");
  const auto p = pred.data();
  const auto t = target.data();
  const double n = static_cast<double>(p.size());
  std::vector<double> grad(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    acc += d * d;
    grad[i] = 2.0 * d / n;
  }
  LossResult r;
  r.loss = acc / n;
  r.grad = ImageBuffer(pred.channels(), pred.height(), pred.width(), std::move(grad));
  return r;
}

void adamw_step(ModelParams& params, const std::vector<std::vector<double>>& grads,
                OptimizerState& state, double lr, const AdamW& hyper) {
  require(grads.size() == params.tensors.size() && state.m.size() == params.tensors.size() &&
              state.v.size() == params.tensors.size(),
          ErrorCode::kShapeMismatch, "adamw: gradient/state layout does not match parameters");
  for (std::size_t t = 0; t < grads.size(); ++t) {
    require(grads[t].size() == params.tensors[t].numel() &&
                state.m[t].size() == grads[t].size() && state.v[t].size() == grads[t].size(),
            ErrorCode::kShapeMismatch, "adamw: tensor " + params.tensors[t].name + " size mismatch");
    for (std::size_t i = 0; i < grads[t].size(); ++i)
      if (!std::isfinite(grads[t][i]))
        fail(ErrorCode::kNumeric, "adamw: non-finite gradient in " + params.tensors[t].name +
                                      " at element " + std::to_string(i));
  }

  const std::int64_t step = state.step + 1;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  for (std::size_t t = 0; t < grads.size(); ++t) {
    auto& p = params.tensors[t].data;
    auto& m = state.m[t];
    auto& v = state.v[t];
    const auto& g = grads[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= lr * (m_hat / (std::sqrt(v_hat) + hyper.eps) + hyper.weight_decay * p[i]);
    }
  }
  state.step = step;
}

std::uint64_t init_seed(const TrainConfig& cfg) { return mix_seed(cfg.seed, kInitTag); }

double lr_schedule(int epoch, const TrainConfig& cfg) {
  require(epoch >= 0, ErrorCode::kInvalidArgument, "epoch must be non-negative");
  return cfg.lr0 * std::ldexp(1.0, -(epoch / cfg.lr_halving_period));
}

TrainResult train(const PairSource& data, const Arch& arch, const TrainConfig& cfg,
                  const TrainOutputs& outputs) {
  cfg.validate();
  arch.validate();
  require(data.size() > 0, ErrorCode::kInvalidArgument, "train: empty dataset");

  TrainResult result;
  result.params = init_params(arch, init_seed(cfg), cfg.init);

  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t steps =
      cfg.steps_per_epoch > 0 ? static_cast<std::size_t>(cfg.steps_per_epoch) : data.size() / batch;
  require(cfg.epochs == 0 || steps > 0, ErrorCode::kInvalidArgument,
          "train: " + std::to_string(data.size()) + " pairs cannot fill one batch of " +
              std::to_string(batch));

  if (!outputs.ckpt_dir.empty()) std::filesystem::create_directories(outputs.ckpt_dir);
  if (!outputs.log_csv.empty()) {
    std::ofstream out(outputs.log_csv, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot create training log " + outputs.log_csv.string());
    out << "epoch,step,lr,loss,wall_ms,val_psnr\n";
  }

  OptimizerState state = OptimizerState::zeros_like(result.params);
  const AdamW hyper{cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay};

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double lr = lr_schedule(epoch, cfg);

    // Enough shuffled passes over the data to cover `steps` batches.
    std::vector<std::size_t> order;
    for (std::uint64_t pass = 0; order.size() < steps * batch; ++pass) {
      const auto p = permutation(
          data.size(), mix_seed(mix_seed(cfg.seed, kShuffleTag), (static_cast<std::uint64_t>(epoch) << 20) + pass));
      order.insert(order.end(), p.begin(), p.end());
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr;
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<TrainingPair> pairs(batch);
      parallel_for(static_cast<int>(batch),
                   [&](int j) { pairs[j] = data.pair(order[s * batch + static_cast<std::size_t>(j)]); });

      auto grads = zero_gradients(result.params);
      double batch_loss = 0.0;
      for (const TrainingPair& pair : pairs) {
        const ForwardResult fr = forward(result.params, pair.input);
        const LossResult loss = l2_loss(fr.output, pair.target);
        if (!std::isfinite(loss.loss))
          fail(ErrorCode::kNumeric, "train: non-finite loss at epoch " + std::to_string(epoch) +
                                        ", step " + std::to_string(s));
        const Gradients g = backward(result.params, fr.acts, loss.grad);
        for (std::size_t t = 0; t < grads.size(); ++t)
          for (std::size_t i = 0; i < grads[t].size(); ++i) grads[t][i] += g.params[t][i] / static_cast<double>(batch);
        batch_loss += loss.loss / static_cast<double>(batch);
      }
      if (s == 0) entry.first_batch_loss = batch_loss;
      loss_sum += batch_loss;
      adamw_step(result.params, grads, state, lr, hyper);
      round_to_storage(result.params);
      if (!result.params.all_finite())
        fail(ErrorCode::kNumeric, "train: parameters became non-finite at epoch " +
                                      std::to_string(epoch));
    }
    entry.step = state.step;
    entry.loss = loss_sum / static_cast<double>(steps);
    if (outputs.validator) entry.val_psnr = outputs.validator(result.params);
    entry.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!outputs.ckpt_dir.empty()) save_checkpoint(result.params, outputs.ckpt_dir / epoch_name(epoch));
    if (!outputs.log_csv.empty()) append_log_row(outputs.log_csv, entry);
    result.log.push_back(entry);
  }
  if (!outputs.ckpt_dir.empty()) save_checkpoint(result.params, outputs.ckpt_dir / "final.nbdw");
  return result;
}

TrainResult train(const DatasetManifest& manifest, const Arch& arch, const TrainConfig& cfg,
                  const TrainOutputs& outputs) {
  require(!manifest.records.empty(), ErrorCode::kInvalidArgument, "train: empty manifest");
  const ManifestPairSource source(manifest);
  return train(source, arch, cfg, outputs);
}

}  // namespace nbd
