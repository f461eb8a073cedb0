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
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "nbd/blur_lab.hpp"
#include "nbd/checkpoint.hpp"
#include "nbd/error.hpp"
#include "nbd/trainer.hpp"
#include "oracles.hpp"

using namespace nbd;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no nbd::Error thrown";
  return ErrorCode::kInvalidArgument;
}

class SceneSource final : public PairSource {
 public:
  SceneSource(std::size_t n, int size) {
    const SynthKernelSpec spec{5, 9, 32, 0.7, 0};
    for (std::size_t i = 0; i < n; ++i) {
      const auto clean = synth_scene(1, size, size, 100 + i);
      pairs_.push_back(make_training_pair(clean, NoiseLevel(2.55), WienerConfig{}, i, spec));
    }
  }
  std::size_t size() const override { return pairs_.size(); }
  TrainingPair pair(std::size_t i) const override { return pairs_.at(i); }

 private:
  std::vector<TrainingPair> pairs_;
};

class ScaledSource final : public PairSource {
 public:
  explicit ScaledSource(double scale) : scale_(scale) {}
  std::size_t size() const override { return 2; }
  TrainingPair pair(std::size_t i) const override {
    TrainingPair p;
    p.input = oracle::random_image(1, 8, 8, i);
    p.target = p.input;
    for (double& v : p.target.data()) v *= scale_;
    return p;
  }

 private:
  double scale_;
};

Arch tiny() { return Arch::parse("depth=2,base=4"); }

}  // namespace

TEST(L2Loss, ValuesAndGradientMatchScalarOracle) {
  const ImageBuffer zero(1, 2, 2);
  const ImageBuffer half(1, 2, 2, 0.5);
  EXPECT_DOUBLE_EQ(l2_loss(half, zero).loss, 0.25);
  EXPECT_EQ(l2_loss(half, half).loss, 0.0);
  const auto offset = l2_loss(half, zero);
  for (double g : offset.grad.data()) EXPECT_DOUBLE_EQ(g, 2 * 0.5 / 4);

  const auto a = oracle::random_image(3, 7, 5, 1);
  const auto b = oracle::random_image(3, 7, 5, 2);
  const auto r = l2_loss(a, b);
  EXPECT_NEAR(r.loss, oracle::scalar_mse(a, b), 1e-12);
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_NEAR(r.grad.data()[i], 2.0 * (a.data()[i] - b.data()[i]) / a.size(), 1e-15);
  EXPECT_EQ(code_of([&] { l2_loss(a, zero); }), ErrorCode::kShapeMismatch);
}

TEST(AdamW, HandComputedSteps) {
  ModelParams p = zero_params(Arch::parse("depth=0,base=1"));
  for (auto& t : p.tensors) std::fill(t.data.begin(), t.data.end(), 1.0);
  auto grads = zero_gradients(p);
  for (auto& g : grads) std::fill(g.begin(), g.end(), 1.0);

  ModelParams q = p;
  OptimizerState s = OptimizerState::zeros_like(q);
  adamw_step(q, grads, s, 0.1, AdamW{0.9, 0.999, 1e-8, 0.0});
  EXPECT_EQ(s.step, 1);
  for (const auto& t : q.tensors)
    for (double v : t.data) EXPECT_NEAR(v, 1.0 - 0.1 / (1.0 + 1e-8), 1e-15);

  ModelParams w = p;
  OptimizerState s2 = OptimizerState::zeros_like(w);
  const auto none = zero_gradients(w);
  adamw_step(w, none, s2, 0.1, AdamW{0.9, 0.999, 1e-8, 0.1});
  for (const auto& t : w.tensors)
    for (double v : t.data) EXPECT_NEAR(v, 0.99, 1e-15);

  ModelParams still = p;
  OptimizerState s3 = OptimizerState::zeros_like(still);
  adamw_step(still, none, s3, 0.1, AdamW{0.9, 0.999, 1e-8, 0.0});
  EXPECT_EQ(still, p);

  auto bad = grads;
  bad[0][0] = std::nan("");
  EXPECT_EQ(code_of([&] { adamw_step(q, bad, s, 0.1, AdamW{}); }), ErrorCode::kNumeric);
  bad.pop_back();
  EXPECT_EQ(code_of([&] { adamw_step(q, bad, s, 0.1, AdamW{}); }), ErrorCode::kShapeMismatch);
}

TEST(LrSchedule, HalvesEveryPeriod) {
  TrainConfig cfg;
  cfg.lr0 = 1e-4;
  EXPECT_DOUBLE_EQ(lr_schedule(0, cfg), 1e-4);
  EXPECT_DOUBLE_EQ(lr_schedule(9, cfg), 1e-4);
  EXPECT_DOUBLE_EQ(lr_schedule(10, cfg), 5e-5);
  EXPECT_DOUBLE_EQ(lr_schedule(59, cfg), 1e-4 / 32);
  EXPECT_THROW(lr_schedule(-1, cfg), Error);
}

TEST(TrainConfig, Validates) {
  TrainConfig cfg;
  cfg.validate();
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.lr0 = -1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.beta2 = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const SceneSource data(2, 16);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 4;
  const auto r = train(data, tiny(), cfg);
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(r.params, init_params(tiny(), init_seed(cfg), cfg.init));
  cfg.init.zero_head = true;
  EXPECT_EQ(train(data, tiny(), cfg).params, init_params(tiny(), init_seed(cfg), cfg.init));
}

TEST(Train, SmokeRunLowersLossAndWritesOutputs) {
  const SceneSource data(10, 64);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.lr0 = 1e-3;
  cfg.epochs = 2;
  cfg.seed = 3;
  const fs::path dir = fs::temp_directory_path() / "nbd_train_test";
  fs::remove_all(dir);
  TrainOutputs out;
  out.ckpt_dir = dir / "ckpt";
  out.log_csv = dir / "log.csv";
  int validator_calls = 0;
  out.validator = [&](const ModelParams&) { return static_cast<double>(++validator_calls); };

  const auto r = train(data, tiny(), cfg, out);
  ASSERT_EQ(r.log.size(), 2u);
  EXPECT_EQ(r.log[1].step, 10);
  EXPECT_LT(r.log.back().loss, r.log.front().first_batch_loss);
  EXPECT_EQ(validator_calls, 2);
  EXPECT_EQ(r.log[1].val_psnr, 2.0);
  EXPECT_TRUE(r.params.all_finite());

  EXPECT_EQ(load_checkpoint(out.ckpt_dir / "final.nbdw"), r.params);
  EXPECT_TRUE(fs::exists(out.ckpt_dir / "epoch_000.nbdw"));
  EXPECT_TRUE(fs::exists(out.ckpt_dir / "epoch_001.nbdw"));
  std::ifstream log(out.log_csv);
  std::string line;
  std::getline(log, line);
  EXPECT_EQ(line, "epoch,step,lr,loss,wall_ms,val_psnr");
  int rows = 0;
  while (std::getline(log, line)) ++rows;
  EXPECT_EQ(rows, 2);

  // Same seed, same parameters.
  EXPECT_EQ(train(data, tiny(), cfg).params, r.params);
  fs::remove_all(dir);
}

TEST(Train, RejectsBadInputs) {
  const SceneSource data(3, 16);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  EXPECT_EQ(code_of([&] { train(data, tiny(), cfg); }), ErrorCode::kInvalidArgument);
  cfg.batch_size = 1;
  cfg.lr0 = 1e-3;
  EXPECT_EQ(code_of([&] { train(ScaledSource(1e300), tiny(), cfg); }), ErrorCode::kNumeric);
}
