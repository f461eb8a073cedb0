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
#include <string_view>
#include <vector>

#include "nbd/image.hpp"

namespace nbd {

enum class Padding : std::uint8_t { kReflect = 0, kCircular = 1 };

// Encoder-decoder descriptor. Level l of the encoder has base << l channels;
// the bottleneck has base << depth. depth = 0 gives a pool-free network
// (bottleneck + 1x1 head), used for covariance checks.
struct Arch {
  int depth = 3;
  int base_channels = 32;
  int in_channels = 1;
  int out_channels = 1;
  Padding padding = Padding::kReflect;

  void validate() const;
  int size_multiple() const noexcept { return 1 << depth; }

  // "depth=3,base=32[,in=1][,out=1][,pad=reflect|circular]"; omitted keys
  // keep their defaults.
  static Arch parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const Arch&, const Arch&) = default;
};

struct ConvLayer {
  std::string name;
  int in_channels;
  int out_channels;
  int kernel;  // 3 or 1
  bool relu;
};

// Conv layers in evaluation order: enc0.conv1, enc0.conv2, ..., mid.conv1,
// mid.conv2, dec{depth-1}.conv1, ..., dec0.conv2, head.
std::vector<ConvLayer> conv_layers(const Arch& arch);

struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;

  std::size_t numel() const noexcept { return data.size(); }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

// Per conv layer, "<layer>.weight" [out, in, k, k] then "<layer>.bias" [out].
struct ModelParams {
  Arch arch;
  std::vector<Tensor> tensors;

  std::size_t parameter_count() const noexcept;
  bool all_finite() const noexcept;
  const Tensor& tensor(std::string_view name) const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Tensor shapes implied by arch, in storage order.
std::vector<Tensor> tensor_layout(const Arch& arch);

ModelParams zero_params(const Arch& arch);

struct InitOptions {
  // Zero the 1x1 head so the untrained model is the identity on its input.
  bool zero_head = false;
};

// He-normal conv weights (std sqrt(2 / fan_in)), zero biases. Values are
// rounded to float32 so checkpoints reproduce them exactly.
ModelParams init_params(const Arch& arch, std::uint64_t seed, InitOptions options = {});

// Rounds every parameter to the nearest float32.
void round_to_storage(ModelParams& params);

// Everything the backward pass needs from a forward call.
struct Activations {
  struct Feature {
    int c = 0;
    int h = 0;
    int w = 0;
    std::vector<double> v;
  };

  Arch arch;
  int height = 0;
  int width = 0;
  std::uint64_t params_fingerprint = 0;
  std::vector<Feature> conv_inputs;   // padded input of each conv layer
  std::vector<Feature> conv_outputs;  // post-activation output of each conv layer
  std::vector<std::vector<std::uint32_t>> pool_argmax;  // per encoder level
  std::vector<int> skip_channels;
};

struct ForwardResult {
  ImageBuffer output;
  Activations acts;
};

// y = x + net(x - 0.5). H and W must be multiples of 2^depth.
ForwardResult forward(const ModelParams& params, const ImageBuffer& x);

struct Gradients {
  std::vector<std::vector<double>> params;  // parallel to ModelParams::tensors
  ImageBuffer input;
};

Gradients backward(const ModelParams& params, const Activations& acts, const ImageBuffer& grad_out);

// Accumulator shaped like params, zero-filled.
std::vector<std::vector<double>> zero_gradients(const ModelParams& params);

// Runs forward on arbitrary sizes: reflect-pads bottom/right to a multiple
// of 2^depth and crops the result back.
ImageBuffer predict(const ModelParams& params, const ImageBuffer& x);

std::uint64_t fingerprint(const ModelParams& params);

}  // namespace nbd
