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

#include "nbd/unet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "nbd/error.hpp"
#include "nbd/parallel.hpp"
#include "nbd/rng.hpp"
#include "text_util.hpp"

namespace nbd {

using Feature = Activations::Feature;

void Arch::validate() const {
  require(depth >= 0 && depth <= 6, ErrorCode::kInvalidArgument, "arch: depth must be in [0, 6]");
  require(base_channels >= 1 && base_channels <= 512, ErrorCode::kInvalidArgument,
          "arch: base channels must be in [1, 512]");
  require(in_channels == 1 || in_channels == 3, ErrorCode::kInvalidArgument,
          "arch: in channels must be 1 or 3");
  require(out_channels == in_channels, ErrorCode::kInvalidArgument,
          "arch: residual output requires out channels == in channels");
}

Arch Arch::parse(std::string_view text) {
  Arch arch;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view item = text.substr(pos, end - pos);
    pos = end + 1;
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    require(eq != std::string_view::npos, ErrorCode::kInvalidArgument,
            "arch: expected key=value, got '" + std::string(item) + "'");
    const std::string_view key = item.substr(0, eq);
    const std::string_view value = item.substr(eq + 1);
    auto number = [&] {
      try {
        return detail::parse_number<int>(value, "arch");
      } catch (const Error& e) {
        fail(ErrorCode::kInvalidArgument, e.what());
      }
    };
    if (key == "depth") {
      arch.depth = number();
    } else if (key == "base") {
      arch.base_channels = number();
    } else if (key == "in") {
      arch.in_channels = number();
    } else if (key == "out") {
      arch.out_channels = number();
    } else if (key == "pad") {
      if (value == "reflect") {
        arch.padding = Padding::kReflect;
      } else if (value == "circular") {
        arch.padding = Padding::kCircular;
      } else {
        fail(ErrorCode::kInvalidArgument, "arch: unknown padding '" + std::string(value) + "'");
      }
    } else {
      fail(ErrorCode::kInvalidArgument, "arch: unknown key '" + std::string(key) + "'");
    }
  }
  arch.validate();
  return arch;
}

std::string Arch::to_string() const {
  return "depth=" + std::to_string(depth) + ",base=" + std::to_string(base_channels) +
         ",in=" + std::to_string(in_channels) + ",out=" + std::to_string(out_channels) +
         ",pad=" + (padding == Padding::kReflect ? "reflect" : "circular");
}

std::vector<ConvLayer> conv_layers(const Arch& arch) {
  arch.validate();
  std::vector<ConvLayer> layers;
  int ch = arch.in_channels;
  for (int l = 0; l < arch.depth; ++l) {
    const int width = arch.base_channels << l;
    const std::string p = "enc" + std::to_string(l);
    layers.push_back({p + ".conv1", ch, width, 3, true});
    layers.push_back({p + ".conv2", width, width, 3, true});
    ch = width;
  }
  const int mid = arch.base_channels << arch.depth;
  layers.push_back({"mid.conv1", ch, mid, 3, true});
  layers.push_back({"mid.conv2", mid, mid, 3, true});
  ch = mid;
  for (int l = arch.depth - 1; l >= 0; --l) {
    const int width = arch.base_channels << l;
    const std::string p = "dec" + std::to_string(l);
    layers.push_back({p + ".conv1", ch + width, width, 3, true});
    layers.push_back({p + ".conv2", width, width, 3, true});
    ch = width;
  }
  layers.push_back({"head", ch, arch.out_channels, 1, false});
  return layers;
}

std::vector<Tensor> tensor_layout(const Arch& arch) {
  std::vector<Tensor> out;
  for (const auto& layer : conv_layers(arch)) {
    Tensor w;
    w.name = layer.name + ".weight";
    w.shape = {layer.out_channels, layer.in_channels, layer.kernel, layer.kernel};
    w.data.assign(static_cast<std::size_t>(layer.out_channels) * layer.in_channels *
                      layer.kernel * layer.kernel,
                  0.0);
    Tensor b;
    b.name = layer.name + ".bias";
    b.shape = {layer.out_channels};
    b.data.assign(layer.out_channels, 0.0);
    out.push_back(std::move(w));
    out.push_back(std::move(b));
  }
  return out;
}

std::size_t ModelParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.numel();
  return n;
}

bool ModelParams::all_finite() const noexcept {
  for (const auto& t : tensors)
    for (double v : t.data)
      if (!std::isfinite(v)) return false;
  return true;
}

const Tensor& ModelParams::tensor(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  fail(ErrorCode::kInvalidArgument, "no tensor named " + std::string(name));
}

ModelParams zero_params(const Arch& arch) { return {arch, tensor_layout(arch)}; }

ModelParams init_params(const Arch& arch, std::uint64_t seed, InitOptions options) {
  ModelParams p = zero_params(arch);
  for (std::size_t i = 0; i < p.tensors.size(); i += 2) {
    Tensor& w = p.tensors[i];
    if (options.zero_head && w.name == "head.weight") continue;
    const int fan_in = w.shape[1] * w.shape[2] * w.shape[3];
    const double stddev = std::sqrt(2.0 / fan_in);
    Rng rng(mix_seed(seed, i));
    for (double& v : w.data) v = stddev * rng.normal();
  }
  round_to_storage(p);
  return p;
}

void round_to_storage(ModelParams& params) {
  for (auto& t : params.tensors)
    for (double& v : t.data) v = static_cast<double>(static_cast<float>(v));
}

std::uint64_t fingerprint(const ModelParams& params) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& t : params.tensors)
    for (double v : t.data) {
      h ^= std::bit_cast<std::uint64_t>(v);
      h *= 0x100000001B3ULL;
    }
  return h;
}

std::vector<std::vector<double>> zero_gradients(const ModelParams& params) {
  std::vector<std::vector<double>> g;
  g.reserve(params.tensors.size());
  for (const auto& t : params.tensors) g.emplace_back(t.numel(), 0.0);
  return g;
}

namespace {

// Subtracted from the input before the first conv; the residual adds x itself.
constexpr double kInputOffset = 0.5;

// Source index of padded coordinate i in a dimension of length n.
int pad_source(int i, int n, Padding mode) {
  if (mode == Padding::kCircular) return ((i % n) + n) % n;
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  int m = ((i % period) + period) % period;
  return m < n ? m : period - m;
}

Feature make_feature(int c, int h, int w) {
  Feature f;
  f.c = c;
  f.h = h;
  f.w = w;
  f.v.assign(static_cast<std::size_t>(c) * h * w, 0.0);
  return f;
}

Feature pad_feature(const Feature& in, int pad, Padding mode) {
  if (pad == 0) return in;
  const int ph = in.h + 2 * pad;
  const int pw = in.w + 2 * pad;
  Feature out = make_feature(in.c, ph, pw);
  for (int c = 0; c < in.c; ++c) {
    const double* src = in.v.data() + static_cast<std::size_t>(c) * in.h * in.w;
    double* dst = out.v.data() + static_cast<std::size_t>(c) * ph * pw;
    for (int y = 0; y < ph; ++y) {
      const int sy = pad_source(y - pad, in.h, mode);
      for (int x = 0; x < pw; ++x) dst[y * pw + x] = src[sy * in.w + pad_source(x - pad, in.w, mode)];
    }
  }
  return out;
}

// out[oc] = bias[oc] + sum_ic sum_k w * padded[ic] shifted.
Feature conv_forward(const Feature& padded, const Tensor& w, const Tensor& b, int kernel) {
  const int oc_n = w.shape[0];
  const int ic_n = w.shape[1];
  const int oh = padded.h - kernel + 1;
  const int ow = padded.w - kernel + 1;
  Feature out = make_feature(oc_n, oh, ow);
  parallel_for(oc_n, [&](int oc) {
    double* dst = out.v.data() + static_cast<std::size_t>(oc) * oh * ow;
    std::fill(dst, dst + static_cast<std::size_t>(oh) * ow, b.data[oc]);
    for (int ic = 0; ic < ic_n; ++ic) {
      const double* src = padded.v.data() + static_cast<std::size_t>(ic) * padded.h * padded.w;
      const double* wk = w.data.data() + (static_cast<std::size_t>(oc) * ic_n + ic) * kernel * kernel;
      for (int ky = 0; ky < kernel; ++ky)
        for (int kx = 0; kx < kernel; ++kx) {
          const double wv = wk[ky * kernel + kx];
          for (int y = 0; y < oh; ++y) {
            const double* row = src + static_cast<std::size_t>(y + ky) * padded.w + kx;
            double* out_row = dst + static_cast<std::size_t>(y) * ow;
            for (int x = 0; x < ow; ++x) out_row[x] += wv * row[x];
          }
        }
    }
  });
  return out;
}

void relu_inplace(Feature& f) {
  for (double& v : f.v) v = v > 0.0 ? v : 0.0;
}

// Gradient wrt the unpadded input, plus weight/bias gradients accumulated
// into gw/gb.
Feature conv_backward(const Feature& grad_out, const Feature& padded, const Tensor& w, int kernel,
                      int in_h, int in_w, Padding mode, std::vector<double>& gw,
                      std::vector<double>& gb) {
  const int oc_n = w.shape[0];
  const int ic_n = w.shape[1];
  const int oh = grad_out.h;
  const int ow = grad_out.w;

  parallel_for(oc_n, [&](int oc) {
    const double* g = grad_out.v.data() + static_cast<std::size_t>(oc) * oh * ow;
    double bias_acc = 0.0;
    for (int i = 0; i < oh * ow; ++i) bias_acc += g[i];
    gb[oc] += bias_acc;
    for (int ic = 0; ic < ic_n; ++ic) {
      const double* src = padded.v.data() + static_cast<std::size_t>(ic) * padded.h * padded.w;
      double* gk = gw.data() + (static_cast<std::size_t>(oc) * ic_n + ic) * kernel * kernel;
      for (int ky = 0; ky < kernel; ++ky)
        for (int kx = 0; kx < kernel; ++kx) {
          double acc = 0.0;
          for (int y = 0; y < oh; ++y) {
            const double* row = src + static_cast<std::size_t>(y + ky) * padded.w + kx;
            const double* grow = g + static_cast<std::size_t>(y) * ow;
            for (int x = 0; x < ow; ++x) acc += grow[x] * row[x];
          }
          gk[ky * kernel + kx] += acc;
        }
    }
  });

  const int pad = kernel / 2;
  Feature grad_in = make_feature(ic_n, in_h, in_w);
  parallel_for(ic_n, [&](int ic) {
    std::vector<double> gpad(static_cast<std::size_t>(padded.h) * padded.w, 0.0);
    for (int oc = 0; oc < oc_n; ++oc) {
      const double* g = grad_out.v.data() + static_cast<std::size_t>(oc) * oh * ow;
      const double* wk = w.data.data() + (static_cast<std::size_t>(oc) * ic_n + ic) * kernel * kernel;
      for (int ky = 0; ky < kernel; ++ky)
        for (int kx = 0; kx < kernel; ++kx) {
          const double wv = wk[ky * kernel + kx];
          for (int y = 0; y < oh; ++y) {
            double* prow = gpad.data() + static_cast<std::size_t>(y + ky) * padded.w + kx;
            const double* grow = g + static_cast<std::size_t>(y) * ow;
            for (int x = 0; x < ow; ++x) prow[x] += wv * grow[x];
          }
        }
    }
    double* dst = grad_in.v.data() + static_cast<std::size_t>(ic) * in_h * in_w;
    for (int y = 0; y < padded.h; ++y) {
      const int sy = pad == 0 ? y : pad_source(y - pad, in_h, mode);
      for (int x = 0; x < padded.w; ++x) {
        const int sx = pad == 0 ? x : pad_source(x - pad, in_w, mode);
        dst[sy * in_w + sx] += gpad[static_cast<std::size_t>(y) * padded.w + x];
      }
    }
  });
  return grad_in;
}

void relu_backward_inplace(Feature& grad, const Feature& relu_out) {
  for (std::size_t i = 0; i < grad.v.size(); ++i)
    if (relu_out.v[i] <= 0.0) grad.v[i] = 0.0;
}

// 2x2 stride-2 max pool; ties keep the first element in scan order.
Feature maxpool_forward(const Feature& in, std::vector<std::uint32_t>& argmax) {
  const int oh = in.h / 2;
  const int ow = in.w / 2;
  Feature out = make_feature(in.c, oh, ow);
  argmax.assign(out.v.size(), 0);
  for (int c = 0; c < in.c; ++c) {
    const std::size_t base = static_cast<std::size_t>(c) * in.h * in.w;
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        std::size_t best = base + static_cast<std::size_t>(2 * y) * in.w + 2 * x;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t idx = base + static_cast<std::size_t>(2 * y + dy) * in.w + 2 * x + dx;
            if (in.v[idx] > in.v[best]) best = idx;
          }
        const std::size_t o = (static_cast<std::size_t>(c) * oh + y) * ow + x;
        out.v[o] = in.v[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
  }
  return out;
}

Feature maxpool_backward(const Feature& grad, const std::vector<std::uint32_t>& argmax, int c,
                         int h, int w) {
  Feature out = make_feature(c, h, w);
  for (std::size_t i = 0; i < grad.v.size(); ++i) out.v[argmax[i]] += grad.v[i];
  return out;
}

Feature upsample_forward(const Feature& in) {
  Feature out = make_feature(in.c, in.h * 2, in.w * 2);
  for (int c = 0; c < in.c; ++c)
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x)
        out.v[(static_cast<std::size_t>(c) * out.h + y) * out.w + x] =
            in.v[(static_cast<std::size_t>(c) * in.h + y / 2) * in.w + x / 2];
  return out;
}

Feature upsample_backward(const Feature& grad) {
  Feature out = make_feature(grad.c, grad.h / 2, grad.w / 2);
  for (int c = 0; c < grad.c; ++c)
    for (int y = 0; y < grad.h; ++y)
      for (int x = 0; x < grad.w; ++x)
        out.v[(static_cast<std::size_t>(c) * out.h + y / 2) * out.w + x / 2] +=
            grad.v[(static_cast<std::size_t>(c) * grad.h + y) * grad.w + x];
  return out;
}

Feature concat(const Feature& a, const Feature& b) {
  Feature out = make_feature(a.c + b.c, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(a.v.size()));
  return out;
}

void check_params(const ModelParams& params) {
  const auto layout = tensor_layout(params.arch);
  require(layout.size() == params.tensors.size(), ErrorCode::kArchMismatch,
          "model parameters do not match their architecture descriptor");
  for (std::size_t i = 0; i < layout.size(); ++i)
    require(layout[i].name == params.tensors[i].name &&
                layout[i].shape == params.tensors[i].shape &&
                layout[i].numel() == params.tensors[i].numel(),
            ErrorCode::kArchMismatch, "tensor " + params.tensors[i].name + " has wrong shape");
}

}  // namespace

ForwardResult forward(const ModelParams& params, const ImageBuffer& x) {
  check_params(params);
  const Arch& arch = params.arch;
  require(x.channels() == arch.in_channels, ErrorCode::kShapeMismatch,
          "forward: input has " + std::to_string(x.channels()) + " channels, arch expects " +
              std::to_string(arch.in_channels));
  const int m = arch.size_multiple();
  require(x.height() % m == 0 && x.width() % m == 0, ErrorCode::kShapeMismatch,
          "forward: input dims must be multiples of " + std::to_string(m));

  const auto layers = conv_layers(arch);
  ForwardResult result;
  Activations& acts = result.acts;
  acts.arch = arch;
  acts.height = x.height();
  acts.width = x.width();
  acts.params_fingerprint = fingerprint(params);
  acts.conv_inputs.reserve(layers.size());
  acts.conv_outputs.reserve(layers.size());

  std::size_t li = 0;
  auto conv = [&](const Feature& in) {
    const ConvLayer& layer = layers[li];
    acts.conv_inputs.push_back(pad_feature(in, layer.kernel / 2, arch.padding));
    Feature out = conv_forward(acts.conv_inputs.back(), params.tensors[2 * li],
                               params.tensors[2 * li + 1], layer.kernel);
    if (layer.relu) relu_inplace(out);
    acts.conv_outputs.push_back(out);
    ++li;
    return out;
  };

  Feature cur = make_feature(x.channels(), x.height(), x.width());
  std::transform(x.data().begin(), x.data().end(), cur.v.begin(),
                 [](double v) { return v - kInputOffset; });

  std::vector<Feature> skips;
  acts.pool_argmax.resize(arch.depth);
  for (int l = 0; l < arch.depth; ++l) {
    cur = conv(cur);
    cur = conv(cur);
    skips.push_back(cur);
    acts.skip_channels.push_back(cur.c);
    cur = maxpool_forward(cur, acts.pool_argmax[l]);
  }
  cur = conv(cur);
  cur = conv(cur);
  for (int l = arch.depth - 1; l >= 0; --l) {
    cur = conv(concat(upsample_forward(cur), skips[l]));
    cur = conv(cur);
  }
  const Feature residual = conv(cur);

  std::vector<double> y(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += residual.v[i];
  result.output = ImageBuffer(x.channels(), x.height(), x.width(), std::move(y));
  return result;
}

Gradients backward(const ModelParams& params, const Activations& acts, const ImageBuffer& grad_out) {
  check_params(params);
  const Arch& arch = params.arch;
  const auto layers = conv_layers(arch);
  require(acts.arch == arch && acts.conv_inputs.size() == layers.size() &&
              acts.params_fingerprint == fingerprint(params),
          ErrorCode::kInvalidArgument, "backward: activations do not belong to these parameters");
  require(grad_out.channels() == arch.out_channels && grad_out.height() == acts.height &&
              grad_out.width() == acts.width,
          ErrorCode::kShapeMismatch, "backward: gradient shape does not match forward output");

  Gradients grads;
  grads.params = zero_gradients(params);

  std::size_t li = layers.size();
  auto conv_back = [&](Feature g) {
    --li;
    const ConvLayer& layer = layers[li];
    if (layer.relu) relu_backward_inplace(g, acts.conv_outputs[li]);
    const Feature& padded = acts.conv_inputs[li];
    const int pad = layer.kernel / 2;
    return conv_backward(g, padded, params.tensors[2 * li], layer.kernel, padded.h - 2 * pad,
                         padded.w - 2 * pad, arch.padding, grads.params[2 * li],
                         grads.params[2 * li + 1]);
  };

  Feature g = make_feature(grad_out.channels(), grad_out.height(), grad_out.width());
  std::copy(grad_out.data().begin(), grad_out.data().end(), g.v.begin());

  Feature cur = conv_back(g);
  std::vector<Feature> skip_grads(arch.depth);
  for (int l = 0; l < arch.depth; ++l) {
    cur = conv_back(cur);
    Feature cat = conv_back(cur);
    const std::size_t up_size = cat.v.size() - static_cast<std::size_t>(acts.skip_channels[l]) * cat.h * cat.w;
    Feature up = make_feature(cat.c - acts.skip_channels[l], cat.h, cat.w);
    std::copy(cat.v.begin(), cat.v.begin() + static_cast<std::ptrdiff_t>(up_size), up.v.begin());
    Feature skip = make_feature(acts.skip_channels[l], cat.h, cat.w);
    std::copy(cat.v.begin() + static_cast<std::ptrdiff_t>(up_size), cat.v.end(), skip.v.begin());
    skip_grads[l] = std::move(skip);
    cur = upsample_backward(up);
  }
  cur = conv_back(cur);
  cur = conv_back(cur);
  for (int l = arch.depth - 1; l >= 0; --l) {
    const Feature& sg = skip_grads[l];
    Feature pooled = maxpool_backward(cur, acts.pool_argmax[l], sg.c, sg.h, sg.w);
    for (std::size_t i = 0; i < pooled.v.size(); ++i) pooled.v[i] += sg.v[i];
    cur = conv_back(pooled);
    cur = conv_back(cur);
  }

  std::vector<double> gin(grad_out.data().begin(), grad_out.data().end());
  for (std::size_t i = 0; i < gin.size(); ++i) gin[i] += cur.v[i];
  grads.input = ImageBuffer(grad_out.channels(), grad_out.height(), grad_out.width(), std::move(gin));
  return grads;
}

ImageBuffer predict(const ModelParams& params, const ImageBuffer& x) {
  const int m = params.arch.size_multiple();
  const int ph = (x.height() + m - 1) / m * m;
  const int pw = (x.width() + m - 1) / m * m;
  if (ph == x.height() && pw == x.width()) return forward(params, x).output;
  ImageBuffer padded(x.channels(), ph, pw);
  for (int c = 0; c < x.channels(); ++c)
    for (int y = 0; y < ph; ++y) {
      const int sy = pad_source(y, x.height(), Padding::kReflect);
      for (int col = 0; col < pw; ++col)
        padded.at(c, y, col) = x.at(c, sy, pad_source(col, x.width(), Padding::kReflect));
    }
  const ImageBuffer full = forward(params, padded).output;
  ImageBuffer out(x.channels(), x.height(), x.width());
  for (int c = 0; c < x.channels(); ++c)
    for (int y = 0; y < x.height(); ++y)
      for (int col = 0; col < x.width(); ++col) out.at(c, y, col) = full.at(c, y, col);
  return out;
}

}  // namespace nbd
