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

#include "nbd/nbd.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <new>
#include <string>
#include <utility>

#include "nbd/blur_lab.hpp"
#include "nbd/checkpoint.hpp"
#include "nbd/dataset.hpp"
#include "nbd/error.hpp"
#include "nbd/evaluator.hpp"
#include "nbd/image.hpp"
#include "nbd/kernel.hpp"
#include "nbd/parallel.hpp"
#include "nbd/png_io.hpp"
#include "nbd/rng.hpp"
#include "nbd/trainer.hpp"
#include "nbd/unet.hpp"
#include "nbd/wiener.hpp"

struct nbd_image {
  nbd::ImageBuffer value;
};

struct nbd_kernel {
  nbd::Kernel value;
};

struct nbd_model {
  nbd::ModelParams value;
};

namespace {

thread_local std::string g_last_error;

constexpr const char* kVersion = "nbd 1.0.0 (checkpoint v1, manifest v1, testset v1)";

static_assert(nbd::kCheckpointVersion == 1 && nbd::kManifestVersion == 1 &&
              nbd::kTestsetVersion == 1);

nbd_status map_code(nbd::ErrorCode code) {
  switch (code) {
    case nbd::ErrorCode::kInvalidArgument: return NBD_ERR_INVALID_ARGUMENT;
    case nbd::ErrorCode::kShapeMismatch: return NBD_ERR_SHAPE;
    case nbd::ErrorCode::kOutOfBounds: return NBD_ERR_OUT_OF_BOUNDS;
    case nbd::ErrorCode::kIo: return NBD_ERR_IO;
    case nbd::ErrorCode::kFormat: return NBD_ERR_FORMAT;
    case nbd::ErrorCode::kVersionMismatch: return NBD_ERR_VERSION;
    case nbd::ErrorCode::kChecksumMismatch: return NBD_ERR_CHECKSUM;
    case nbd::ErrorCode::kNumeric: return NBD_ERR_NUMERIC;
    case nbd::ErrorCode::kArchMismatch: return NBD_ERR_ARCH;
  }
  return NBD_ERR_INTERNAL;
}

nbd_status set_error(nbd_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
nbd_status guarded(F&& body) {
  try {
    return body();
  } catch (const nbd::Error& e) {
    return set_error(map_code(e.code()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return set_error(NBD_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(NBD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(NBD_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(NBD_ERR_INTERNAL, "unknown exception");
  }
}

void need(const void* p, const char* what) {
  nbd::require(p != nullptr, nbd::ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

nbd::SynthKernelSpec to_spec(const nbd_kernel_spec& s) {
  nbd::SynthKernelSpec out;
  out.size_min = s.size_min;
  out.size_max = s.size_max;
  out.trajectory_steps = s.trajectory_steps;
  out.smoothing_sigma = s.smoothing_sigma;
  out.rng_seed = s.seed;
  return out;
}

nbd::WienerConfig to_wiener(const nbd_wiener_config& c) {
  nbd::WienerConfig out;
  switch (c.nsr_mode) {
    case NBD_NSR_KNOWN_SIGMA:
      out = nbd::WienerConfig::known_sigma(nbd::NoiseLevel(c.sigma8).sigma01());
      break;
    case NBD_NSR_ESTIMATED:
      out = nbd::WienerConfig::estimated(c.window);
      break;
    case NBD_NSR_FIXED:
      out = nbd::WienerConfig::fixed(c.nsr);
      break;
    default:
      nbd::fail(nbd::ErrorCode::kInvalidArgument, "unknown nsr_mode");
  }
  out.nsr_floor = c.nsr_floor;
  out.edge_taper = c.edge_taper != 0;
  return out;
}

nbd::TrainConfig to_train(const nbd_train_config& c) {
  nbd::TrainConfig out;
  out.batch_size = c.batch_size;
  out.lr0 = c.lr0;
  out.beta1 = c.beta1;
  out.beta2 = c.beta2;
  out.adam_eps = c.adam_eps;
  out.weight_decay = c.weight_decay;
  out.epochs = c.epochs;
  out.lr_halving_period = c.lr_halving_period;
  out.seed = c.seed;
  out.steps_per_epoch = c.steps_per_epoch;
  out.init.zero_head = c.zero_head != 0;
  return out;
}

template <typename T, typename V>
nbd_status emit(T** out, V&& value) {
  need(out, "output handle");
  *out = new T{std::forward<V>(value)};
  return NBD_OK;
}

void write_text(const std::filesystem::path& path, const std::string& what,
                const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) nbd::fail(nbd::ErrorCode::kIo, "cannot write " + what + " " + path.string());
  body(out);
  if (!out) nbd::fail(nbd::ErrorCode::kIo, "failed writing " + what + " " + path.string());
}

}  // namespace

extern "C" {

const char* nbd_version(void) { return kVersion; }

const char* nbd_last_error(void) { return g_last_error.c_str(); }

const char* nbd_status_string(nbd_status status) {
  switch (status) {
    case NBD_OK: return "ok";
    case NBD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NBD_ERR_SHAPE: return "shape mismatch";
    case NBD_ERR_OUT_OF_BOUNDS: return "out of bounds";
    case NBD_ERR_IO: return "i/o error";
    case NBD_ERR_FORMAT: return "format error";
    case NBD_ERR_VERSION: return "version mismatch";
    case NBD_ERR_CHECKSUM: return "checksum mismatch";
    case NBD_ERR_NUMERIC: return "numeric error";
    case NBD_ERR_ARCH: return "architecture mismatch";
    case NBD_ERR_PARTIAL: return "partial result";
    case NBD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void nbd_set_threads(int threads) { nbd::set_thread_count(threads < 1 ? 1 : threads); }

int nbd_get_threads(void) { return nbd::thread_count(); }

nbd_status nbd_image_create(int channels, int height, int width, const double* data,
                            nbd_image** out) {
  return guarded([&] {
    nbd::require(height > 0 && width > 0, nbd::ErrorCode::kInvalidArgument,
                 "image dimensions must be positive");
    if (data == nullptr) return emit(out, nbd::ImageBuffer(channels, height, width));
    const std::size_t n = static_cast<std::size_t>(channels < 0 ? 0 : channels) * height * width;
    return emit(out, nbd::ImageBuffer(channels, height, width, std::vector<double>(data, data + n)));
  });
}

void nbd_image_destroy(nbd_image* image) { delete image; }

nbd_status nbd_image_shape(const nbd_image* image, int* channels, int* height, int* width) {
  return guarded([&] {
    need(image, "image");
    if (channels) *channels = image->value.channels();
    if (height) *height = image->value.height();
    if (width) *width = image->value.width();
    return NBD_OK;
  });
}

nbd_status nbd_image_copy_data(const nbd_image* image, double* dst, size_t capacity) {
  return guarded([&] {
    need(image, "image");
    need(dst, "destination");
    const auto d = image->value.data();
    std::memcpy(dst, d.data(), std::min(capacity, d.size()) * sizeof(double));
    return NBD_OK;
  });
}

nbd_status nbd_image_read_png(const char* path, nbd_image** out) {
  return guarded([&] {
    need(path, "path");
    return emit(out, nbd::read_png(path));
  });
}

nbd_status nbd_image_write_png(const nbd_image* image, const char* path) {
  return guarded([&] {
    need(image, "image");
    need(path, "path");
    nbd::write_png(image->value, path);
    return NBD_OK;
  });
}

nbd_status nbd_image_compare(const nbd_image* a, const nbd_image* b, double peak, nbd_metrics* out) {
  return guarded([&] {
    need(a, "image a");
    need(b, "image b");
    need(out, "metrics");
    const nbd::MetricReport r = nbd::compare(a->value, b->value, peak);
    *out = nbd_metrics{r.mse, r.psnr, r.ssim};
    return NBD_OK;
  });
}

nbd_status nbd_kernel_create(int height, int width, const double* weights, nbd_kernel** out) {
  return guarded([&] {
    need(weights, "weights");
    nbd::require(height > 0 && width > 0, nbd::ErrorCode::kInvalidArgument,
                 "kernel dimensions must be positive");
    const std::size_t n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    return emit(out, nbd::Kernel::normalized(height, width, std::vector<double>(weights, weights + n)));
  });
}

void nbd_kernel_destroy(nbd_kernel* kernel) { delete kernel; }

nbd_status nbd_kernel_shape(const nbd_kernel* kernel, int* height, int* width) {
  return guarded([&] {
    need(kernel, "kernel");
    if (height) *height = kernel->value.height();
    if (width) *width = kernel->value.width();
    return NBD_OK;
  });
}

nbd_status nbd_kernel_copy_weights(const nbd_kernel* kernel, double* dst, size_t capacity) {
  return guarded([&] {
    need(kernel, "kernel");
    need(dst, "destination");
    const auto w = kernel->value.weights();
    std::memcpy(dst, w.data(), std::min(capacity, w.size()) * sizeof(double));
    return NBD_OK;
  });
}

nbd_status nbd_kernel_read(const char* path, nbd_kernel** out) {
  return guarded([&] {
    need(path, "path");
    return emit(out, nbd::read_kernel(path));
  });
}

nbd_status nbd_kernel_write(const nbd_kernel* kernel, const char* path) {
  return guarded([&] {
    need(kernel, "kernel");
    need(path, "path");
    nbd::write_kernel(kernel->value, path);
    return NBD_OK;
  });
}

void nbd_kernel_spec_default(nbd_kernel_spec* spec) {
  if (!spec) return;
  const nbd::SynthKernelSpec d;
  *spec = nbd_kernel_spec{d.size_min, d.size_max, d.trajectory_steps, d.smoothing_sigma, d.rng_seed};
}

nbd_status nbd_kernel_synth(const nbd_kernel_spec* spec, nbd_kernel** out) {
  return guarded([&] {
    need(spec, "kernel spec");
    return emit(out, nbd::synth_kernel(to_spec(*spec)));
  });
}

nbd_status nbd_blur(const nbd_image* clean, const nbd_kernel* kernel, double sigma8,
                    uint64_t seed, nbd_image** out) {
  return guarded([&] {
    need(clean, "image");
    need(kernel, "kernel");
    return emit(out, nbd::blur_and_noise(clean->value, kernel->value, nbd::NoiseLevel(sigma8), seed));
  });
}

void nbd_wiener_config_default(nbd_wiener_config* cfg) {
  if (!cfg) return;
  *cfg = nbd_wiener_config{NBD_NSR_KNOWN_SIGMA, 0.0, nbd::kDefaultNsrWindow, 0.0,
                           nbd::kDefaultNsrFloor, 0};
}

nbd_status nbd_wiener(const nbd_image* blurry, const nbd_kernel* kernel,
                      const nbd_wiener_config* cfg, nbd_image** out) {
  return guarded([&] {
    need(blurry, "image");
    need(kernel, "kernel");
    need(cfg, "wiener config");
    return emit(out, nbd::wiener_deconvolve(blurry->value, kernel->value, to_wiener(*cfg)));
  });
}

nbd_status nbd_estimate_nsr(const nbd_image* blurry, int window, double nsr_floor, double* nsr,
                            int* degenerate) {
  return guarded([&] {
    need(blurry, "image");
    need(nsr, "nsr");
    const nbd::NsrEstimate e = nbd::estimate_nsr(blurry->value, window, nsr_floor);
    *nsr = e.value;
    if (degenerate) *degenerate = e.degenerate ? 1 : 0;
    return NBD_OK;
  });
}

nbd_status nbd_colored_noise_stats(const nbd_kernel* kernel, int height, int width, double sigma8,
                                   double nsr, int trials, uint64_t seed, nbd_noise_stats* out) {
  return guarded([&] {
    need(kernel, "kernel");
    need(out, "stats");
    const nbd::NoiseStats s = nbd::colored_noise_stats(
        kernel->value, height, width, nbd::NoiseLevel(sigma8).sigma01(), nsr, trials, seed);
    *out = nbd_noise_stats{s.trials,    s.grand_mean, s.standard_error, s.expected_standard_error,
                           s.pixel_std, s.lag1_correlation};
    return NBD_OK;
  });
}

nbd_status nbd_synth_images(const char* out_dir, int count, int channels, int height, int width,
                            uint64_t seed) {
  return guarded([&] {
    need(out_dir, "output directory");
    nbd::require(count >= 0, nbd::ErrorCode::kInvalidArgument, "count must be non-negative");
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    for (int i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "scene_%04d.png", i);
      nbd::write_png(
          nbd::synth_scene(channels, height, width, nbd::mix_seed(seed, static_cast<std::uint64_t>(i))),
          dir / name);
    }
    return NBD_OK;
  });
}

void nbd_dataset_request_default(nbd_dataset_request* req) {
  if (!req) return;
  const nbd::DatasetRequest d;
  req->src_dir = nullptr;
  req->count = d.count;
  req->patch = d.patch;
  req->sigma8 = d.noise.sigma8;
  nbd_kernel_spec_default(&req->kernel_spec);
  nbd_wiener_config_default(&req->wiener);
  req->seed = d.seed;
}

nbd_status nbd_build_dataset(const nbd_dataset_request* req, const char* manifest_path) {
  return guarded([&] {
    need(req, "dataset request");
    need(req->src_dir, "src_dir");
    need(manifest_path, "manifest path");
    nbd::DatasetRequest r;
    r.src_dir = req->src_dir;
    r.count = req->count;
    r.patch = req->patch;
    r.noise = nbd::NoiseLevel(req->sigma8);
    r.kernel_spec = to_spec(req->kernel_spec);
    nbd_wiener_config w = req->wiener;
    w.sigma8 = 0.0;
    r.wiener = to_wiener(w);
    r.seed = req->seed;
    nbd::write_manifest(nbd::build_dataset(r), manifest_path);
    return NBD_OK;
  });
}

nbd_status nbd_build_testset(const nbd_testset_request* req, const char* testset_path) {
  return guarded([&] {
    need(req, "testset request");
    need(req->src_dir, "src_dir");
    need(testset_path, "testset path");
    nbd::TestsetRequest r;
    r.src_dir = req->src_dir;
    r.kernels_per_image = req->kernels_per_image;
    if (req->sigma_count > 0) {
      need(req->sigma8s, "sigma8s");
      r.sigma8s.assign(req->sigma8s, req->sigma8s + req->sigma_count);
    }
    r.kernel_size_min = req->kernel_size_min;
    r.kernel_size_max = req->kernel_size_max;
    r.seed = req->seed;
    nbd::write_testset(nbd::build_testset(r), testset_path);
    return NBD_OK;
  });
}

nbd_status nbd_model_init(const char* arch, uint64_t seed, nbd_model** out) {
  return guarded([&] {
    need(arch, "arch");
    return emit(out, nbd::init_params(nbd::Arch::parse(arch), seed));
  });
}

nbd_status nbd_model_zero(const char* arch, nbd_model** out) {
  return guarded([&] {
    need(arch, "arch");
    return emit(out, nbd::zero_params(nbd::Arch::parse(arch)));
  });
}

void nbd_model_destroy(nbd_model* model) { delete model; }

nbd_status nbd_model_load(const char* path, nbd_model** out) {
  return guarded([&] {
    need(path, "path");
    return emit(out, nbd::load_checkpoint(path));
  });
}

nbd_status nbd_model_save(const nbd_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    nbd::save_checkpoint(model->value, path);
    return NBD_OK;
  });
}

nbd_status nbd_model_arch(const nbd_model* model, char* dst, size_t capacity) {
  return guarded([&] {
    need(model, "model");
    need(dst, "destination");
    nbd::require(capacity > 0, nbd::ErrorCode::kInvalidArgument, "capacity must be positive");
    const std::string s = model->value.arch.to_string();
    const std::size_t n = std::min(capacity - 1, s.size());
    std::memcpy(dst, s.data(), n);
    dst[n] = '\0';
    return NBD_OK;
  });
}

size_t nbd_model_parameter_count(const nbd_model* model) {
  return model ? model->value.parameter_count() : 0;
}

void nbd_train_config_default(nbd_train_config* cfg) {
  if (!cfg) return;
  const nbd::TrainConfig d;
  *cfg = nbd_train_config{d.batch_size, d.lr0,    d.beta1,
                          d.beta2,      d.adam_eps, d.weight_decay,
                          d.epochs,     d.lr_halving_period, d.seed,
                          d.steps_per_epoch, d.init.zero_head ? 1 : 0};
}

nbd_status nbd_train(const char* manifest_path, const char* arch, const nbd_train_config* cfg,
                     const char* ckpt_dir, const char* log_csv, const char* validation_testset,
                     nbd_model** out) {
  return guarded([&] {
    need(manifest_path, "manifest path");
    need(arch, "arch");
    need(cfg, "train config");
    const nbd::DatasetManifest manifest = nbd::read_manifest(manifest_path);
    nbd::TrainOutputs outputs;
    if (ckpt_dir) outputs.ckpt_dir = ckpt_dir;
    if (log_csv) outputs.log_csv = log_csv;
    if (validation_testset)
      outputs.validator = nbd::make_validator(nbd::read_testset(validation_testset), manifest.wiener);
    nbd::TrainResult r = nbd::train(manifest, nbd::Arch::parse(arch), to_train(*cfg), outputs);
    if (out) return emit(out, std::move(r.params));
    return NBD_OK;
  });
}

nbd_status nbd_deblur(const nbd_image* blurry, const nbd_kernel* kernel, const nbd_model* model,
                      const nbd_wiener_config* cfg, nbd_image** out) {
  return guarded([&] {
    need(blurry, "image");
    need(kernel, "kernel");
    need(model, "model");
    need(cfg, "wiener config");
    return emit(out, nbd::deblur(blurry->value, kernel->value, model->value, to_wiener(*cfg)));
  });
}

nbd_status nbd_evaluate(const char* testset_path, const nbd_model* model,
                        const nbd_wiener_config* cfg, const char* records_csv,
                        const char* summary_csv, size_t* failures) {
  return guarded([&] {
    need(testset_path, "testset path");
    need(model, "model");
    need(cfg, "wiener config");
    need(records_csv, "records csv path");
    const nbd::Testset testset = nbd::read_testset(testset_path);
    nbd_wiener_config c = *cfg;
    c.sigma8 = 0.0;
    const nbd::BenchmarkResult result = nbd::run_benchmark(testset, model->value, to_wiener(c));
    write_text(records_csv, "records csv",
               [&](std::ostream& o) { nbd::write_records_csv(o, result); });
    if (summary_csv)
      write_text(summary_csv, "summary csv",
                 [&](std::ostream& o) { nbd::write_summary_csv(o, result); });
    if (failures) *failures = result.failures.size();
    if (result.failures.empty()) return NBD_OK;
    std::string msg = std::to_string(result.failures.size()) + " record(s) skipped";
    for (const auto& f : result.failures) msg += "\n  " + f;
    return set_error(NBD_ERR_PARTIAL, msg);
  });
}

}  // extern "C"
