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

// nbd: command-line front end over the C API.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nbd/nbd.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Handles {
  std::vector<nbd_image*> images;
  std::vector<nbd_kernel*> kernels;
  std::vector<nbd_model*> models;
  ~Handles() {
    for (auto* p : images) nbd_image_destroy(p);
    for (auto* p : kernels) nbd_kernel_destroy(p);
    for (auto* p : models) nbd_model_destroy(p);
  }
};

// Thrown on a non-OK status to unwind to main with the mapped exit code.
struct StatusExit {
  int code;
};

void check(nbd_status s, const std::string& context) {
  if (s == NBD_OK) return;
  std::fprintf(stderr, "nbd %s: %s: %s\n", context.c_str(), nbd_status_string(s), nbd_last_error());
  throw StatusExit{s == NBD_ERR_INVALID_ARGUMENT ? kExitUsage : kExitRuntime};
}

nbd_image* load_image(Handles& h, const std::string& path) {
  nbd_image* img = nullptr;
  check(nbd_image_read_png(path.c_str(), &img), "reading " + path);
  h.images.push_back(img);
  return img;
}

nbd_kernel* load_kernel(Handles& h, const std::string& path) {
  nbd_kernel* k = nullptr;
  check(nbd_kernel_read(path.c_str(), &k), "reading kernel " + path);
  h.kernels.push_back(k);
  return k;
}

nbd_model* load_model(Handles& h, const std::string& path) {
  nbd_model* m = nullptr;
  check(nbd_model_load(path.c_str(), &m), "loading checkpoint " + path);
  h.models.push_back(m);
  return m;
}

// Noise-level selection shared by wiener and deblur.
struct NsrFlags {
  double sigma8 = 0.0;
  bool estimate = false;
  int window = 3;
  double nsr_floor = 1e-10;
  bool edge_taper = false;
  CLI::Option* sigma_opt = nullptr;
  CLI::Option* estimate_opt = nullptr;

  void add(CLI::App* cmd, bool taper) {
    sigma_opt = cmd->add_option("--sigma8", sigma8, "noise std on the 0-255 scale (known-sigma NSR)")
                    ->check(CLI::NonNegativeNumber);
    estimate_opt = cmd->add_flag("--estimate-nsr", estimate, "estimate the NSR from the input");
    sigma_opt->excludes(estimate_opt);
    estimate_opt->excludes(sigma_opt);
    cmd->add_option("--window", window, "median window for --estimate-nsr")
        ->capture_default_str()
        ->check(CLI::Range(3, 99));
    cmd->add_option("--nsr-floor", nsr_floor, "lower bound on the Wiener denominator")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    if (taper) cmd->add_flag("--edge-taper", edge_taper, "blend borders before filtering");
  }

  void require_one() const {
    if (sigma_opt->count() == 0 && !estimate)
      throw CLI::RequiredError("one of --sigma8 or --estimate-nsr");
  }

  nbd_wiener_config config() const {
    nbd_wiener_config c;
    nbd_wiener_config_default(&c);
    c.nsr_mode = estimate ? NBD_NSR_ESTIMATED : NBD_NSR_KNOWN_SIGMA;
    c.sigma8 = sigma8;
    c.window = window;
    c.nsr_floor = nsr_floor;
    c.edge_taper = edge_taper ? 1 : 0;
    return c;
  }
};

void print_stats(const nbd_noise_stats& s) {
  std::printf("trials %d\n", s.trials);
  std::printf("mean %.9e\n", s.grand_mean);
  std::printf("stderr %.9e\n", s.standard_error);
  std::printf("expected_stderr %.9e\n", s.expected_standard_error);
  std::printf("pixel_std %.9e\n", s.pixel_std);
  std::printf("lag1_corr %.6f\n", s.lag1_correlation);
  const double ratio = s.standard_error > 0.0 ? std::abs(s.grand_mean) / s.standard_error : 0.0;
  std::printf("abs_mean_over_stderr %.4f\n", ratio);
  std::printf("within_3_stderr %s\n", ratio <= 3.0 ? "yes" : "no");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-blind deblurring: Wiener deconvolution plus a Noise2Noise U-Net denoiser", "nbd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nbd_version()));
  int threads = 1;
  app.add_option("--threads", threads, "worker threads (results do not depend on this)")
      ->capture_default_str()
      ->check(CLI::Range(1, 1024));

  std::function<int()> action;
  Handles h;

  // synth-kernel
  {
    auto* cmd = app.add_subcommand("synth-kernel", "draw a random motion-blur kernel");
    auto spec = std::make_shared<nbd_kernel_spec>();
    nbd_kernel_spec_default(spec.get());
    auto out = std::make_shared<std::string>();
    cmd->add_option("--size-min", spec->size_min, "smallest odd kernel size")->capture_default_str();
    cmd->add_option("--size-max", spec->size_max, "largest odd kernel size")->capture_default_str();
    cmd->add_option("--steps", spec->trajectory_steps, "trajectory steps")->capture_default_str();
    cmd->add_option("--smoothing", spec->smoothing_sigma, "Gaussian smoothing sigma")
        ->capture_default_str();
    cmd->add_option("--seed", spec->seed, "random seed")->required();
    cmd->add_option("--out", *out, "output kernel text file")->required();
    cmd->callback([&, spec, out] {
      action = [&h, spec, out] {
        nbd_kernel* k = nullptr;
        check(nbd_kernel_synth(spec.get(), &k), "synth-kernel");
        h.kernels.push_back(k);
        check(nbd_kernel_write(k, out->c_str()), "writing " + *out);
        return kExitOk;
      };
    });
  }

  // blur
  {
    auto* cmd = app.add_subcommand("blur", "circularly blur an image and add Gaussian noise");
    struct Args {
      std::string in, kernel, out;
      double sigma8 = 0.0;
      std::uint64_t seed = 0;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--in", a->in, "clean PNG")->required();
    cmd->add_option("--kernel", a->kernel, "kernel text file")->required();
    cmd->add_option("--sigma8", a->sigma8, "noise std on the 0-255 scale")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", a->seed, "noise seed")->capture_default_str();
    cmd->add_option("--out", a->out, "output PNG")->required();
    cmd->callback([&, a] {
      action = [&h, a] {
        nbd_image* x = load_image(h, a->in);
        nbd_kernel* k = load_kernel(h, a->kernel);
        nbd_image* y = nullptr;
        check(nbd_blur(x, k, a->sigma8, a->seed, &y), "blur");
        h.images.push_back(y);
        check(nbd_image_write_png(y, a->out.c_str()), "writing " + a->out);
        return kExitOk;
      };
    });
  }

  // wiener
  {
    auto* cmd = app.add_subcommand("wiener", "Wiener-deconvolve an image with a known kernel");
    struct Args {
      std::string in, kernel, out;
      NsrFlags nsr;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--in", a->in, "blurry PNG")->required();
    cmd->add_option("--kernel", a->kernel, "kernel text file")->required();
    a->nsr.add(cmd, true);
    cmd->add_option("--out", a->out, "output PNG")->required();
    cmd->callback([&, a] {
      a->nsr.require_one();
      action = [&h, a] {
        nbd_image* y = load_image(h, a->in);
        nbd_kernel* k = load_kernel(h, a->kernel);
        const nbd_wiener_config cfg = a->nsr.config();
        nbd_image* x = nullptr;
        check(nbd_wiener(y, k, &cfg, &x), "wiener");
        h.images.push_back(x);
        check(nbd_image_write_png(x, a->out.c_str()), "writing " + a->out);
        return kExitOk;
      };
    });
  }

  // build-dataset
  {
    auto* cmd = app.add_subcommand("build-dataset", "write a reproducible training manifest");
    struct Args {
      nbd_dataset_request req;
      std::string src, manifest;
      bool estimate = false;
    };
    auto a = std::make_shared<Args>();
    nbd_dataset_request_default(&a->req);
    cmd->add_option("--src", a->src, "directory of clean PNGs")->required();
    cmd->add_option("--count", a->req.count, "number of training pairs")->required();
    cmd->add_option("--patch", a->req.patch, "square patch size")->capture_default_str();
    cmd->add_option("--sigma8", a->req.sigma8, "noise std on the 0-255 scale")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--kernel-min", a->req.kernel_spec.size_min, "smallest kernel size")
        ->capture_default_str();
    cmd->add_option("--kernel-max", a->req.kernel_spec.size_max, "largest kernel size")
        ->capture_default_str();
    cmd->add_flag("--estimate-nsr", a->estimate, "pairs use estimated rather than known NSR");
    cmd->add_option("--seed", a->req.seed, "dataset seed")->capture_default_str();
    cmd->add_option("--manifest-out", a->manifest, "output manifest")->required();
    cmd->callback([&, a] {
      action = [a] {
        a->req.src_dir = a->src.c_str();
        if (a->estimate) a->req.wiener.nsr_mode = NBD_NSR_ESTIMATED;
        check(nbd_build_dataset(&a->req, a->manifest.c_str()), "build-dataset");
        return kExitOk;
      };
    });
  }

  // build-testset
  {
    auto* cmd = app.add_subcommand("build-testset", "write a benchmark testset listing");
    struct Args {
      std::string src, out;
      int kernels_per_image = 1;
      std::vector<double> sigma8s{2.55, 7.65, 12.75};
      int kmin = 11, kmax = 35;
      std::uint64_t seed = 0;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--src", a->src, "directory of clean PNGs")->required();
    cmd->add_option("--kernels-per-image", a->kernels_per_image, "kernels drawn per image")
        ->capture_default_str();
    cmd->add_option("--sigma8", a->sigma8s, "noise levels on the 0-255 scale")
        ->capture_default_str()
        ->delimiter(',');
    cmd->add_option("--kernel-min", a->kmin, "smallest kernel size")->capture_default_str();
    cmd->add_option("--kernel-max", a->kmax, "largest kernel size")->capture_default_str();
    cmd->add_option("--seed", a->seed, "testset seed")->capture_default_str();
    cmd->add_option("--out", a->out, "output testset file")->required();
    cmd->callback([&, a] {
      action = [a] {
        nbd_testset_request r{a->src.c_str(), a->kernels_per_image, a->sigma8s.data(),
                              a->sigma8s.size(), a->kmin, a->kmax, a->seed};
        check(nbd_build_testset(&r, a->out.c_str()), "build-testset");
        return kExitOk;
      };
    });
  }

  // synth-images
  {
    auto* cmd = app.add_subcommand("synth-images", "write procedural clean scenes as PNGs");
    struct Args {
      std::string out;
      int count = 0, channels = 1, height = 64, width = 64;
      std::uint64_t seed = 0;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--out-dir", a->out, "output directory")->required();
    cmd->add_option("--count", a->count, "number of images")->required();
    cmd->add_option("--channels", a->channels, "1 or 3")->capture_default_str();
    cmd->add_option("--height", a->height, "image height")->capture_default_str();
    cmd->add_option("--width", a->width, "image width")->capture_default_str();
    cmd->add_option("--seed", a->seed, "scene seed")->capture_default_str();
    cmd->callback([&, a] {
      action = [a] {
        check(nbd_synth_images(a->out.c_str(), a->count, a->channels, a->height, a->width, a->seed),
              "synth-images");
        return kExitOk;
      };
    });
  }

  // train
  {
    auto* cmd = app.add_subcommand("train", "train the denoiser with Noise2Noise pairs");
    struct Args {
      nbd_train_config cfg;
      std::string manifest, arch = "depth=3,base=32", ckpt_dir, log_csv, val;
    };
    auto a = std::make_shared<Args>();
    nbd_train_config_default(&a->cfg);
    cmd->add_option("--manifest", a->manifest, "dataset manifest")->required();
    cmd->add_option("--arch", a->arch, "network descriptor")->capture_default_str();
    cmd->add_option("--batch-size", a->cfg.batch_size, "pairs per step")->capture_default_str();
    cmd->add_option("--lr0", a->cfg.lr0, "initial learning rate")->capture_default_str();
    cmd->add_option("--beta1", a->cfg.beta1, "Adam beta1")->capture_default_str();
    cmd->add_option("--beta2", a->cfg.beta2, "Adam beta2")->capture_default_str();
    cmd->add_option("--adam-eps", a->cfg.adam_eps, "Adam epsilon")->capture_default_str();
    cmd->add_option("--weight-decay", a->cfg.weight_decay, "decoupled weight decay")
        ->capture_default_str();
    cmd->add_option("--epochs", a->cfg.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--lr-halving-period", a->cfg.lr_halving_period, "epochs per lr halving")
        ->capture_default_str();
    cmd->add_option("--steps-per-epoch", a->cfg.steps_per_epoch, "0 = pairs / batch size")
        ->capture_default_str();
    cmd->add_option("--seed", a->cfg.seed, "init and shuffle seed")->capture_default_str();
    cmd->add_flag("--zero-head", a->cfg.zero_head, "start the 1x1 head at zero (identity model)");
    cmd->add_option("--ckpt-dir", a->ckpt_dir, "checkpoint directory")->required();
    cmd->add_option("--log-csv", a->log_csv, "per-epoch log (default <ckpt-dir>/train_log.csv)");
    cmd->add_option("--val-testset", a->val, "testset for a reporting-only val_psnr column");
    cmd->callback([&, a] {
      action = [a] {
        const std::string log = a->log_csv.empty() ? a->ckpt_dir + "/train_log.csv" : a->log_csv;
        check(nbd_train(a->manifest.c_str(), a->arch.c_str(), &a->cfg, a->ckpt_dir.c_str(),
                        log.c_str(), a->val.empty() ? nullptr : a->val.c_str(), nullptr),
              "train");
        return kExitOk;
      };
    });
  }

  // deblur
  {
    auto* cmd = app.add_subcommand("deblur", "Wiener deconvolution followed by the denoiser");
    struct Args {
      std::string in, kernel, ckpt, out;
      NsrFlags nsr;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--in", a->in, "blurry PNG")->required();
    cmd->add_option("--kernel", a->kernel, "kernel text file")->required();
    cmd->add_option("--ckpt", a->ckpt, "trained checkpoint")->required();
    a->nsr.add(cmd, true);
    cmd->add_option("--out", a->out, "output PNG")->required();
    cmd->callback([&, a] {
      a->nsr.require_one();
      action = [&h, a] {
        nbd_image* y = load_image(h, a->in);
        nbd_kernel* k = load_kernel(h, a->kernel);
        nbd_model* m = load_model(h, a->ckpt);
        const nbd_wiener_config cfg = a->nsr.config();
        nbd_image* x = nullptr;
        check(nbd_deblur(y, k, m, &cfg, &x), "deblur");
        h.images.push_back(x);
        check(nbd_image_write_png(x, a->out.c_str()), "writing " + a->out);
        return kExitOk;
      };
    });
  }

  // eval
  {
    auto* cmd = app.add_subcommand("eval", "score a checkpoint on a testset");
    struct Args {
      std::string testset, ckpt, csv, summary;
      bool estimate = false;
      int window = 3;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--testset", a->testset, "testset file")->required();
    cmd->add_option("--ckpt", a->ckpt, "trained checkpoint")->required();
    cmd->add_option("--csv-out", a->csv, "per-record CSV")->required();
    cmd->add_option("--summary-out", a->summary, "per-sigma summary CSV");
    cmd->add_flag("--estimate-nsr", a->estimate, "estimate NSR instead of using record sigma");
    cmd->add_option("--window", a->window, "median window for --estimate-nsr")->capture_default_str();
    cmd->callback([&, a] {
      action = [&h, a] {
        nbd_model* m = load_model(h, a->ckpt);
        nbd_wiener_config cfg;
        nbd_wiener_config_default(&cfg);
        if (a->estimate) cfg.nsr_mode = NBD_NSR_ESTIMATED;
        cfg.window = a->window;
        std::size_t failures = 0;
        const nbd_status s = nbd_evaluate(a->testset.c_str(), m, &cfg, a->csv.c_str(),
                                          a->summary.empty() ? nullptr : a->summary.c_str(), &failures);
        if (s == NBD_ERR_PARTIAL) {
          std::fprintf(stderr, "nbd eval: %s\n", nbd_last_error());
          return kExitRuntime;
        }
        check(s, "eval");
        return kExitOk;
      };
    });
  }

  // noise-stats
  {
    auto* cmd = app.add_subcommand("noise-stats", "Monte-Carlo mean/std of the Wiener colored noise");
    struct Args {
      std::string kernel;
      double sigma8 = 7.65, nsr = 0.01;
      int trials = 1000, height = 32, width = 32;
      std::uint64_t seed = 0;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--kernel", a->kernel, "kernel text file")->required();
    cmd->add_option("--sigma8", a->sigma8, "noise std on the 0-255 scale")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--nsr", a->nsr, "Wiener regularizer r")->capture_default_str();
    cmd->add_option("--trials", a->trials, "Monte-Carlo trials")->capture_default_str();
    cmd->add_option("--height", a->height, "field height")->capture_default_str();
    cmd->add_option("--width", a->width, "field width")->capture_default_str();
    cmd->add_option("--seed", a->seed, "noise seed")->capture_default_str();
    cmd->callback([&, a] {
      action = [&h, a] {
        nbd_kernel* k = load_kernel(h, a->kernel);
        nbd_noise_stats s{};
        check(nbd_colored_noise_stats(k, a->height, a->width, a->sigma8, a->nsr, a->trials, a->seed, &s),
              "noise-stats");
        print_stats(s);
        return kExitOk;
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  nbd_set_threads(threads);
  try {
    return action ? action() : kExitUsage;
  } catch (const StatusExit& e) {
    return e.code;
  }
}
