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

/*
 * C interface to the nbd deblurring library.
 *
 * Objects are opaque handles created by nbd_*_create/read/load functions and
 * released with the matching nbd_*_destroy. Every fallible call returns an
 * nbd_status; on failure a human-readable message for the calling thread is
 * available from nbd_last_error() until the next failing call on that thread.
 * Output handles are only written on success.
 */
#ifndef NBD_NBD_H
#define NBD_NBD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(NBD_BUILDING_LIBRARY)
#    define NBD_API __declspec(dllexport)
#  else
#    define NBD_API __declspec(dllimport)
#  endif
#else
#  define NBD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nbd_status {
  NBD_OK = 0,
  NBD_ERR_INVALID_ARGUMENT = 1,
  NBD_ERR_SHAPE = 2,
  NBD_ERR_OUT_OF_BOUNDS = 3,
  NBD_ERR_IO = 4,
  NBD_ERR_FORMAT = 5,
  NBD_ERR_VERSION = 6,
  NBD_ERR_CHECKSUM = 7,
  NBD_ERR_NUMERIC = 8,
  NBD_ERR_ARCH = 9,
  NBD_ERR_PARTIAL = 10, /* batch operation finished with some records skipped */
  NBD_ERR_INTERNAL = 99
} nbd_status;

typedef struct nbd_image nbd_image;
typedef struct nbd_kernel nbd_kernel;
typedef struct nbd_model nbd_model;

NBD_API const char* nbd_version(void);
NBD_API const char* nbd_last_error(void);
NBD_API const char* nbd_status_string(nbd_status status);
NBD_API void nbd_set_threads(int threads);
NBD_API int nbd_get_threads(void);

/* ---- images: C x H x W doubles, row-major per channel ---- */

/* data may be NULL for a zero image; otherwise channels*height*width values. */
NBD_API nbd_status nbd_image_create(int channels, int height, int width, const double* data,
                                    nbd_image** out);
NBD_API void nbd_image_destroy(nbd_image* image);
NBD_API nbd_status nbd_image_shape(const nbd_image* image, int* channels, int* height, int* width);
/* Copies min(capacity, C*H*W) samples into dst. */
NBD_API nbd_status nbd_image_copy_data(const nbd_image* image, double* dst, size_t capacity);
NBD_API nbd_status nbd_image_read_png(const char* path, nbd_image** out);
NBD_API nbd_status nbd_image_write_png(const nbd_image* image, const char* path);

typedef struct nbd_metrics {
  double mse;
  double psnr;
  double ssim;
} nbd_metrics;

NBD_API nbd_status nbd_image_compare(const nbd_image* a, const nbd_image* b, double peak,
                                     nbd_metrics* out);

/* ---- kernels ---- */

/* Weights are renormalized to sum 1; negative weights or even dims fail. */
NBD_API nbd_status nbd_kernel_create(int height, int width, const double* weights, nbd_kernel** out);
NBD_API void nbd_kernel_destroy(nbd_kernel* kernel);
NBD_API nbd_status nbd_kernel_shape(const nbd_kernel* kernel, int* height, int* width);
NBD_API nbd_status nbd_kernel_copy_weights(const nbd_kernel* kernel, double* dst, size_t capacity);
NBD_API nbd_status nbd_kernel_read(const char* path, nbd_kernel** out);
NBD_API nbd_status nbd_kernel_write(const nbd_kernel* kernel, const char* path);

typedef struct nbd_kernel_spec {
  int size_min;         /* odd, >= 3 */
  int size_max;         /* odd, <= 63 */
  int trajectory_steps; /* >= 1 */
  double smoothing_sigma;
  uint64_t seed;
} nbd_kernel_spec;

NBD_API void nbd_kernel_spec_default(nbd_kernel_spec* spec);
NBD_API nbd_status nbd_kernel_synth(const nbd_kernel_spec* spec, nbd_kernel** out);

/* ---- forward model and Wiener filtering ---- */

/* circular blur plus Gaussian noise of std sigma8/255 */
NBD_API nbd_status nbd_blur(const nbd_image* clean, const nbd_kernel* kernel, double sigma8,
                            uint64_t seed, nbd_image** out);

typedef enum nbd_nsr_mode {
  NBD_NSR_KNOWN_SIGMA = 0, /* r = (sigma8/255)^2 / var(y) */
  NBD_NSR_ESTIMATED = 1,   /* median-filter residual estimate */
  NBD_NSR_FIXED = 2        /* r = nsr */
} nbd_nsr_mode;

typedef struct nbd_wiener_config {
  nbd_nsr_mode nsr_mode;
  double sigma8;
  int window;
  double nsr;
  double nsr_floor;
  int edge_taper;
} nbd_wiener_config;

NBD_API void nbd_wiener_config_default(nbd_wiener_config* cfg);
NBD_API nbd_status nbd_wiener(const nbd_image* blurry, const nbd_kernel* kernel,
                              const nbd_wiener_config* cfg, nbd_image** out);
NBD_API nbd_status nbd_estimate_nsr(const nbd_image* blurry, int window, double nsr_floor,
                                    double* nsr, int* degenerate);

typedef struct nbd_noise_stats {
  int trials;
  double grand_mean;
  double standard_error;
  double expected_standard_error;
  double pixel_std;
  double lag1_correlation;
} nbd_noise_stats;

/* Monte-Carlo statistics of the Wiener colored-noise residue. */
NBD_API nbd_status nbd_colored_noise_stats(const nbd_kernel* kernel, int height, int width,
                                           double sigma8, double nsr, int trials, uint64_t seed,
                                           nbd_noise_stats* out);

/* ---- datasets ---- */

NBD_API nbd_status nbd_synth_images(const char* out_dir, int count, int channels, int height,
                                    int width, uint64_t seed);

typedef struct nbd_dataset_request {
  const char* src_dir;
  size_t count;
  int patch;
  double sigma8;
  nbd_kernel_spec kernel_spec; /* seed field ignored */
  nbd_wiener_config wiener;    /* sigma8 field ignored: taken from each record */
  uint64_t seed;
} nbd_dataset_request;

NBD_API void nbd_dataset_request_default(nbd_dataset_request* req);
NBD_API nbd_status nbd_build_dataset(const nbd_dataset_request* req, const char* manifest_path);

typedef struct nbd_testset_request {
  const char* src_dir;
  int kernels_per_image;
  const double* sigma8s;
  size_t sigma_count;
  int kernel_size_min;
  int kernel_size_max;
  uint64_t seed;
} nbd_testset_request;

NBD_API nbd_status nbd_build_testset(const nbd_testset_request* req, const char* testset_path);

/* ---- denoiser model ---- */

/* arch: "depth=3,base=32[,in=1][,out=1][,pad=reflect|circular]" */
NBD_API nbd_status nbd_model_init(const char* arch, uint64_t seed, nbd_model** out);
NBD_API nbd_status nbd_model_zero(const char* arch, nbd_model** out);
NBD_API void nbd_model_destroy(nbd_model* model);
NBD_API nbd_status nbd_model_load(const char* path, nbd_model** out);
NBD_API nbd_status nbd_model_save(const nbd_model* model, const char* path);
/* Writes the canonical arch string (NUL-terminated, truncated to capacity). */
NBD_API nbd_status nbd_model_arch(const nbd_model* model, char* dst, size_t capacity);
NBD_API size_t nbd_model_parameter_count(const nbd_model* model);

typedef struct nbd_train_config {
  int batch_size;
  double lr0;
  double beta1;
  double beta2;
  double adam_eps;
  double weight_decay;
  int epochs;
  int lr_halving_period;
  uint64_t seed;
  int steps_per_epoch; /* 0 = pairs / batch_size */
  int zero_head;       /* nonzero: start the 1x1 head at zero */
} nbd_train_config;

NBD_API void nbd_train_config_default(nbd_train_config* cfg);

/* Trains from a dataset manifest. ckpt_dir and log_csv may be NULL.
 * validation_testset (may be NULL) adds a reporting-only PSNR column.
 * out may be NULL when only the files on disk are wanted. */
NBD_API nbd_status nbd_train(const char* manifest_path, const char* arch,
                             const nbd_train_config* cfg, const char* ckpt_dir,
                             const char* log_csv, const char* validation_testset,
                             nbd_model** out);

NBD_API nbd_status nbd_deblur(const nbd_image* blurry, const nbd_kernel* kernel,
                              const nbd_model* model, const nbd_wiener_config* cfg,
                              nbd_image** out);

/* Runs the benchmark and writes the per-record CSV (and summary CSV when
 * summary_csv is non-NULL). failures may be NULL. Returns NBD_ERR_PARTIAL
 * if any record was skipped. */
NBD_API nbd_status nbd_evaluate(const char* testset_path, const nbd_model* model,
                                const nbd_wiener_config* cfg, const char* records_csv,
                                const char* summary_csv, size_t* failures);

#ifdef __cplusplus
}
#endif

#endif /* NBD_NBD_H */
