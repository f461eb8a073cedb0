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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nbd/nbd.h"

namespace fs = std::filesystem;

namespace {

class CapiTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "nbd_capi_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const char* name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CapiTest, VersionAndStatusStrings) {
  EXPECT_NE(std::strstr(nbd_version(), "nbd "), nullptr);
  EXPECT_STREQ(nbd_status_string(NBD_OK), "ok");
  EXPECT_STRNE(nbd_status_string(NBD_ERR_CHECKSUM), nbd_status_string(NBD_ERR_IO));
  nbd_set_threads(2);
  EXPECT_EQ(nbd_get_threads(), 2);
  nbd_set_threads(1);
}

TEST_F(CapiTest, ImageLifecycleAndErrors) {
  nbd_image* img = nullptr;
  const std::vector<double> data{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  ASSERT_EQ(nbd_image_create(1, 2, 3, data.data(), &img), NBD_OK);
  int c = 0, h = 0, w = 0;
  ASSERT_EQ(nbd_image_shape(img, &c, &h, &w), NBD_OK);
  EXPECT_EQ(c * 100 + h * 10 + w, 123);
  std::vector<double> back(6);
  ASSERT_EQ(nbd_image_copy_data(img, back.data(), back.size()), NBD_OK);
  EXPECT_EQ(back, data);

  nbd_metrics m{};
  EXPECT_EQ(nbd_image_compare(img, img, 1.0, &m), NBD_ERR_INVALID_ARGUMENT);
  nbd_image* flat = nullptr;
  ASSERT_EQ(nbd_image_create(1, 16, 16, nullptr, &flat), NBD_OK);
  ASSERT_EQ(nbd_image_compare(flat, flat, 1.0, &m), NBD_OK);
  EXPECT_EQ(m.mse, 0.0);
  EXPECT_EQ(m.psnr, 99.0);
  EXPECT_EQ(m.ssim, 1.0);
  nbd_image_destroy(flat);

  nbd_image* bad = nullptr;
  EXPECT_EQ(nbd_image_create(2, 2, 3, nullptr, &bad), NBD_ERR_INVALID_ARGUMENT);
  EXPECT_GT(std::strlen(nbd_last_error()), 0u);
  EXPECT_EQ(bad, nullptr);
  const double nan_data[1] = {std::nan("")};
  EXPECT_EQ(nbd_image_create(1, 1, 1, nan_data, &bad), NBD_ERR_NUMERIC);
  EXPECT_EQ(nbd_image_shape(nullptr, &c, &h, &w), NBD_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nbd_image_read_png(path("missing.png").c_str(), &bad), NBD_ERR_IO);

  ASSERT_EQ(nbd_image_write_png(img, path("x.png").c_str()), NBD_OK);
  nbd_image* loaded = nullptr;
  ASSERT_EQ(nbd_image_read_png(path("x.png").c_str(), &loaded), NBD_OK);
  std::vector<double> px(6);
  ASSERT_EQ(nbd_image_copy_data(loaded, px.data(), px.size()), NBD_OK);
  for (std::size_t i = 0; i < px.size(); ++i) EXPECT_LE(std::abs(px[i] - data[i]), 0.5 / 255.0 + 1e-12);
  nbd_image_destroy(loaded);
  nbd_image_destroy(img);
  nbd_image_destroy(nullptr);
}

TEST_F(CapiTest, KernelsBlurAndWiener) {
  const double box[9] = {1, 1, 1, 1, 1, 1, 1, 1, 1};
  nbd_kernel* k = nullptr;
  ASSERT_EQ(nbd_kernel_create(3, 3, box, &k), NBD_OK);
  double w[9];
  ASSERT_EQ(nbd_kernel_copy_weights(k, w, 9), NBD_OK);
  EXPECT_DOUBLE_EQ(w[4], 1.0 / 9.0);
  nbd_kernel* even = nullptr;
  EXPECT_EQ(nbd_kernel_create(2, 2, box, &even), NBD_ERR_INVALID_ARGUMENT);

  nbd_kernel_spec spec;
  nbd_kernel_spec_default(&spec);
  spec.seed = 5;
  nbd_kernel* s = nullptr;
  ASSERT_EQ(nbd_kernel_synth(&spec, &s), NBD_OK);
  ASSERT_EQ(nbd_kernel_write(s, path("k.txt").c_str()), NBD_OK);
  nbd_kernel* s2 = nullptr;
  ASSERT_EQ(nbd_kernel_read(path("k.txt").c_str(), &s2), NBD_OK);
  int kh = 0, kw = 0;
  ASSERT_EQ(nbd_kernel_shape(s2, &kh, &kw), NBD_OK);
  EXPECT_EQ(kh % 2, 1);

  nbd_image* clean = nullptr;
  ASSERT_EQ(nbd_image_create(1, 32, 32, nullptr, &clean), NBD_OK);
  nbd_image* y = nullptr;
  ASSERT_EQ(nbd_blur(clean, k, 0.0, 1, &y), NBD_OK);
  nbd_wiener_config cfg;
  nbd_wiener_config_default(&cfg);
  EXPECT_EQ(cfg.nsr_mode, NBD_NSR_KNOWN_SIGMA);
  nbd_image* x = nullptr;
  ASSERT_EQ(nbd_wiener(y, k, &cfg, &x), NBD_OK);
  double nsr = -1.0;
  int degenerate = 0;
  ASSERT_EQ(nbd_estimate_nsr(y, 3, 1e-10, &nsr, &degenerate), NBD_OK);
  EXPECT_EQ(degenerate, 1);

  nbd_noise_stats st{};
  ASSERT_EQ(nbd_colored_noise_stats(s, 32, 32, 7.65, 0.01, 200, 3, &st), NBD_OK);
  EXPECT_EQ(st.trials, 200);
  EXPECT_LE(std::abs(st.grand_mean), 4.0 * st.expected_standard_error);
  EXPECT_EQ(nbd_colored_noise_stats(s, 32, 32, 7.65, 0.01, 0, 3, &st), NBD_ERR_INVALID_ARGUMENT);

  for (nbd_image* i : {clean, y, x}) nbd_image_destroy(i);
  for (nbd_kernel* i : {k, s, s2}) nbd_kernel_destroy(i);
}

TEST_F(CapiTest, ModelsRoundTripAndMismatch) {
  nbd_model* m = nullptr;
  ASSERT_EQ(nbd_model_init("depth=2,base=4", 3, &m), NBD_OK);
  char arch[64];
  ASSERT_EQ(nbd_model_arch(m, arch, sizeof arch), NBD_OK);
  EXPECT_STREQ(arch, "depth=2,base=4,in=1,out=1,pad=reflect");
  EXPECT_GT(nbd_model_parameter_count(m), 0u);
  ASSERT_EQ(nbd_model_save(m, path("m.nbdw").c_str()), NBD_OK);
  nbd_model* back = nullptr;
  ASSERT_EQ(nbd_model_load(path("m.nbdw").c_str(), &back), NBD_OK);
  EXPECT_EQ(nbd_model_parameter_count(back), nbd_model_parameter_count(m));

  {
    std::fstream f(path("m.nbdw"), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-6, std::ios::end);
    f.put('\x7f');
  }
  nbd_model* corrupt = nullptr;
  EXPECT_EQ(nbd_model_load(path("m.nbdw").c_str(), &corrupt), NBD_ERR_CHECKSUM);
  EXPECT_EQ(nbd_model_init("depth=9", 0, &corrupt), NBD_ERR_INVALID_ARGUMENT);

  nbd_image* img = nullptr;
  ASSERT_EQ(nbd_image_create(3, 16, 16, nullptr, &img), NBD_OK);
  nbd_kernel* k = nullptr;
  const double one = 1.0;
  ASSERT_EQ(nbd_kernel_create(1, 1, &one, &k), NBD_OK);
  nbd_wiener_config cfg;
  nbd_wiener_config_default(&cfg);
  nbd_image* out = nullptr;
  EXPECT_EQ(nbd_deblur(img, k, m, &cfg, &out), NBD_ERR_SHAPE);
  nbd_image_destroy(img);
  ASSERT_EQ(nbd_image_create(1, 15, 17, nullptr, &img), NBD_OK);
  ASSERT_EQ(nbd_deblur(img, k, m, &cfg, &out), NBD_OK);
  int c = 0, h = 0, w = 0;
  nbd_image_shape(out, &c, &h, &w);
  EXPECT_EQ(h * 100 + w, 1517);

  nbd_image_destroy(out);
  nbd_image_destroy(img);
  nbd_kernel_destroy(k);
  nbd_model_destroy(back);
  nbd_model_destroy(m);
}

TEST_F(CapiTest, PipelineAndPartialEvaluation) {
  ASSERT_EQ(nbd_synth_images(path("src").c_str(), 2, 1, 72, 72, 4), NBD_OK);
  ASSERT_TRUE(fs::exists(dir_ / "src" / "scene_0000.png"));

  nbd_dataset_request req;
  nbd_dataset_request_default(&req);
  const std::string src = path("src");
  req.src_dir = src.c_str();
  req.count = 4;
  req.patch = 32;
  req.kernel_spec.size_max = 15;
  req.seed = 2;
  ASSERT_EQ(nbd_build_dataset(&req, path("m.txt").c_str()), NBD_OK);

  nbd_train_config tc;
  nbd_train_config_default(&tc);
  EXPECT_EQ(tc.batch_size, 8);
  EXPECT_DOUBLE_EQ(tc.lr0, 1e-4);
  EXPECT_EQ(tc.epochs, 60);
  tc.batch_size = 2;
  tc.epochs = 1;
  nbd_model* m = nullptr;
  ASSERT_EQ(nbd_train(path("m.txt").c_str(), "depth=2,base=2", &tc, path("ck").c_str(), nullptr,
                      nullptr, &m),
            NBD_OK);
  EXPECT_TRUE(fs::exists(dir_ / "ck" / "final.nbdw"));

  const double sigmas[1] = {7.65};
  nbd_testset_request treq{src.c_str(), 1, sigmas, 1, 11, 15, 9};
  ASSERT_EQ(nbd_build_testset(&treq, path("t.txt").c_str()), NBD_OK);

  nbd_wiener_config cfg;
  nbd_wiener_config_default(&cfg);
  size_t failures = 99;
  ASSERT_EQ(nbd_evaluate(path("t.txt").c_str(), m, &cfg, path("r.csv").c_str(),
                         path("s.csv").c_str(), &failures),
            NBD_OK);
  EXPECT_EQ(failures, 0u);

  std::ofstream(path("t.txt"), std::ios::app) << "extra 2.55 1 synth:1:11:11 " << path("nope.png") << "\n";
  EXPECT_EQ(nbd_evaluate(path("t.txt").c_str(), m, &cfg, path("r.csv").c_str(), nullptr, &failures),
            NBD_ERR_PARTIAL);
  EXPECT_EQ(failures, 1u);
  EXPECT_EQ(nbd_evaluate(path("none.txt").c_str(), m, &cfg, path("r.csv").c_str(), nullptr, nullptr),
            NBD_ERR_IO);
  nbd_model_destroy(m);
}
