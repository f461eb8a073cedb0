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

#include "nbd/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "nbd/error.hpp"

namespace nbd {

ImageBuffer read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(std::filesystem::exists(path) ? ErrorCode::kFormat : ErrorCode::kIo,
         "cannot read PNG " + path.string() + ": " + msg);
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int channels = gray ? 1 : 3;
  const int width = static_cast<int>(image.width);
  const int height = static_cast<int>(image.height);
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::kFormat, "corrupt PNG " + path.string() + ": " + msg);
  }

  ImageBuffer img(channels, height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(c, y, x) =
            pixels[(static_cast<std::size_t>(y) * width + x) * channels + c] / 255.0;
  return img;
}

void write_png(const ImageBuffer& img, const std::filesystem::path& path) {
  require(img.channels() == 1 || img.channels() == 3, ErrorCode::kInvalidArgument,
          "write_png supports 1 or 3 channels");
  const int h = img.height();
  const int w = img.width();
  const int ch = img.channels();
  std::vector<png_byte> pixels(static_cast<std::size_t>(h) * w * ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        pixels[(static_cast<std::size_t>(y) * w + x) * ch + c] =
            static_cast<png_byte>(std::lround(v * 255.0));
      }

  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = ch == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::kIo, "cannot write PNG " + path.string() + ": " + msg);
  }
}

}  // namespace nbd
