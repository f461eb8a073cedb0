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

#include <filesystem>

#include "nbd/image.hpp"

namespace nbd {

// 8-bit PNG. Gray and gray+alpha load as 1 channel, everything else as RGB;
// alpha is dropped and 16-bit samples are reduced to 8 bits. Samples map to
// [0, 1] as value / 255.
ImageBuffer read_png(const std::filesystem::path& path);

// Writes 1- or 3-channel images; samples are clamped to [0, 1] and rounded
// to the nearest of the 256 levels.
void write_png(const ImageBuffer& img, const std::filesystem::path& path);

}  // namespace nbd
