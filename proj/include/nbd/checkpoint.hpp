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
#include <filesystem>
#include <string>
#include <vector>

#include "nbd/unet.hpp"

namespace nbd {

inline constexpr std::uint16_t kCheckpointVersion = 1;

// Little-endian layout:
//   "NBDW" | u16 version
//   u16 depth | u16 base | u16 in | u16 out | u8 padding
//   u32 tensor count
//   per tensor: u16 name length | name | u8 rank | u32 dims[rank]
//               | f32 values[prod(dims)] | u32 crc32(values bytes)
// Parameters are stored as float32; anything produced by init_params or
// the trainer is float32-representable and round-trips bit-exactly.
std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params);
ModelParams deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace nbd
