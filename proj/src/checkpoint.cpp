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

#include "nbd/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "nbd/error.hpp"

namespace nbd {

namespace {

constexpr char kMagic[4] = {'N', 'B', 'D', 'W'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n)
      fail(ErrorCode::kFormat, "checkpoint truncated at byte " + std::to_string(pos_));
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  const std::uint8_t* take(std::size_t n) {
    need(n);
    const std::uint8_t* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(const std::uint8_t* p, std::size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large tensors.
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = crc32(c, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params) {
  params.arch.validate();
  Writer w;
  w.bytes(kMagic, 4);
  w.le<std::uint16_t>(kCheckpointVersion);
  w.le<std::uint16_t>(static_cast<std::uint16_t>(params.arch.depth));
  w.le<std::uint16_t>(static_cast<std::uint16_t>(params.arch.base_channels));
  w.le<std::uint16_t>(static_cast<std::uint16_t>(params.arch.in_channels));
  w.le<std::uint16_t>(static_cast<std::uint16_t>(params.arch.out_channels));
  w.le<std::uint8_t>(static_cast<std::uint8_t>(params.arch.padding));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(params.tensors.size()));
  for (const Tensor& t : params.tensors) {
    w.le<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.le<std::uint8_t>(static_cast<std::uint8_t>(t.shape.size()));
    for (int d : t.shape) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
    const std::size_t start = w.buffer().size();
    for (double v : t.data) w.f32(static_cast<float>(v));
    const std::uint32_t sum = crc(w.buffer().data() + start, w.buffer().size() - start);
    w.le<std::uint32_t>(sum);
  }
  return std::move(w.buffer());
}

ModelParams deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  const std::uint8_t* magic = r.take(4);
  if (std::memcmp(magic, kMagic, 4) != 0) fail(ErrorCode::kFormat, "not a checkpoint (bad magic)");
  const auto version = r.le<std::uint16_t>();
  if (version != kCheckpointVersion)
    fail(ErrorCode::kVersionMismatch, "checkpoint version " + std::to_string(version) +
                                          " is not supported (expected " +
                                          std::to_string(kCheckpointVersion) + ")");
  ModelParams p;
  p.arch.depth = r.le<std::uint16_t>();
  p.arch.base_channels = r.le<std::uint16_t>();
  p.arch.in_channels = r.le<std::uint16_t>();
  p.arch.out_channels = r.le<std::uint16_t>();
  const auto pad = r.le<std::uint8_t>();
  if (pad > 1) fail(ErrorCode::kFormat, "checkpoint: unknown padding mode");
  p.arch.padding = static_cast<Padding>(pad);
  try {
    p.arch.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kArchMismatch, std::string("checkpoint: ") + e.what());
  }
  const auto layout = tensor_layout(p.arch);

  const auto count = r.le<std::uint32_t>();
  if (count != layout.size())
    fail(ErrorCode::kArchMismatch, "checkpoint holds " + std::to_string(count) +
                                       " tensors, architecture needs " +
                                       std::to_string(layout.size()));
  p.tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor t;
    const auto name_len = r.le<std::uint16_t>();
    const std::uint8_t* name = r.take(name_len);
    t.name.assign(reinterpret_cast<const char*>(name), name_len);
    const auto rank = r.le<std::uint8_t>();
    std::size_t numel = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      t.shape.push_back(static_cast<int>(r.le<std::uint32_t>()));
      numel *= static_cast<std::size_t>(t.shape.back());
    }
    if (t.name != layout[i].name || t.shape != layout[i].shape)
      fail(ErrorCode::kArchMismatch, "checkpoint tensor '" + t.name +
                                         "' does not match the architecture (expected '" +
                                         layout[i].name + "')");
    r.need(numel * 4 + 4);
    const std::uint8_t* payload = r.take(numel * 4);
    const auto stored = r.le<std::uint32_t>();
    if (crc(payload, numel * 4) != stored)
      fail(ErrorCode::kChecksumMismatch, "checkpoint tensor '" + t.name + "' failed its CRC32 check");
    t.data.resize(numel);
    for (std::size_t k = 0; k < numel; ++k) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(payload[4 * k + b]) << (8 * b);
      t.data[k] = static_cast<double>(std::bit_cast<float>(bits));
    }
    p.tensors.push_back(std::move(t));
  }
  if (!r.at_end()) fail(ErrorCode::kFormat, "checkpoint has trailing bytes");
  if (!p.all_finite()) fail(ErrorCode::kNumeric, "checkpoint contains non-finite parameters");
  return p;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(params);
  // Write-then-rename keeps the previous checkpoint intact on failure.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::kIo, "failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kIo, "cannot move checkpoint into place: " + ec.message());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace nbd
