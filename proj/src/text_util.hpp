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

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nbd/error.hpp"

namespace nbd::detail {

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view token, std::string_view what) {
  T value{};
  const char* first = token.data();
  const char* last = first + token.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last)
    fail(ErrorCode::kFormat,
         std::string(what) + ": cannot parse '" + std::string(token) + "'");
  return value;
}

// Splits on runs of spaces/tabs. When max_fields > 0 the last field takes
// the remainder of the line verbatim.
inline std::vector<std::string> split_fields(std::string_view line, std::size_t max_fields = 0) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    if (max_fields > 0 && out.size() + 1 == max_fields) {
      std::size_t end = line.size();
      while (end > i && (line[end - 1] == '\r' || line[end - 1] == ' ')) --end;
      out.emplace_back(line.substr(i, end - i));
      break;
    }
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    out.emplace_back(line.substr(i, j - i));
    i = j;
    while (i < line.size() && line[i] == '\r') ++i;
  }
  return out;
}

}  // namespace nbd::detail
