// Copyright 2026 The deid Authors.
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

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace deid::utf8 {

bool is_valid(std::string_view bytes);

// Throws Error(kInvalidUtf8) naming the first bad byte offset.
void require_valid(std::string_view bytes, std::string_view context = {});

std::size_t length(std::string_view bytes);

std::u32string decode(std::string_view bytes);
void append(std::string& out, char32_t cp);
std::string encode(std::u32string_view cps);

// Maps character (code point) offsets to byte offsets for one string.
// Character offsets are the canonical coordinate for every span in the
// toolkit; this is the single place where the two are reconciled.
class CharIndex {
 public:
  CharIndex() : starts_{0} {}
  explicit CharIndex(std::string_view text);

  std::size_t size() const { return starts_.size() - 1; }

  // Valid for 0 <= char_offset <= size().
  std::size_t byte_offset(std::size_t char_offset) const { return starts_.at(char_offset); }

  // Returns npos when byte_offset is not on a character boundary.
  std::size_t char_offset(std::size_t byte_offset) const;

  std::string_view slice(std::string_view text, std::size_t begin, std::size_t end) const {
    const auto b = byte_offset(begin);
    return text.substr(b, byte_offset(end) - b);
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::size_t> starts_;  // byte offset of each char, plus end sentinel
};

}  // namespace deid::utf8
