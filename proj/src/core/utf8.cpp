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

#include "deid/core/utf8.hpp"

#include <algorithm>

#include "deid/core/error.hpp"

namespace deid::utf8 {
namespace {

// Length of the sequence starting at bytes[i], or 0 when invalid.
std::size_t sequence_length(std::string_view bytes, std::size_t i, char32_t* cp_out) {
  const auto b0 = static_cast<unsigned char>(bytes[i]);
  std::size_t len;
  char32_t cp;
  if (b0 < 0x80) {
    *cp_out = b0;
    return 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return 0;
  }
  if (i + len > bytes.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(bytes[i + k]);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  // overlong forms, surrogates, out of range
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return 0;
  if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  *cp_out = cp;
  return len;
}

std::size_t first_invalid(std::string_view bytes) {
  std::size_t i = 0;
  char32_t cp;
  while (i < bytes.size()) {
    const auto n = sequence_length(bytes, i, &cp);
    if (n == 0) return i;
    i += n;
  }
  return std::string_view::npos;
}

}  // namespace

bool is_valid(std::string_view bytes) { return first_invalid(bytes) == std::string_view::npos; }

void require_valid(std::string_view bytes, std::string_view context) {
  const auto bad = first_invalid(bytes);
  if (bad == std::string_view::npos) return;
  std::string msg = "invalid UTF-8 byte at byte offset " + std::to_string(bad);
  if (!context.empty()) msg += " in " + std::string(context);
  throw Error(ErrorCode::kInvalidUtf8, msg);
}

std::size_t length(std::string_view bytes) {
  std::size_t n = 0;
  for (const char c : bytes) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::u32string decode(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  char32_t cp;
  while (i < bytes.size()) {
    const auto n = sequence_length(bytes, i, &cp);
    if (n == 0) {
      throw Error(ErrorCode::kInvalidUtf8, "invalid UTF-8 byte at byte offset " + std::to_string(i));
    }
    out.push_back(cp);
    i += n;
  }
  return out;
}

void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (const char32_t cp : cps) append(out, cp);
  return out;
}

CharIndex::CharIndex(std::string_view text) {
  starts_.reserve(text.size() + 1);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) starts_.push_back(i);
  }
  starts_.push_back(text.size());
}

std::size_t CharIndex::char_offset(std::size_t byte_offset) const {
  const auto it = std::lower_bound(starts_.begin(), starts_.end(), byte_offset);
  if (it == starts_.end() || *it != byte_offset) return npos;
  return static_cast<std::size_t>(it - starts_.begin());
}

}  // namespace deid::utf8
