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

#include "deid/core/tokenize.hpp"

#include "deid/core/utf8.hpp"

namespace deid {

bool is_space(char32_t cp) {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_punct(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
      return true;
    default:
      return (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
             (cp >= 0x3001 && cp <= 0x3003);
  }
}

TokenSeq tokenize(std::string_view text) {
  const std::u32string cps = utf8::decode(text);
  TokenSeq seq;
  auto emit = [&](std::size_t b, std::size_t e) {
    seq.tokens.push_back(Token{utf8::encode(std::u32string_view(cps).substr(b, e - b)), b, e});
  };

  std::size_t i = 0;
  const std::size_t n = cps.size();
  while (i < n) {
    if (is_space(cps[i])) {
      ++i;
      continue;
    }
    std::size_t chunk_end = i;
    while (chunk_end < n && !is_space(cps[chunk_end])) ++chunk_end;

    std::size_t core_begin = i;
    while (core_begin < chunk_end && is_punct(cps[core_begin])) ++core_begin;
    if (core_begin == chunk_end) {
      emit(i, chunk_end);
    } else {
      std::size_t core_end = chunk_end;
      while (is_punct(cps[core_end - 1])) --core_end;
      if (core_begin > i) emit(i, core_begin);
      emit(core_begin, core_end);
      if (core_end < chunk_end) emit(core_end, chunk_end);
    }
    i = chunk_end;
  }
  return seq;
}

}  // namespace deid
