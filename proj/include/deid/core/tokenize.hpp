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

#include <string_view>

#include "deid/core/types.hpp"

namespace deid {

bool is_space(char32_t cp);
bool is_punct(char32_t cp);

// Splits on whitespace, then peels leading and trailing punctuation runs off
// each whitespace-delimited chunk as separate tokens. Punctuation strictly
// inside a chunk stays attached ("120/80", "25-08-2023"). A chunk made only
// of punctuation is one token. Offsets are character offsets.
TokenSeq tokenize(std::string_view text);

}  // namespace deid
