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

#include <string>
#include <string_view>

#include "deid/core/bio.hpp"
#include "deid/core/types.hpp"

namespace deid::annot_io {

// Two tab-separated columns, "token<TAB>label", LF line endings, one blank
// line after each document. An optional "# id = <id>" line may open a
// document; documents without one are numbered conll-000000, conll-000001...
// Text is rebuilt by joining tokens with single spaces, so original spacing
// is not preserved.
Corpus read_conll(std::string_view raw, const TagSchema& schema, BioMode mode = BioMode::kStrict);

// Requires token-aligned entities (spans_to_bio must succeed).
std::string write_conll(const Corpus& corpus);

}  // namespace deid::annot_io
