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
#include <vector>

#include "deid/core/types.hpp"

namespace deid {

enum class BioMode { kStrict, kLenient };

// Labels each token B-T/I-T/O from the document's entities. Every entity
// boundary must fall on a token boundary; otherwise throws
// Error(kEntityTokenMisalignment) carrying the entity's offsets.
TokenSeq spans_to_bio(const Document& doc, const TokenSeq& toks);

struct BioDecodeResult {
  std::vector<EntitySpan> spans;
  std::vector<std::string> warnings;
};

// Turns maximal B/I runs into spans covering first-token start to last-token
// end. An I-T that does not continue a T run is an error in strict mode; in
// lenient mode it opens a new T span and adds a warning.
BioDecodeResult bio_to_spans(const TokenSeq& toks, std::string_view text,
                             BioMode mode = BioMode::kStrict);

// Checks the label invariants without building spans; used by readers.
void validate_bio(const std::vector<BioLabel>& labels);

// Token-level tag for each token: the tag of the span overlapping it, or
// `other` when none does. Tolerates spans that split tokens, which makes it
// usable on predictions from arbitrary backends.
std::vector<TagId> token_tags(const std::vector<Token>& tokens,
                              const std::vector<EntitySpan>& spans, const TagId& other);

}  // namespace deid
