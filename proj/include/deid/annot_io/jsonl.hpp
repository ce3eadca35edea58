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

#include <nlohmann/json.hpp>

#include "deid/core/types.hpp"

namespace deid::annot_io {

// One object per line with exactly the fields id, text, entities, meta:
//   {"id":"d1","text":"...","entities":[{"start":0,"end":5,"tag":"DATE"}],"meta":{}}
// Offsets are character offsets. Output is compact, UTF-8, LF-terminated.
Corpus read_jsonl(std::string_view raw, const TagSchema& schema);

// Reads without a known schema; the schema is inferred from the tags seen.
Corpus read_jsonl_infer(std::string_view raw, std::string schema_name = "inferred");

std::string write_jsonl(const Corpus& corpus);

nlohmann::ordered_json document_to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j);

}  // namespace deid::annot_io
