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

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "deid/core/types.hpp"

namespace deid::recognize {
class RuleRecognizer;
}

namespace deid::mock {

// Scripted misbehaviour, keyed by request id:
//   fail          {"id", "error"}
//   timeout       never answers (in-process: throws Error(kTimeout))
//   malformed     recognize: no payload; generate: an unclosed TYPE element
//   short         generate: a ten-token record
//   no_envelope   generate: the record without <RECORD> tags
//   gibberish     generate: a record padded with control characters
//   repeat        generate: one word over and over inside a record
//   out_of_range  recognize: a span past the end of the text
//   tokens        recognize: BIO tokens instead of spans
//   bad_id        answers with a different id
struct MockConfig {
  std::map<std::string, Document> gold;  // recognize answers by id when the text matches
  std::map<std::string, std::string> script;
  std::size_t embed_dim = 64;

  // {"gold": jsonl path, "script": {id: action} | path, "embed_dim": n}
  static MockConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static MockConfig load(const std::filesystem::path& path);
};

// Answers the three request shapes of the wire protocol deterministically:
// {id, text} recognize, {id, prompt} generate and {id, tokens} embed.
// Recognize echoes gold spans when known, otherwise runs the built-in rules.
// Generate echoes the last <RECORD>...</RECORD> block found in the prompt.
class MockBackend {
 public:
  explicit MockBackend(MockConfig config = {});
  ~MockBackend();
  MockBackend(MockBackend&&) noexcept;

  nlohmann::json handle(const nlohmann::json& request) const;
  // The scripted action for an id, or "" when none.
  std::string action(const std::string& id) const;

 private:
  MockConfig config_;
  std::unique_ptr<recognize::RuleRecognizer> rules_;
};

}  // namespace deid::mock
