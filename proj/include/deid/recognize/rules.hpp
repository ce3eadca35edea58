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
#include <memory>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "deid/core/types.hpp"

namespace deid::recognize {

struct PatternRule {
  TagId tag;
  std::string regex;  // ECMAScript
  int group = 0;      // capture group that becomes the span
  bool icase = false;

  friend bool operator==(const PatternRule&, const PatternRule&) = default;
};

// Whole-word, ASCII case-insensitive phrase list.
struct LexiconRule {
  TagId tag;
  std::vector<std::string> entries;

  friend bool operator==(const LexiconRule&, const LexiconRule&) = default;
};

struct Rulebook {
  TagSchema schema;
  // Tie-break order for overlapping matches of equal length and start.
  std::vector<TagId> priority;
  std::vector<PatternRule> patterns;
  std::vector<LexiconRule> lexicons;

  // Keys: schema (name of a built-in schema or {name, tags, other}),
  // priority, patterns, lexicons. A lexicon may give "path" (relative to
  // base_dir) instead of "entries".
  static Rulebook from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  nlohmann::json to_json() const;

  friend bool operator==(const Rulebook&, const Rulebook&) = default;
};

const Rulebook& builtin_rulebook();
Rulebook load_rulebook(const std::filesystem::path& path);

// A compiled rulebook. Throws InvalidPattern for a bad regex or group index
// and InvalidConfig for tags missing from the schema or priority list.
class RuleRecognizer {
 public:
  explicit RuleRecognizer(Rulebook book);

  // Non-overlapping spans sorted by start. Overlaps resolve to the longest
  // match, then the earlier start, then the tag listed first in priority.
  std::vector<EntitySpan> recognize(std::string_view text) const;

  const Rulebook& rulebook() const { return book_; }

 private:
  struct Compiled;
  Rulebook book_;
  std::shared_ptr<const std::vector<Compiled>> compiled_;
};

std::vector<EntitySpan> recognize_rules(std::string_view text, const RuleRecognizer& recognizer);

}  // namespace deid::recognize
