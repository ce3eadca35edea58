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

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "deid/core/types.hpp"

namespace deid::tagmap {

// Case-insensitive key with spaces, hyphens and underscores unified:
// "Phone No", "phone_no" and "PHONE-NO" all become "PHONE_NO".
std::string normalize_tag(std::string_view tag);

// Total mapping from a source inventory into a target schema.
class TagMap {
 public:
  TagMap() = default;
  TagMap(TagSchema source, TagSchema target, std::map<std::string, TagId> rules, TagId fallback);

  const TagSchema& source() const { return source_; }
  const TagSchema& target() const { return target_; }
  const TagId& fallback() const { return fallback_; }
  // Keyed by normalize_tag(source tag).
  const std::map<std::string, TagId>& rules() const { return rules_; }

  // Returns nullptr when no rule matches.
  const TagId* find_rule(std::string_view source_tag) const;
  TagId map(std::string_view source_tag) const;

  // {"source": schema, "target": schema, "rules": {...}, "default": tag}
  nlohmann::ordered_json to_json() const;
  static TagMap from_json(const nlohmann::json& j);

 private:
  TagSchema source_;
  TagSchema target_;
  std::map<std::string, TagId> rules_;
  TagId fallback_;
};

struct MappingAudit {
  std::map<TagId, std::size_t> rule_hits;     // by source tag
  std::map<TagId, std::size_t> default_hits;  // by source tag, mapped to the default
  std::size_t total_entities = 0;

  nlohmann::ordered_json to_json() const;
};

struct MappedCorpus {
  Corpus corpus;
  MappingAudit audit;
};

MappedCorpus apply_tagmap(const Corpus& corpus, const TagMap& map);

// The canonical source-tag table as (source tag, canonical tag) rows, in
// table order. Duplicated sources appear once, resolved as documented in the
// README ("Contact Information" goes to CONTACT).
const std::vector<std::pair<std::string, TagId>>& canonical_table();

// Rules for every inventory tag found in the table (plus identity rules for
// the canonical tags themselves); everything else falls to OTHERS. Overrides
// replace table entries, keyed by any spelling of the source tag.
TagMap builtin_canonical_map(const std::vector<TagId>& source_inventory,
                             const std::map<std::string, TagId>& overrides = {});

// The six-tag comparison schema used against third-party recognizers:
// DATE, NAME, LOCATION, AGE, ID, CONTACT (+ OTHERS as catch-all).
const TagSchema& comparison_schema();

struct NormalizationPolicy {
  // Matched case-insensitively at the start of NAME spans, followed by an
  // optional '.' and any whitespace.
  std::vector<std::string> title_lexicon{"Dr", "Mr", "Mrs", "Ms", "Prof", "B/O"};
  TagId name_tag = "NAME";
};

struct ComparisonMapping {
  TagMap map;
  NormalizationPolicy policy;
};

ComparisonMapping commercial_comparison_map();

struct TitleStripAudit {
  std::size_t stripped = 0;
  std::size_t dropped = 0;  // spans that were nothing but a title
};

// Shrinks a span's start past leading titles. Returns false when nothing but
// title remains.
bool strip_titles(std::string_view text, EntitySpan& span, const NormalizationPolicy& policy);

// apply_tagmap followed by title stripping on name spans.
MappedCorpus apply_comparison(const Corpus& corpus, const ComparisonMapping& mapping,
                              TitleStripAudit* strip_audit = nullptr);

struct TagCount {
  std::size_t entities = 0;
  std::size_t tokens = 0;
};

struct TagDistribution {
  std::map<TagId, TagCount> per_tag;  // every schema tag, zeros included
  std::size_t total_entities = 0;
  std::size_t total_entity_tokens = 0;

  nlohmann::ordered_json to_json() const;
  std::string to_table(const TagSchema& schema) const;
};

// Token counts are tokens of each entity's surface under the core tokenizer.
TagDistribution tag_distribution(const Corpus& corpus);

}  // namespace deid::tagmap
