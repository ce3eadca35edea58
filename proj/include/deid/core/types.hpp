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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deid {

using TagId = std::string;

// Half-open character range [start, end) over Document::text.
struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  TagId tag;
  std::string surface;

  std::size_t length() const { return end - start; }
  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

struct Document {
  std::string id;
  std::string text;
  std::vector<EntitySpan> entities;
  std::map<std::string, std::string> meta;

  friend bool operator==(const Document&, const Document&) = default;
};

// A closed tag inventory with a designated non-PHI catch-all.
struct TagSchema {
  std::string name;
  std::vector<TagId> tags;
  TagId other;

  bool contains(std::string_view tag) const;
  // Tags other than the catch-all, in declaration order.
  std::vector<TagId> phi_tags() const;
  // Throws Error(kInvalidConfig) when other is missing or tags repeat.
  void validate() const;

  friend bool operator==(const TagSchema&, const TagSchema&) = default;
};

// CONTACT, PATIENT, DOCTOR, ID, DATE, LOCATION, HOSPITAL, AGE, OTHERS.
const TagSchema& canonical_schema();

// Collects every tag used in docs (sorted), plus `other`.
TagSchema infer_schema(std::string name, const std::vector<Document>& docs,
                       const TagId& other = "OTHERS");

struct Corpus {
  std::vector<Document> documents;
  TagSchema schema;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct Token {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

struct BioLabel {
  enum class Kind { kOutside, kBegin, kInside };
  Kind kind = Kind::kOutside;
  TagId tag;  // empty for O

  static BioLabel outside() { return {}; }
  static BioLabel begin(TagId t) { return {Kind::kBegin, std::move(t)}; }
  static BioLabel inside(TagId t) { return {Kind::kInside, std::move(t)}; }

  bool is_outside() const { return kind == Kind::kOutside; }
  std::string str() const;
  // Accepts "O", "B-TAG", "I-TAG". Returns nullopt for anything else.
  static std::optional<BioLabel> parse(std::string_view s);

  friend bool operator==(const BioLabel&, const BioLabel&) = default;
};

struct TokenSeq {
  std::vector<Token> tokens;
  std::optional<std::vector<BioLabel>> labels;

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

// Builds a span over text[start, end) with its surface filled in.
EntitySpan make_span(std::string_view text, std::size_t start, std::size_t end, TagId tag);

// Checks the Document invariants: UTF-8 text, non-empty id, spans in range,
// surfaces matching text, sorted and non-overlapping, and (when given) tags
// drawn from the schema. Throws Error(kInvalidDocument) with the offending
// character offset.
void validate_document(const Document& doc, const TagSchema* schema = nullptr);

// validate_document on each document plus id uniqueness.
void validate_corpus(const Corpus& corpus);

// Stable sort by start offset.
void sort_entities(std::vector<EntitySpan>& spans);

}  // namespace deid
