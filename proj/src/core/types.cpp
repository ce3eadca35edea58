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

#include "deid/core/types.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "deid/core/error.hpp"
#include "deid/core/utf8.hpp"

namespace deid {

bool TagSchema::contains(std::string_view tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

std::vector<TagId> TagSchema::phi_tags() const {
  std::vector<TagId> out;
  for (const auto& t : tags) {
    if (t != other) out.push_back(t);
  }
  return out;
}

void TagSchema::validate() const {
  if (!contains(other)) {
    throw Error(ErrorCode::kInvalidConfig, "schema '" + name + "' does not contain its catch-all tag '" + other + "'");
  }
  std::unordered_set<std::string> seen;
  for (const auto& t : tags) {
    if (t.empty()) throw Error(ErrorCode::kInvalidConfig, "schema '" + name + "' has an empty tag");
    if (!seen.insert(t).second) {
      throw Error(ErrorCode::kInvalidConfig, "schema '" + name + "' repeats tag '" + t + "'");
    }
  }
}

const TagSchema& canonical_schema() {
  static const TagSchema schema{
      "canonical-9",
      {"CONTACT", "PATIENT", "DOCTOR", "ID", "DATE", "LOCATION", "HOSPITAL", "AGE", "OTHERS"},
      "OTHERS"};
  return schema;
}

TagSchema infer_schema(std::string name, const std::vector<Document>& docs, const TagId& other) {
  std::set<TagId> seen;
  for (const auto& d : docs) {
    for (const auto& e : d.entities) seen.insert(e.tag);
  }
  seen.erase(other);
  TagSchema schema{std::move(name), {seen.begin(), seen.end()}, other};
  schema.tags.push_back(other);
  return schema;
}

std::string BioLabel::str() const {
  switch (kind) {
    case Kind::kOutside: return "O";
    case Kind::kBegin: return "B-" + tag;
    case Kind::kInside: return "I-" + tag;
  }
  return "O";
}

std::optional<BioLabel> BioLabel::parse(std::string_view s) {
  if (s == "O") return outside();
  if (s.size() < 3 || s[1] != '-') return std::nullopt;
  std::string tag(s.substr(2));
  if (s[0] == 'B') return begin(std::move(tag));
  if (s[0] == 'I') return inside(std::move(tag));
  return std::nullopt;
}

EntitySpan make_span(std::string_view text, std::size_t start, std::size_t end, TagId tag) {
  const utf8::CharIndex index(text);
  return EntitySpan{start, end, std::move(tag), std::string(index.slice(text, start, end))};
}

void validate_document(const Document& doc, const TagSchema* schema) {
  auto fail = [&](const std::string& msg, std::optional<std::size_t> offset = std::nullopt) {
    SourceLocation where;
    where.offset = offset;
    throw Error(ErrorCode::kInvalidDocument, "document '" + doc.id + "': " + msg, where);
  };
  if (doc.id.empty()) fail("empty document id");
  if (!utf8::is_valid(doc.text)) fail("text is not valid UTF-8");
  const utf8::CharIndex index(doc.text);
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < doc.entities.size(); ++i) {
    const auto& e = doc.entities[i];
    if (e.start >= e.end) fail("entity " + std::to_string(i) + " has start >= end", e.start);
    if (e.end > index.size()) fail("entity " + std::to_string(i) + " ends past the text", e.end);
    if (e.start < prev_end) fail("entity " + std::to_string(i) + " overlaps or precedes its predecessor", e.start);
    if (index.slice(doc.text, e.start, e.end) != e.surface) {
      fail("entity " + std::to_string(i) + " surface does not match the text", e.start);
    }
    if (schema != nullptr && !schema->contains(e.tag)) {
      fail("entity tag '" + e.tag + "' is not in schema '" + schema->name + "'", e.start);
    }
    prev_end = e.end;
  }
}

void validate_corpus(const Corpus& corpus) {
  std::unordered_set<std::string> ids;
  for (const auto& d : corpus.documents) {
    validate_document(d, &corpus.schema);
    if (!ids.insert(d.id).second) {
      throw Error(ErrorCode::kInvalidDocument, "duplicate document id '" + d.id + "'");
    }
  }
}

void sort_entities(std::vector<EntitySpan>& spans) {
  std::stable_sort(spans.begin(), spans.end(),
                   [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
}

}  // namespace deid
