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

#include "deid/annot_io/jsonl.hpp"

#include <unordered_set>

#include "deid/core/error.hpp"
#include "deid/core/utf8.hpp"

namespace deid::annot_io {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::kMalformedLine, msg); }

std::size_t read_offset(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    bad(std::string("entity field '") + key + "' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

std::vector<Document> parse_lines(std::string_view raw, const TagSchema* schema) {
  utf8::require_valid(raw, "JSONL input");
  std::vector<Document> docs;
  std::unordered_set<std::string> ids;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < raw.size()) {
    auto nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    std::string_view line = raw.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    SourceLocation where;
    where.line = line_no;
    try {
      docs.push_back(document_from_json(json::parse(line)));
      validate_document(docs.back(), schema);
      if (!ids.insert(docs.back().id).second) {
        throw Error(ErrorCode::kInvalidDocument, "duplicate document id '" + docs.back().id + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedLine, e.what(), where);
    } catch (const Error& e) {
      throw Error(e.code(), e.detail(), where);
    }
  }
  return docs;
}

}  // namespace

nlohmann::ordered_json document_to_json(const Document& doc) {
  nlohmann::ordered_json j;
  j["id"] = doc.id;
  j["text"] = doc.text;
  auto entities = nlohmann::ordered_json::array();
  for (const auto& e : doc.entities) {
    nlohmann::ordered_json ej;
    ej["start"] = e.start;
    ej["end"] = e.end;
    ej["tag"] = e.tag;
    entities.push_back(std::move(ej));
  }
  j["entities"] = std::move(entities);
  auto meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : doc.meta) meta[k] = v;
  j["meta"] = std::move(meta);
  return j;
}

Document document_from_json(const json& j) {
  if (!j.is_object()) bad("record is not a JSON object");
  static const std::unordered_set<std::string> kFields{"id", "text", "entities", "meta"};
  for (const auto& [key, _] : j.items()) {
    if (!kFields.count(key)) bad("unexpected field '" + key + "'");
  }
  for (const auto& f : kFields) {
    if (!j.contains(f)) bad("missing field '" + f + "'");
  }
  if (!j["id"].is_string() || !j["text"].is_string()) bad("id and text must be strings");
  if (!j["entities"].is_array()) bad("entities must be an array");
  if (!j["meta"].is_object()) bad("meta must be an object");

  Document doc;
  doc.id = j["id"].get<std::string>();
  doc.text = j["text"].get<std::string>();
  const utf8::CharIndex index(doc.text);
  for (const auto& ej : j["entities"]) {
    if (!ej.is_object()) bad("entity is not an object");
    for (const auto& [key, _] : ej.items()) {
      if (key != "start" && key != "end" && key != "tag") bad("unexpected entity field '" + key + "'");
    }
    EntitySpan e;
    e.start = read_offset(ej, "start");
    e.end = read_offset(ej, "end");
    if (!ej.contains("tag") || !ej["tag"].is_string()) bad("entity tag must be a string");
    e.tag = ej["tag"].get<std::string>();
    if (e.start >= e.end || e.end > index.size()) {
      SourceLocation where;
      where.offset = e.start;
      throw Error(ErrorCode::kInvalidDocument,
                  "entity [" + std::to_string(e.start) + ", " + std::to_string(e.end) + ") is out of range", where);
    }
    e.surface = std::string(index.slice(doc.text, e.start, e.end));
    doc.entities.push_back(std::move(e));
  }
  for (const auto& [k, v] : j["meta"].items()) {
    if (!v.is_string()) bad("meta value for '" + k + "' must be a string");
    doc.meta[k] = v.get<std::string>();
  }
  return doc;
}

Corpus read_jsonl(std::string_view raw, const TagSchema& schema) {
  Corpus corpus{parse_lines(raw, &schema), schema};
  return corpus;
}

Corpus read_jsonl_infer(std::string_view raw, std::string schema_name) {
  Corpus corpus;
  corpus.documents = parse_lines(raw, nullptr);
  corpus.schema = infer_schema(std::move(schema_name), corpus.documents);
  return corpus;
}

std::string write_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus.documents) {
    out += document_to_json(doc).dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
    out += '\n';
  }
  return out;
}

}  // namespace deid::annot_io
