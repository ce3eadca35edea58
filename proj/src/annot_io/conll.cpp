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

#include "deid/annot_io/conll.hpp"

#include <cstdio>

#include "deid/core/error.hpp"
#include "deid/core/tokenize.hpp"
#include "deid/core/utf8.hpp"

namespace deid::annot_io {
namespace {

constexpr std::string_view kIdPrefix = "# id = ";

struct PendingDoc {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<BioLabel> labels;
  std::size_t first_line = 0;
  bool started = false;
};

std::string numbered_id(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "conll-%06zu", n);
  return buf;
}

}  // namespace

Corpus read_conll(std::string_view raw, const TagSchema& schema, BioMode mode) {
  utf8::require_valid(raw, "CoNLL input");
  Corpus corpus;
  corpus.schema = schema;
  PendingDoc pending;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (!pending.started) return;
    Document doc;
    doc.id = pending.id.empty() ? numbered_id(corpus.documents.size()) : pending.id;
    TokenSeq seq;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < pending.tokens.size(); ++k) {
      if (k > 0) {
        doc.text.push_back(' ');
        ++offset;
      }
      const auto len = utf8::length(pending.tokens[k]);
      seq.tokens.push_back(Token{pending.tokens[k], offset, offset + len});
      doc.text += pending.tokens[k];
      offset += len;
    }
    seq.labels = std::move(pending.labels);
    try {
      doc.entities = bio_to_spans(seq, doc.text, mode).spans;
    } catch (const Error& e) {
      SourceLocation where;
      where.line = pending.first_line + (e.where().offset ? *e.where().offset : 0);
      throw Error(e.code(), e.detail(), where);
    }
    corpus.documents.push_back(std::move(doc));
    pending = {};
  };

  std::size_t pos = 0;
  while (pos < raw.size()) {
    auto nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    std::string_view line = raw.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      flush();
      continue;
    }
    if (line.rfind(kIdPrefix, 0) == 0 && line.find('\t') == std::string_view::npos) {
      flush();
      pending.id = std::string(line.substr(kIdPrefix.size()));
      pending.started = true;
      pending.first_line = line_no + 1;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      SourceLocation where;
      where.line = line_no;
      throw Error(ErrorCode::kBadColumnCount, "expected exactly two tab-separated columns", where);
    }
    const auto token = line.substr(0, tab);
    const auto label_text = line.substr(tab + 1);
    const auto label = BioLabel::parse(label_text);
    SourceLocation where;
    where.line = line_no;
    if (token.empty()) throw Error(ErrorCode::kBadColumnCount, "empty token column", where);
    for (const char c : token) {
      if (c == ' ') throw Error(ErrorCode::kMalformedLine, "token contains a space", where);
    }
    if (!label) throw Error(ErrorCode::kInvalidBioSequence, "bad label '" + std::string(label_text) + "'", where);
    if (!label->is_outside() && !schema.contains(label->tag)) {
      throw Error(ErrorCode::kUnknownTag, "tag '" + label->tag + "' is not in schema '" + schema.name + "'", where);
    }
    if (!pending.started) {
      pending.started = true;
      pending.first_line = line_no;
    }
    pending.tokens.emplace_back(token);
    pending.labels.push_back(*label);
  }
  flush();
  return corpus;
}

std::string write_conll(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus.documents) {
    const auto seq = spans_to_bio(doc, tokenize(doc.text));
    out += kIdPrefix;
    out += doc.id;
    out += '\n';
    for (std::size_t k = 0; k < seq.tokens.size(); ++k) {
      out += seq.tokens[k].surface;
      out += '\t';
      out += (*seq.labels)[k].str();
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

}  // namespace deid::annot_io
