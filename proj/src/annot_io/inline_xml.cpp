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

#include "deid/annot_io/inline_xml.hpp"

#include <cctype>

#include "deid/core/error.hpp"
#include "deid/core/utf8.hpp"

namespace deid::annot_io {
namespace {

bool starts_with_icase(std::string_view s, std::size_t pos, std::string_view lit) {
  if (pos + lit.size() > s.size()) return false;
  for (std::size_t k = 0; k < lit.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(s[pos + k])) !=
        std::tolower(static_cast<unsigned char>(lit[k]))) {
      return false;
    }
  }
  return true;
}

std::size_t find_icase(std::string_view s, std::string_view lit, std::size_t from = 0) {
  if (lit.empty()) return std::string_view::npos;
  for (std::size_t i = from; i + lit.size() <= s.size(); ++i) {
    if (starts_with_icase(s, i, lit)) return i;
  }
  return std::string_view::npos;
}

std::size_t skip_spaces(std::string_view s, std::size_t i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return i;
}

// Literal '<' sequences the reader would treat as markup.
bool looks_like_markup(std::string_view s, std::size_t i, const InlineXmlPolicy& policy) {
  return starts_with_icase(s, i, "<TYPE") || starts_with_icase(s, i, "</TYPE") ||
         starts_with_icase(s, i, policy.record_open) || starts_with_icase(s, i, policy.record_close);
}

class Parser {
 public:
  Parser(std::string_view raw, const InlineXmlPolicy& policy, const TagSchema& schema)
      : raw_(raw), policy_(policy), schema_(schema), raw_index_(raw) {}

  Document run(std::string id) {
    std::size_t body_begin = 0;
    std::size_t body_end = raw_.size();
    const auto open = find_icase(raw_, policy_.record_open);
    if (open == std::string_view::npos) {
      if (policy_.require_envelope) {
        throw Error(ErrorCode::kMissingEnvelope, "no " + policy_.record_open + " envelope found", at(0));
      }
    } else {
      body_begin = open + policy_.record_open.size();
      const auto close = find_icase(raw_, policy_.record_close, body_begin);
      if (close == std::string_view::npos) fail(open, "unclosed " + policy_.record_open + " envelope");
      const auto again = find_icase(raw_, policy_.record_open, body_begin);
      if (again != std::string_view::npos) fail(again, "more than one record envelope");
      body_end = close;
    }

    Document doc;
    doc.id = std::move(id);
    std::string& out = doc.text;
    bool in_entity = false;
    std::size_t entity_open_at = 0;   // raw byte offset of the open tag
    std::size_t entity_start = 0;     // output byte offset
    std::string entity_tag;
    struct ByteSpan {
      std::size_t b, e;
      std::string tag;
    };
    std::vector<ByteSpan> spans;

    std::size_t i = body_begin;
    while (i < body_end) {
      const char c = raw_[i];
      if (c == '&' && raw_.compare(i, 4, "&lt;") == 0) {
        out.push_back('<');
        i += 4;
      } else if (c == '&' && raw_.compare(i, 5, "&amp;") == 0) {
        out.push_back('&');
        i += 5;
      } else if (c == '<' && starts_with_icase(raw_, i, "</TYPE")) {
        std::size_t j = skip_spaces(raw_, i + 6);
        if (j >= body_end || raw_[j] != '>') fail(i, "malformed closing TYPE tag");
        if (!in_entity) fail(i, "closing TYPE tag without an open element");
        if (out.size() == entity_start) {
          throw Error(ErrorCode::kEmptyEntity, "TYPE element '" + entity_tag + "' has no text", at(entity_open_at));
        }
        spans.push_back({entity_start, out.size(), entity_tag});
        in_entity = false;
        i = j + 1;
      } else if (c == '<' && starts_with_icase(raw_, i, "<TYPE")) {
        if (in_entity) fail(i, "nested TYPE element inside '" + entity_tag + "'");
        entity_tag = read_open_tag(i, body_end, &i);
        entity_open_at = i;
        entity_start = out.size();
        in_entity = true;
      } else if (c == '<' && (starts_with_icase(raw_, i, policy_.record_open) ||
                              starts_with_icase(raw_, i, policy_.record_close))) {
        fail(i, "record marker inside the record body");
      } else {
        out.push_back(c);
        ++i;
      }
    }
    if (in_entity) fail(entity_open_at, "TYPE element '" + entity_tag + "' is never closed");

    utf8::require_valid(out, "inline XML text");
    const utf8::CharIndex index(out);
    for (auto& s : spans) {
      EntitySpan e;
      e.start = index.char_offset(s.b);
      e.end = index.char_offset(s.e);
      e.tag = std::move(s.tag);
      e.surface = out.substr(s.b, s.e - s.b);
      doc.entities.push_back(std::move(e));
    }
    return doc;
  }

 private:
  // Parses <TYPE='tag'> starting at `pos`; sets *next past '>'.
  std::string read_open_tag(std::size_t pos, std::size_t limit, std::size_t* next) {
    std::size_t j = skip_spaces(raw_, pos + 5);
    if (j >= limit || raw_[j] != '=') fail(pos, "TYPE tag without '='");
    j = skip_spaces(raw_, j + 1);
    if (j >= limit || (raw_[j] != '\'' && raw_[j] != '"')) fail(pos, "TYPE attribute is not quoted");
    const char quote = raw_[j];
    const auto end_quote = raw_.find(quote, j + 1);
    if (end_quote == std::string_view::npos || end_quote >= limit) fail(pos, "unterminated TYPE attribute");
    std::string tag(raw_.substr(j + 1, end_quote - j - 1));
    j = skip_spaces(raw_, end_quote + 1);
    if (j >= limit || raw_[j] != '>') fail(pos, "TYPE tag is not closed with '>'");
    if (tag.empty()) fail(pos, "empty TYPE attribute");
    *next = j + 1;

    if (!schema_.contains(tag)) {
      switch (policy_.unknown_tag_action) {
        case UnknownTagAction::kReject:
          throw Error(ErrorCode::kUnknownTag, "tag '" + tag + "' is not in schema '" + schema_.name + "'", at(pos));
        case UnknownTagAction::kMapToOthers:
          tag = schema_.other;
          break;
        case UnknownTagAction::kPassthrough:
          break;
      }
    }
    return tag;
  }

  SourceLocation at(std::size_t byte) const {
    SourceLocation where;
    where.offset = raw_index_.char_offset(byte);
    return where;
  }

  [[noreturn]] void fail(std::size_t byte, const std::string& msg) const {
    throw Error(ErrorCode::kMalformedMarkup, msg, at(byte));
  }

  std::string_view raw_;
  const InlineXmlPolicy& policy_;
  const TagSchema& schema_;
  utf8::CharIndex raw_index_;
};

void append_escaped(std::string& out, std::string_view text, const InlineXmlPolicy& policy) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '<' && looks_like_markup(text, i, policy)) {
      out += "&lt;";
    } else if (c == '&' && (text.compare(i, 4, "&lt;") == 0 || text.compare(i, 5, "&amp;") == 0)) {
      out += "&amp;";
    } else {
      out.push_back(c);
    }
  }
}

}  // namespace

Document parse_inline_xml(std::string_view raw, const InlineXmlPolicy& policy, const TagSchema& schema,
                          std::string id) {
  return Parser(raw, policy, schema).run(std::move(id));
}

std::string write_inline_xml(const Document& doc, const InlineXmlPolicy& policy) {
  const utf8::CharIndex index(doc.text);
  const std::string_view text = doc.text;
  std::string out = policy.record_open;
  std::size_t cursor = 0;
  for (const auto& e : doc.entities) {
    append_escaped(out, index.slice(text, cursor, e.start), policy);
    const bool has_single = e.tag.find('\'') != std::string::npos;
    if (has_single && e.tag.find('"') != std::string::npos) {
      throw Error(ErrorCode::kInvalidDocument, "tag '" + e.tag + "' contains both quote characters");
    }
    const char quote = has_single ? '"' : '\'';
    out += "<TYPE=";
    out += quote;
    out += e.tag;
    out += quote;
    out += '>';
    append_escaped(out, index.slice(text, e.start, e.end), policy);
    out += "</TYPE>";
    cursor = e.end;
  }
  append_escaped(out, index.slice(text, cursor, index.size()), policy);
  out += policy.record_close;
  return out;
}

}  // namespace deid::annot_io
