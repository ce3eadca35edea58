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

#include "deid/core/bio.hpp"

#include <algorithm>

#include "deid/core/error.hpp"
#include "deid/core/utf8.hpp"

namespace deid {
namespace {

[[noreturn]] void misaligned(const EntitySpan& e, const std::string& why) {
  SourceLocation where;
  where.offset = e.start;
  throw Error(ErrorCode::kEntityTokenMisalignment,
              "entity [" + std::to_string(e.start) + ", " + std::to_string(e.end) + ") " + e.tag +
                  " " + why,
              where);
}

[[noreturn]] void invalid_sequence(std::size_t index, const BioLabel& label, const std::string& prev) {
  SourceLocation where;
  where.offset = index;
  throw Error(ErrorCode::kInvalidBioSequence,
              "token " + std::to_string(index) + " label " + label.str() + " follows " + prev, where);
}

}  // namespace

TokenSeq spans_to_bio(const Document& doc, const TokenSeq& toks) {
  TokenSeq out = toks;
  std::vector<BioLabel> labels(toks.tokens.size());
  const auto& tokens = toks.tokens;

  for (const auto& e : doc.entities) {
    auto it = std::partition_point(tokens.begin(), tokens.end(),
                                   [&](const Token& t) { return t.end <= e.start; });
    bool first = true;
    for (; it != tokens.end() && it->start < e.end; ++it) {
      if (it->start < e.start) misaligned(e, "starts inside token '" + it->surface + "'");
      if (it->end > e.end) misaligned(e, "ends inside token '" + it->surface + "'");
      auto& slot = labels[static_cast<std::size_t>(it - tokens.begin())];
      if (!slot.is_outside()) misaligned(e, "overlaps another entity on token '" + it->surface + "'");
      slot = first ? BioLabel::begin(e.tag) : BioLabel::inside(e.tag);
      first = false;
    }
    if (first) misaligned(e, "covers no token");
  }
  out.labels = std::move(labels);
  return out;
}

void validate_bio(const std::vector<BioLabel>& labels) {
  const BioLabel* prev = nullptr;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    if (l.kind == BioLabel::Kind::kInside) {
      if (prev == nullptr || prev->is_outside()) invalid_sequence(i, l, prev ? "O" : "sequence start");
      if (prev->tag != l.tag) invalid_sequence(i, l, prev->str());
    }
    prev = &l;
  }
}

BioDecodeResult bio_to_spans(const TokenSeq& toks, std::string_view text, BioMode mode) {
  BioDecodeResult result;
  if (!toks.labels) return result;
  const auto& labels = *toks.labels;
  if (labels.size() != toks.tokens.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(labels.size()) + " labels for " +
                                                std::to_string(toks.tokens.size()) + " tokens");
  }
  const utf8::CharIndex index(text);

  bool open = false;
  EntitySpan current;
  auto close = [&] {
    if (!open) return;
    current.surface = std::string(index.slice(text, current.start, current.end));
    result.spans.push_back(std::move(current));
    current = {};
    open = false;
  };

  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    const auto& t = toks.tokens[i];
    if (t.end > index.size() || t.start >= t.end) {
      SourceLocation where;
      where.offset = t.start;
      throw Error(ErrorCode::kSpanOutOfRange, "token " + std::to_string(i) + " lies outside the text", where);
    }
    switch (l.kind) {
      case BioLabel::Kind::kOutside:
        close();
        break;
      case BioLabel::Kind::kBegin:
        close();
        current = EntitySpan{t.start, t.end, l.tag, {}};
        open = true;
        break;
      case BioLabel::Kind::kInside:
        if (open && current.tag == l.tag) {
          current.end = t.end;
          break;
        }
        if (mode == BioMode::kStrict) {
          invalid_sequence(i, l, open ? BioLabel::inside(current.tag).str() : (i == 0 ? "sequence start" : "O"));
        }
        result.warnings.push_back("token " + std::to_string(i) + ": dangling " + l.str() +
                                  " repaired to B-" + l.tag);
        close();
        current = EntitySpan{t.start, t.end, l.tag, {}};
        open = true;
        break;
    }
  }
  close();
  return result;
}

std::vector<TagId> token_tags(const std::vector<Token>& tokens, const std::vector<EntitySpan>& spans,
                              const TagId& other) {
  std::vector<TagId> tags(tokens.size(), other);
  std::vector<bool> assigned(tokens.size(), false);
  for (const auto& e : spans) {
    auto it = std::partition_point(tokens.begin(), tokens.end(),
                                   [&](const Token& t) { return t.end <= e.start; });
    for (; it != tokens.end() && it->start < e.end; ++it) {
      const auto k = static_cast<std::size_t>(it - tokens.begin());
      if (!assigned[k]) {
        tags[k] = e.tag;
        assigned[k] = true;
      }
    }
  }
  return tags;
}

}  // namespace deid
