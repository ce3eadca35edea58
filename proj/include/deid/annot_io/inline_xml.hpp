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

#include "deid/core/types.hpp"

namespace deid::annot_io {

enum class UnknownTagAction { kReject, kMapToOthers, kPassthrough };

// The restricted inline dialect LLM outputs use:
//   <RECORD> ... <TYPE='Date'>25-08-2023</TYPE> ... </RECORD>
// Only TYPE elements and the record envelope are markup; any other '<' is
// text. "&lt;" and "&amp;" are decoded so that text containing marker-like
// sequences survives a write/parse round trip.
struct InlineXmlPolicy {
  std::string record_open = "<RECORD>";
  std::string record_close = "</RECORD>";
  UnknownTagAction unknown_tag_action = UnknownTagAction::kReject;
  bool require_envelope = false;

  static InlineXmlPolicy strict() {
    InlineXmlPolicy p;
    p.require_envelope = true;
    return p;
  }
  static InlineXmlPolicy lenient() { return {}; }
};

// Text outside the envelope (model chatter before/after) is dropped.
// Errors: kMalformedMarkup, kUnknownTag, kEmptyEntity, kMissingEnvelope; each
// carries the character offset into `raw`.
Document parse_inline_xml(std::string_view raw, const InlineXmlPolicy& policy,
                          const TagSchema& schema, std::string id = "doc");

std::string write_inline_xml(const Document& doc, const InlineXmlPolicy& policy = {});

}  // namespace deid::annot_io
