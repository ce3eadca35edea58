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

#include <chrono>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deid/core/bio.hpp"
#include "deid/core/error.hpp"
#include "deid/core/types.hpp"
#include "deid/recognize/rules.hpp"
#include "deid/recognize/transport.hpp"

namespace deid::recognize {

struct RecognizerBackend {
  enum class Kind { kBuiltinRules, kExternal };
  Kind kind = Kind::kBuiltinRules;
  std::string name = "builtin-rules";
  std::string endpoint;  // external only
  std::chrono::milliseconds timeout{30000};
  unsigned retry = 0;        // extra attempts after a timeout or transport failure
  unsigned concurrency = 4;  // requests in flight
  unsigned repeats = 1;      // >1 records one prediction set per repeat
  TagSchema schema = canonical_schema();  // tags the backend emits
};

struct Prediction {
  std::string doc_id;
  std::vector<EntitySpan> spans;
  double latency_ms = 0;
  std::string backend_name;
  unsigned repeat = 0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct Exclusion {
  std::string doc_id;
  ErrorCode code = ErrorCode::kBackendError;
  std::string reason;
  unsigned repeat = 0;
};

struct RunReport {
  std::string backend_name;
  std::size_t documents = 0;  // requests scheduled: docs x repeats
  std::size_t requests = 0;   // including retries
  std::size_t retries = 0;
  std::vector<Prediction> predictions;  // in input order, then repeat
  std::vector<Exclusion> excluded;

  // Latencies are left out unless asked for so reports can be compared byte
  // for byte.
  nlohmann::json to_json(bool with_latency = false) const;
};

// Validates token-form output against the request text and decodes it with
// lenient BIO repair. Throws SpanOutOfRange for tokens outside the text or
// whose surface does not match.
BioDecodeResult align_token_predictions(std::string_view text, const std::vector<Token>& tokens,
                                        const std::vector<BioLabel>& labels);

// Checks one wire response against its request text. Throws ProtocolViolation,
// SpanOutOfRange or BackendError.
std::vector<EntitySpan> decode_response(const nlohmann::json& response, const Document& doc,
                                        const TagSchema& schema);

// One request per document (per repeat). Failures are recorded per document
// and never stop the run.
RunReport recognize_external(const std::vector<Document>& docs, const RecognizerBackend& backend,
                             Transport& transport);

RunReport recognize_builtin(const std::vector<Document>& docs, const RuleRecognizer& recognizer,
                            const std::string& name = "builtin-rules");

// Documents carrying the predicted spans (repeat 0) in place of gold ones.
Corpus predictions_to_corpus(const std::vector<Document>& docs, const RunReport& report, const TagSchema& schema);

}  // namespace deid::recognize
