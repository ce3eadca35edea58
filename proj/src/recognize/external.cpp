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

#include "deid/recognize/external.hpp"

#include <algorithm>

#include "deid/core/parallel.hpp"
#include "deid/core/utf8.hpp"

namespace deid::recognize {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

[[noreturn]] void violation(const std::string& msg) { throw Error(ErrorCode::kProtocolViolation, msg); }

std::size_t offset_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) violation(std::string("'") + key + "' must be an integer");
  const auto v = it->get<long long>();
  if (v < 0) throw Error(ErrorCode::kSpanOutOfRange, std::string("negative '") + key + "'");
  return static_cast<std::size_t>(v);
}

std::string string_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) violation(std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

struct Outcome {
  std::optional<Prediction> prediction;
  std::optional<Exclusion> exclusion;
  std::size_t requests = 0;
  std::size_t retries = 0;
};

}  // namespace

json RunReport::to_json(bool with_latency) const {
  json j;
  j["backend"] = backend_name;
  j["documents"] = documents;
  j["requests"] = requests;
  j["retries"] = retries;
  j["predicted"] = predictions.size();
  j["excluded"] = json::array();
  for (const auto& e : excluded) {
    j["excluded"].push_back({{"id", e.doc_id}, {"repeat", e.repeat}, {"code", to_string(e.code)}, {"reason", e.reason}});
  }
  if (with_latency) {
    auto lat = json::array();
    for (const auto& p : predictions) lat.push_back({{"id", p.doc_id}, {"repeat", p.repeat}, {"latency_ms", p.latency_ms}});
    j["latency"] = std::move(lat);
  }
  return j;
}

BioDecodeResult align_token_predictions(std::string_view text, const std::vector<Token>& tokens,
                                        const std::vector<BioLabel>& labels) {
  const utf8::CharIndex index(text);
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    SourceLocation where;
    where.offset = t.start;
    if (t.start >= t.end || t.end > index.size()) {
      throw Error(ErrorCode::kSpanOutOfRange, "token " + std::to_string(i) + " is outside the text", where);
    }
    if (t.start < prev_end) {
      throw Error(ErrorCode::kSpanOutOfRange, "token " + std::to_string(i) + " overlaps the previous token", where);
    }
    if (index.slice(text, t.start, t.end) != t.surface) {
      throw Error(ErrorCode::kSpanOutOfRange, "token " + std::to_string(i) + " surface does not match the text", where);
    }
    prev_end = t.end;
  }
  TokenSeq seq{tokens, labels};
  return bio_to_spans(seq, text, BioMode::kLenient);
}

std::vector<EntitySpan> decode_response(const json& response, const Document& doc, const TagSchema& schema) {
  if (!response.is_object()) violation("response is not a JSON object");
  if (!response.contains("id") || response["id"] != doc.id) violation("response id does not match request");
  const int forms = response.contains("spans") + response.contains("tokens") + response.contains("error");
  if (forms != 1) violation("response must carry exactly one of spans, tokens, error");
  if (response.contains("error")) {
    throw Error(ErrorCode::kBackendError,
                response["error"].is_string() ? response["error"].get<std::string>() : response["error"].dump());
  }
  const utf8::CharIndex index(doc.text);
  std::vector<EntitySpan> spans;
  if (response.contains("spans")) {
    if (!response["spans"].is_array()) violation("'spans' must be an array");
    for (const auto& s : response["spans"]) {
      if (!s.is_object()) violation("span is not an object");
      const auto start = offset_field(s, "start"), end = offset_field(s, "end");
      auto tag = string_field(s, "tag");
      if (start >= end || end > index.size()) {
        SourceLocation where;
        where.offset = start;
        throw Error(ErrorCode::kSpanOutOfRange,
                    "span [" + std::to_string(start) + ", " + std::to_string(end) + ") outside text of length " +
                        std::to_string(index.size()),
                    where);
      }
      spans.push_back(make_span(doc.text, start, end, std::move(tag)));
    }
  } else {
    if (!response["tokens"].is_array()) violation("'tokens' must be an array");
    std::vector<Token> tokens;
    std::vector<BioLabel> labels;
    for (const auto& t : response["tokens"]) {
      if (!t.is_object()) violation("token is not an object");
      tokens.push_back({string_field(t, "surface"), offset_field(t, "start"), offset_field(t, "end")});
      const auto label = BioLabel::parse(string_field(t, "label"));
      if (!label) violation("bad BIO label '" + t["label"].get<std::string>() + "'");
      labels.push_back(*label);
    }
    spans = align_token_predictions(doc.text, tokens, labels).spans;
  }
  sort_entities(spans);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (!schema.contains(spans[i].tag)) violation("tag '" + spans[i].tag + "' is not in schema " + schema.name);
    if (i > 0 && spans[i].start < spans[i - 1].end) violation("overlapping spans");
  }
  return spans;
}

RunReport recognize_external(const std::vector<Document>& docs, const RecognizerBackend& backend,
                             Transport& transport) {
  const unsigned repeats = std::max(1u, backend.repeats);
  const auto n = docs.size() * repeats;
  std::vector<Outcome> outcomes(n);

  json schema_tags = backend.schema.tags;
  parallel_for(n, backend.concurrency, [&](std::size_t i) {
    const auto& doc = docs[i / repeats];
    const auto repeat = static_cast<unsigned>(i % repeats);
    auto& out = outcomes[i];
    const json request{{"id", doc.id}, {"text", doc.text}, {"schema", schema_tags}};
    for (unsigned attempt = 0;; ++attempt) {
      ++out.requests;
      const auto started = Clock::now();
      try {
        const auto response = transport.call(request, backend.timeout);
        const double ms = std::chrono::duration<double, std::milli>(Clock::now() - started).count();
        out.prediction = Prediction{doc.id, decode_response(response, doc, backend.schema), ms, backend.name, repeat};
        return;
      } catch (const Error& e) {
        const bool transient = e.code() == ErrorCode::kTimeout || e.code() == ErrorCode::kTransportError;
        if (transient && attempt < backend.retry) {
          ++out.retries;
          continue;
        }
        out.exclusion = Exclusion{doc.id, e.code(), e.detail(), repeat};
        return;
      }
    }
  });

  RunReport report;
  report.backend_name = backend.name;
  report.documents = n;
  for (auto& o : outcomes) {
    report.requests += o.requests;
    report.retries += o.retries;
    if (o.prediction) report.predictions.push_back(std::move(*o.prediction));
    if (o.exclusion) report.excluded.push_back(std::move(*o.exclusion));
  }
  return report;
}

RunReport recognize_builtin(const std::vector<Document>& docs, const RuleRecognizer& recognizer,
                            const std::string& name) {
  RunReport report;
  report.backend_name = name;
  report.documents = docs.size();
  report.requests = docs.size();
  for (const auto& doc : docs) {
    try {
      const auto started = Clock::now();
      auto spans = recognizer.recognize(doc.text);
      const double ms = std::chrono::duration<double, std::milli>(Clock::now() - started).count();
      report.predictions.push_back({doc.id, std::move(spans), ms, name, 0});
    } catch (const Error& e) {
      report.excluded.push_back({doc.id, e.code(), e.detail(), 0});
    }
  }
  return report;
}

Corpus predictions_to_corpus(const std::vector<Document>& docs, const RunReport& report, const TagSchema& schema) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : report.predictions) {
    if (p.repeat == 0) by_id.emplace(p.doc_id, &p);
  }
  Corpus corpus;
  corpus.schema = schema;
  for (const auto& doc : docs) {
    const auto it = by_id.find(doc.id);
    if (it == by_id.end()) continue;
    Document d;
    d.id = doc.id;
    d.text = doc.text;
    d.meta = doc.meta;
    d.entities = it->second->spans;
    corpus.documents.push_back(std::move(d));
  }
  return corpus;
}

}  // namespace deid::recognize
