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

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "deid/core/error.hpp"
#include "deid/recognize/external.hpp"
#include "deid/recognize/rules.hpp"
#include "support/fuzz.hpp"

namespace deid::recognize {
namespace {

using nlohmann::json;

const RuleRecognizer& builtin() {
  static const RuleRecognizer r(builtin_rulebook());
  return r;
}

Document doc(const std::string& id, const std::string& text) {
  Document d;
  d.id = id;
  d.text = text;
  return d;
}

TEST(RulesTest, CrnoPrefixYieldsIdOverDigits) {
  const auto spans = recognize_rules("CRNO: 1234567890", builtin());
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].tag, "ID");
  EXPECT_EQ(spans[0].start, 6u);
  EXPECT_EQ(spans[0].end, 16u);
  EXPECT_EQ(spans[0].surface, "1234567890");
}

TEST(RulesTest, EmptyText) { EXPECT_TRUE(recognize_rules("", builtin()).empty()); }

TEST(RulesTest, IndianMobileIsContact) {
  const auto spans = recognize_rules("+91-9812345678", builtin());
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].tag, "CONTACT");
  EXPECT_EQ(spans[0].start, 0u);
  EXPECT_EQ(spans[0].end, 14u);
}

TEST(RulesTest, SummaryLine) {
  const std::string text =
      "Name: Rahul Kumar, 35 years, admitted on 25-08-2023 to Max Super Speciality Hospital, Saket, New Delhi "
      "110017 under Dr. Rohan Sharma. ADM-9012345678";
  const auto spans = recognize_rules(text, builtin());
  std::vector<std::pair<std::string, std::string>> got;
  for (const auto& s : spans) got.emplace_back(s.tag, s.surface);
  const std::vector<std::pair<std::string, std::string>> want{
      {"PATIENT", "Rahul Kumar"}, {"AGE", "35 years"},     {"DATE", "25-08-2023"},
      {"HOSPITAL", "Max Super Speciality Hospital"},       {"LOCATION", "Saket"},
      {"LOCATION", "New Delhi"},  {"LOCATION", "110017"},  {"DOCTOR", "Rohan Sharma"},
      {"ID", "ADM-9012345678"}};
  EXPECT_EQ(got, want);
}

TEST(RulesTest, OverlapPolicy) {
  Rulebook book;
  book.schema = canonical_schema();
  book.priority = {"ID", "CONTACT"};
  book.patterns = {{"CONTACT", R"(\d{4})", 0, false}, {"ID", R"(\d{4})", 0, false}, {"CONTACT", R"(\d{6})", 0, false}};
  const RuleRecognizer r(book);
  // Equal length, equal start: ID wins by priority.
  auto spans = r.recognize("1234");
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].tag, "ID");
  // Longer match wins over priority.
  spans = r.recognize("123456");
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].tag, "CONTACT");
  EXPECT_EQ(spans[0].end, 6u);
}

TEST(RulesTest, InvalidPatternAtLoad) {
  Rulebook book = builtin_rulebook();
  book.patterns.push_back({"ID", "(unclosed", 0, false});
  try {
    RuleRecognizer r(book);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidPattern);
  }
  book.patterns.back() = {"ID", "a(b)", 2, false};
  EXPECT_THROW(RuleRecognizer{book}, Error);
}

TEST(RulesTest, DeterministicAndOrderIndependent) {
  std::mt19937_64 rng(3);
  const auto corpus = testing::fuzz_corpus(rng, 30, canonical_schema());
  std::vector<std::vector<EntitySpan>> forward, backward;
  for (const auto& d : corpus.documents) forward.push_back(builtin().recognize(d.text));
  for (auto it = corpus.documents.rbegin(); it != corpus.documents.rend(); ++it) backward.push_back(builtin().recognize(it->text));
  std::reverse(backward.begin(), backward.end());
  EXPECT_EQ(forward, backward);
  for (std::size_t i = 0; i < forward.size(); ++i) {
    Document d = corpus.documents[i];
    d.entities = forward[i];
    EXPECT_NO_THROW(validate_document(d, &canonical_schema()));
  }
}

TEST(RulesTest, ShippedRulebookMatchesBuiltin) {
  const auto shipped = load_rulebook(std::string(DEID_DATA_DIR) + "/rulebooks/builtin.json");
  EXPECT_EQ(shipped, builtin_rulebook());
  EXPECT_EQ(Rulebook::from_json(builtin_rulebook().to_json()), builtin_rulebook());
}

TEST(AlignTest, AllOutside) {
  const std::string text = "no phi here";
  const std::vector<Token> toks{{"no", 0, 2}, {"phi", 3, 6}, {"here", 7, 11}};
  EXPECT_TRUE(align_token_predictions(text, toks, {{}, {}, {}}).spans.empty());
}

TEST(AlignTest, TwoTokenEntity) {
  const std::string text = "Dr. Rohan Sharma came";
  const std::vector<Token> toks{{"Dr", 0, 2}, {".", 2, 3}, {"Rohan", 4, 9}, {"Sharma", 10, 16}, {"came", 17, 21}};
  const auto res = align_token_predictions(
      text, toks, {{}, {}, BioLabel::begin("DOCTOR"), BioLabel::inside("DOCTOR"), {}});
  ASSERT_EQ(res.spans.size(), 1u);
  EXPECT_EQ(res.spans[0].start, 4u);
  EXPECT_EQ(res.spans[0].end, 16u);
  EXPECT_EQ(res.spans[0].surface, "Rohan Sharma");
}

TEST(AlignTest, DanglingInsideRepairedAndBadTokensRejected) {
  const std::string text = "Rohan Sharma";
  const std::vector<Token> toks{{"Rohan", 0, 5}, {"Sharma", 6, 12}};
  const auto res = align_token_predictions(text, toks, {BioLabel::inside("DOCTOR"), BioLabel::inside("DOCTOR")});
  ASSERT_EQ(res.spans.size(), 1u);
  EXPECT_EQ(res.spans[0].surface, "Rohan Sharma");
  EXPECT_EQ(res.warnings.size(), 1u);
  try {
    align_token_predictions(text, {{"Rohan", 0, 5}, {"Sharma", 6, 13}}, {{}, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSpanOutOfRange);
  }
  EXPECT_THROW(align_token_predictions(text, {{"Rohan", 0, 5}, {"Shxx", 6, 10}}, {{}, {}}), Error);
}

// Echoes gold spans for known ids.
json echo(const std::map<std::string, Document>& gold, const json& req) {
  const auto& d = gold.at(req.at("id").get<std::string>());
  json spans = json::array();
  for (const auto& e : d.entities) spans.push_back({{"start", e.start}, {"end", e.end}, {"tag", e.tag}});
  return {{"id", d.id}, {"spans", spans}};
}

TEST(ExternalTest, EchoBackendReproducesGold) {
  std::mt19937_64 rng(8);
  const auto corpus = testing::fuzz_corpus(rng, 25, canonical_schema());
  std::map<std::string, Document> gold;
  for (const auto& d : corpus.documents) gold[d.id] = d;
  FunctionTransport t([&](const json& r) { return echo(gold, r); });
  RecognizerBackend backend;
  backend.kind = RecognizerBackend::Kind::kExternal;
  backend.name = "echo";
  const auto report = recognize_external(corpus.documents, backend, t);
  EXPECT_TRUE(report.excluded.empty());
  EXPECT_EQ(predictions_to_corpus(corpus.documents, report, canonical_schema()), corpus);
}

TEST(ExternalTest, OutOfRangeSpanExcludedRunContinues) {
  const std::vector<Document> docs{doc("a", "short"), doc("b", "fine text")};
  FunctionTransport t([](const json& r) {
    const auto id = r["id"].get<std::string>();
    if (id == "a") return json{{"id", id}, {"spans", {{{"start", 0}, {"end", 50}, {"tag", "DATE"}}}}};
    return json{{"id", id}, {"spans", {{{"start", 0}, {"end", 4}, {"tag", "DATE"}}}}};
  });
  RecognizerBackend backend;
  backend.kind = RecognizerBackend::Kind::kExternal;
  const auto report = recognize_external(docs, backend, t);
  ASSERT_EQ(report.excluded.size(), 1u);
  EXPECT_EQ(report.excluded[0].doc_id, "a");
  EXPECT_EQ(report.excluded[0].code, ErrorCode::kSpanOutOfRange);
  ASSERT_EQ(report.predictions.size(), 1u);
  EXPECT_EQ(report.predictions[0].spans[0].surface, "fine");
  EXPECT_EQ(report.documents, report.predictions.size() + report.excluded.size());
}

TEST(ExternalTest, TimeoutRetriedOnce) {
  const std::vector<Document> docs{doc("a", "x"), doc("b", "y"), doc("c", "z")};
  std::atomic<int> b_calls{0};
  std::atomic<bool> b_dead{false};
  FunctionTransport t([&](const json& r) -> json {
    const auto id = r["id"].get<std::string>();
    if (id == "b" && (b_calls++ == 0 || b_dead)) throw Error(ErrorCode::kTimeout, "scripted");
    return {{"id", id}, {"spans", json::array()}};
  });
  RecognizerBackend backend;
  backend.kind = RecognizerBackend::Kind::kExternal;
  backend.retry = 1;
  const auto report = recognize_external(docs, backend, t);
  EXPECT_EQ(report.retries, 1u);
  EXPECT_EQ(report.requests, 4u);
  EXPECT_EQ(report.predictions.size(), 3u);
  EXPECT_TRUE(report.excluded.empty());

  b_dead = true;
  backend.retry = 0;
  const auto failing = recognize_external(docs, backend, t);
  ASSERT_EQ(failing.excluded.size(), 1u);
  EXPECT_EQ(failing.excluded[0].code, ErrorCode::kTimeout);
  EXPECT_EQ(failing.predictions.size(), 2u);
}

TEST(ExternalTest, ProtocolViolations) {
  const auto d = doc("a", "Rohan Sharma");
  const auto& schema = canonical_schema();
  auto code_of = [&](const json& response) {
    try {
      decode_response(response, d, schema);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIoError;  // no error
  };
  EXPECT_EQ(code_of({{"id", "b"}, {"spans", json::array()}}), ErrorCode::kProtocolViolation);
  EXPECT_EQ(code_of({{"id", "a"}}), ErrorCode::kProtocolViolation);
  EXPECT_EQ(code_of({{"id", "a"}, {"error", "boom"}}), ErrorCode::kBackendError);
  EXPECT_EQ(code_of({{"id", "a"}, {"spans", {{{"start", 0}, {"end", 5}, {"tag", "NAME"}}}}}),
            ErrorCode::kProtocolViolation);
  EXPECT_EQ(code_of({{"id", "a"},
                     {"spans", {{{"start", 0}, {"end", 7}, {"tag", "DOCTOR"}}, {{"start", 6}, {"end", 9}, {"tag", "DOCTOR"}}}}}),
            ErrorCode::kProtocolViolation);
  const auto spans = decode_response(
      {{"id", "a"},
       {"tokens", {{{"surface", "Rohan"}, {"start", 0}, {"end", 5}, {"label", "B-DOCTOR"}},
                   {{"surface", "Sharma"}, {"start", 6}, {"end", 12}, {"label", "I-DOCTOR"}}}}},
      d, schema);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].surface, "Rohan Sharma");
}

TEST(ExternalTest, OrderIndependentOfConcurrencyAndRepeats) {
  std::vector<Document> docs;
  for (int i = 0; i < 40; ++i) docs.push_back(doc("d" + std::to_string(i), "CRNO: 12345678" + std::to_string(i)));
  FunctionTransport t([](const json& r) {
    std::this_thread::sleep_for(std::chrono::microseconds(50 * (std::hash<std::string>{}(r["id"]) % 7)));
    const auto spans = builtin().recognize(r["text"].get<std::string>());
    json s = json::array();
    for (const auto& e : spans) s.push_back({{"start", e.start}, {"end", e.end}, {"tag", e.tag}});
    return json{{"id", r["id"]}, {"spans", s}};
  });
  RecognizerBackend backend;
  backend.kind = RecognizerBackend::Kind::kExternal;
  backend.concurrency = 1;
  const auto serial = recognize_external(docs, backend, t);
  backend.concurrency = 8;
  const auto parallel = recognize_external(docs, backend, t);
  EXPECT_EQ(serial.to_json(), parallel.to_json());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    EXPECT_EQ(serial.predictions[i].doc_id, docs[i].id);
    EXPECT_EQ(serial.predictions[i].spans, parallel.predictions[i].spans);
  }
  backend.repeats = 3;
  const auto repeated = recognize_external(docs, backend, t);
  EXPECT_EQ(repeated.documents, 120u);
  EXPECT_EQ(repeated.predictions.size(), 120u);
  EXPECT_EQ(repeated.predictions[1].repeat, 1u);
  EXPECT_EQ(repeated.predictions[1].doc_id, "d0");
}

TEST(HttpTransportTest, RoundTripAgainstLocalServer) {
  httplib::Server server;
  server.Post("/recognize", [](const httplib::Request& req, httplib::Response& res) {
    const auto r = json::parse(req.body);
    if (r["id"] == "slow") std::this_thread::sleep_for(std::chrono::milliseconds(400));
    res.set_content(json{{"id", r["id"]}, {"spans", json::array()}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpTransport t("http://127.0.0.1:" + std::to_string(port) + "/recognize");
  const auto res = t.call({{"id", "a"}, {"text", "x"}}, std::chrono::milliseconds(2000));
  EXPECT_EQ(res["id"], "a");
  try {
    t.call({{"id", "slow"}, {"text", "x"}}, std::chrono::milliseconds(100));
    ADD_FAILURE() << "expected timeout";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTimeout);
  }
  HttpTransport missing("http://127.0.0.1:" + std::to_string(port) + "/nope");
  try {
    missing.call({{"id", "a"}}, std::chrono::milliseconds(1000));
    ADD_FAILURE() << "expected backend error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendError);
  }
  server.stop();
  thread.join();
}

TEST(TransportTest, EndpointSelection) {
  EXPECT_EQ(make_transport("http://localhost:8080/x")->name(), "http://localhost:8080/x");
  EXPECT_EQ(make_transport("exec:cat")->name(), "cat");
  EXPECT_THROW(make_transport("exec:"), Error);
}

TEST(SubprocessTransportTest, CatEchoesRequestAndDeadProcessFails) {
  SubprocessTransport cat("cat", 2);
  const json req{{"id", "a"}, {"text", "hello"}};
  EXPECT_EQ(cat.call(req, std::chrono::milliseconds(2000)), req);
  SubprocessTransport silent("sleep 5", 1);
  try {
    silent.call(req, std::chrono::milliseconds(100));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTimeout);
  }
  SubprocessTransport dead("true", 1);
  try {
    dead.call(req, std::chrono::milliseconds(2000));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTransportError);
  }
}

}  // namespace
}  // namespace deid::recognize
