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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "deid/annot_io/jsonl.hpp"
#include "deid/cli/cli.hpp"
#include "deid/core/fileio.hpp"

namespace deid::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kData = DEID_DATA_DIR;
const std::string kMock = DEID_MOCK_BACKEND;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome deid(std::vector<std::string> args) {
  args.insert(args.begin(), "deid");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("deid_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string exemplars() { return (kData / "fixtures" / "exemplars.jsonl").string(); }

// Every regular file under dir, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return out;
}

TEST(CliTest, UsageAndExitCodes) {
  EXPECT_EQ(deid({"--help"}).code, 0);
  EXPECT_EQ(deid({}).code, 1);
  EXPECT_EQ(deid({"frobnicate"}).code, 1);
  EXPECT_EQ(deid({"stats"}).code, 1);  // --in is required
  const auto missing = deid({"stats", "--in", "/nonexistent/x.jsonl"});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("IoError"), std::string::npos);

  const auto dir = scratch("codes");
  write_file(dir / "bad.jsonl", "{\"id\": \"a\", \"text\": \"x\", \"entities\": [{\"start\": 0, \"end\": 9, \"tag\": \"DATE\"}], \"meta\": {}}\n");
  EXPECT_EQ(deid({"stats", "--in", (dir / "bad.jsonl").string()}).code, 1);
  write_file(dir / "cfg.json", R"({"seed": 1, "colour": "blue"})");
  const auto bad_cfg = deid({"--config", (dir / "cfg.json").string(), "stats", "--in", exemplars()});
  EXPECT_EQ(bad_cfg.code, 1);
  EXPECT_NE(bad_cfg.err.find("colour"), std::string::npos);
}

TEST(CliTest, ConvertRoundTripsThroughConllAndXml) {
  const auto dir = scratch("convert");
  ASSERT_EQ(deid({"map-tags", "--in", exemplars(), "--out", (dir / "canon.jsonl").string()}).code, 0);
  ASSERT_EQ(deid({"convert", "--in", (dir / "canon.jsonl").string(), "--out", (dir / "c.conll").string()}).code, 0);
  ASSERT_EQ(deid({"convert", "--in", (dir / "c.conll").string(), "--schema", "canonical", "--out",
                  (dir / "back.jsonl").string()})
                .code,
            0);
  const auto a = annot_io::read_jsonl(read_file(dir / "canon.jsonl"), canonical_schema());
  const auto b = annot_io::read_jsonl(read_file(dir / "back.jsonl"), canonical_schema());
  ASSERT_EQ(a.documents.size(), b.documents.size());
  for (std::size_t i = 0; i < a.documents.size(); ++i) {
    EXPECT_EQ(a.documents[i].entities.size(), b.documents[i].entities.size());
  }
  const auto xml = deid({"convert", "--in", (dir / "canon.jsonl").string(), "--to", "xml"});
  ASSERT_EQ(xml.code, 0);
  EXPECT_EQ(xml.out.rfind("<RECORD>", 0), 0u);
}

TEST(CliTest, MapTagsAuditsUnknownTags) {
  const auto dir = scratch("maptags");
  write_file(dir / "in.jsonl",
             "{\"id\": \"a\", \"text\": \"Dr Rao at Mars Base\", \"entities\": ["
             "{\"start\": 0, \"end\": 6, \"tag\": \"Doctor_Name\"}, {\"start\": 10, \"end\": 19, \"tag\": \"Planet\"}], \"meta\": {}}\n");
  const auto r = deid({"map-tags", "--in", (dir / "in.jsonl").string(), "--audit", (dir / "audit.json").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\"DOCTOR\""), std::string::npos);
  EXPECT_NE(r.out.find("\"OTHERS\""), std::string::npos);
  EXPECT_NE(r.err.find("Planet"), std::string::npos);
  EXPECT_NE(read_file(dir / "audit.json").find("Planet"), std::string::npos);

  // Most canonical tags are absent here, so their weights are capped.
  write_file(dir / "mapped.jsonl", r.out);
  const auto w = deid({"weights", "--in", (dir / "mapped.jsonl").string(), "--schema", "canonical"});
  ASSERT_EQ(w.code, 0) << w.err;
  EXPECT_NE(w.err.find("warning"), std::string::npos);
  EXPECT_NE(w.out.find("(capped)"), std::string::npos);
}

TEST(CliTest, DeidentifyIsSeededAndThreadIndependent) {
  const auto dir = scratch("deident");
  ASSERT_EQ(deid({"map-tags", "--in", exemplars(), "--out", (dir / "c.jsonl").string()}).code, 0);
  const auto in = (dir / "c.jsonl").string();
  const auto one = deid({"deidentify", "--in", in, "--mode", "surrogate", "--seed", "11", "--threads", "1"});
  const auto four = deid({"deidentify", "--in", in, "--mode", "surrogate", "--seed", "11", "--threads", "4"});
  const auto other = deid({"deidentify", "--in", in, "--mode", "surrogate", "--seed", "12"});
  ASSERT_EQ(one.code, 0);
  EXPECT_EQ(one.out, four.out);
  EXPECT_NE(one.out, other.out);
  const auto redacted = deid({"deidentify", "--in", in, "--mode", "redact"});
  EXPECT_NE(redacted.out.find("[DATE]"), std::string::npos);
}

TEST(CliTest, ExternalRecognizerViaMockSubprocess) {
  const auto dir = scratch("external");
  const auto gold = (kData / "fixtures" / "matrix" / "test_real.jsonl").string();
  write_file(dir / "script.json", R"({"te-r01": "out_of_range", "te-r02": "timeout"})");
  const std::string endpoint = kMock + " --gold " + gold + " --script " + (dir / "script.json").string();
  const auto r = deid({"recognize", "--in", gold, "--schema", "canonical", "--backend", "external", "--endpoint",
                       endpoint, "--timeout-ms", "2000", "--out", (dir / "pred.jsonl").string(), "--report",
                       (dir / "report.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(read_file(dir / "report.json"));
  ASSERT_EQ(report["excluded"].size(), 2u);
  EXPECT_NE(r.err.find("SpanOutOfRange"), std::string::npos);
  EXPECT_NE(r.err.find("Timeout"), std::string::npos);

  // The six answered documents carry their gold spans.
  const auto pred = annot_io::read_jsonl(read_file(dir / "pred.jsonl"), canonical_schema());
  EXPECT_EQ(pred.documents.size(), 6u);
  Corpus kept{{}, canonical_schema()};
  for (const auto& d : annot_io::read_jsonl(read_file(gold), canonical_schema()).documents) {
    if (d.id != "te-r01" && d.id != "te-r02") kept.documents.push_back(d);
  }
  write_file(dir / "gold6.jsonl", annot_io::write_jsonl(kept));
  const auto ev = deid({"evaluate", "--gold", (dir / "gold6.jsonl").string(), "--pred", (dir / "pred.jsonl").string(),
                        "--schema", "canonical", "--mode", "entity_strict"});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("micro avg       1.0000    1.0000    1.0000"), std::string::npos) << ev.out;
}

TEST(CliTest, EndpointFromEnvironment) {
  const auto gold = (kData / "fixtures" / "matrix" / "test_real.jsonl").string();
  ::setenv(kEndpointEnv, (kMock + " --gold " + gold).c_str(), 1);
  const auto r = deid({"recognize", "--in", gold, "--schema", "canonical", "--backend", "external"});
  ::unsetenv(kEndpointEnv);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(annot_io::read_jsonl(r.out, canonical_schema()).documents.size(), 8u);

  const auto none = deid({"recognize", "--in", gold, "--backend", "external"});
  EXPECT_EQ(none.code, 1);
  const auto dead = deid({"recognize", "--in", gold, "--backend", "external", "--endpoint", "http://127.0.0.1:1/x",
                          "--timeout-ms", "500"});
  EXPECT_EQ(dead.code, 0);  // every document excluded, the run still completes
  EXPECT_NE(dead.err.find("excluded"), std::string::npos);
}

TEST(CliTest, GenerateAndFilterWithMock) {
  const auto dir = scratch("generate");
  write_file(dir / "script.json", R"({"ex1#0": "malformed", "ex2#1": "short", "ex3#0": "fail"})");
  const std::string endpoint = kMock + " --script " + (dir / "script.json").string();
  const auto g = deid({"--out-dir", dir.string(), "generate", "--exemplars", exemplars(), "--endpoint", endpoint,
                       "--fanout", "2", "--template", "C"});
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_NE(g.out.find("scheduled 10\nsucceeded 9\nfailed 1"), std::string::npos) << g.out;
  const auto f = deid({"--out-dir", dir.string(), "filter", "--template", "C", "--exemplars", exemplars()});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_NE(f.out.find("accepted 7\nrejected 2"), std::string::npos) << f.out;
  const auto summary = json::parse(read_file(dir / "filter.json"));
  EXPECT_EQ(summary["attempts"], 10);
  EXPECT_EQ(summary["backend_failures"], 1);
  EXPECT_NEAR(summary["quality"]["bert_f1_mean"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(deid({"convert", "--in", (dir / "accepted.jsonl").string(), "--schema", "canonical", "--to", "conll"}).code, 0);
}

TEST(CliTest, StatsNgramsCompareWeightsSplitKappa) {
  const auto dir = scratch("stats");
  const auto s = deid({"stats", "--in", exemplars(), "--out", (dir / "s.json").string()});
  ASSERT_EQ(s.code, 0);
  EXPECT_EQ(json::parse(read_file(dir / "s.json"))["n_summaries"], 5);

  const auto ng = deid({"ngrams", "--in", exemplars(), "-n", "2", "-k", "3"});
  ASSERT_EQ(ng.code, 0);
  EXPECT_EQ(ng.out.rfind("ngram,count\n", 0), 0u);
  EXPECT_EQ(std::count(ng.out.begin(), ng.out.end(), '\n'), 4);

  const auto same = deid({"compare", "--a", exemplars(), "--b", exemplars()});
  ASSERT_EQ(same.code, 0);
  EXPECT_NE(same.out.find("Jaccard Distance       0.0000"), std::string::npos);
  EXPECT_NE(same.out.find("BERTScore (F1)         1.0000"), std::string::npos);

  const auto w = deid({"map-tags", "--in", exemplars(), "--out", (dir / "c.jsonl").string()});
  ASSERT_EQ(w.code, 0);
  const auto weights = deid({"weights", "--in", (dir / "c.jsonl").string(), "--out", (dir / "w.json").string()});
  ASSERT_EQ(weights.code, 0);
  EXPECT_EQ(std::count(weights.out.begin(), weights.out.end(), '\n'), 9);
  EXPECT_EQ(weights.out.find("(capped)"), std::string::npos);

  const auto sp = deid({"--out-dir", dir.string(), "split", "--in", exemplars(), "--ratios", "3,1,1", "--seed", "5"});
  ASSERT_EQ(sp.code, 0) << sp.err;
  EXPECT_EQ(sp.out, "train 3\nval 1\ntest 1\n");
  EXPECT_TRUE(fs::exists(dir / "val.jsonl"));
  EXPECT_EQ(deid({"split", "--in", exemplars(), "--ratios", "3,1"}).code, 1);

  write_file(dir / "a.txt", "x\nx\ny\ny\n");
  write_file(dir / "b.txt", "x\ny\nx\ny\n");
  const auto k = deid({"kappa", "--a", (dir / "a.txt").string(), "--b", (dir / "b.txt").string()});
  ASSERT_EQ(k.code, 0);
  EXPECT_EQ(k.out.rfind("kappa 0.0000", 0), 0u) << k.out;
  write_file(dir / "c.txt", "x\n");
  EXPECT_EQ(deid({"kappa", "--a", (dir / "a.txt").string(), "--b", (dir / "c.txt").string()}).code, 1);
}

TEST(CliTest, RunMatrixIsByteIdenticalAcrossRuns) {
  const auto matrix = (kData / "fixtures" / "matrix" / "matrix.json").string();
  const auto a = scratch("matrix_a"), b = scratch("matrix_b");
  const auto ra = deid({"--out-dir", a.string(), "run-matrix", matrix});
  const auto rb = deid({"--out-dir", b.string(), "run-matrix", matrix});
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(rb.code, 0);
  const auto sa = snapshot(a);
  EXPECT_EQ(sa, snapshot(b));
  std::size_t reports = 0;
  for (const auto& [path, _] : sa) {
    if (path.rfind("reports/", 0) == 0 && path.size() > 5 && path.substr(path.size() - 5) == ".json") ++reports;
  }
  EXPECT_EQ(reports, 4u);
  const auto grid = json::parse(sa.at("grid.json"));
  EXPECT_EQ(grid["cells"].size(), 4u);
}

TEST(CliTest, ConfigFileSuppliesDefaultsAndFlagsOverride) {
  const auto dir = scratch("config");
  write_file(dir / "cfg.json", R"({"seed": 3, "stats": {"top_k": 2}})");
  const auto r = deid({"--config", (dir / "cfg.json").string(), "ngrams", "--in", exemplars()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
  const auto o = deid({"--config", (dir / "cfg.json").string(), "ngrams", "--in", exemplars(), "-k", "5"});
  EXPECT_EQ(std::count(o.out.begin(), o.out.end(), '\n'), 6);
  write_file(dir / "ref.json", R"({"stats": {"stoplist": "missing.txt"}})");
  EXPECT_EQ(deid({"--config", (dir / "ref.json").string(), "stats", "--in", exemplars()}).code, 2);
}

TEST(CliTest, ExampleConfigLoads) {
  const auto cfg = PipelineConfig::load(kData / "configs" / "pipeline.example.json");
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.surrogate.seed, 42u);
  EXPECT_EQ(cfg.fanout, 4u);
  EXPECT_EQ(cfg.retry, 1u);
  EXPECT_EQ(cfg.filter.max_tokens, 4500u);
}

}  // namespace
}  // namespace deid::cli
