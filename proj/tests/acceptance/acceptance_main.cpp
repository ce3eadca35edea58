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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "deid/annot_io/conll.hpp"
#include "deid/annot_io/inline_xml.hpp"
#include "deid/annot_io/jsonl.hpp"
#include "deid/cli/cli.hpp"
#include "deid/core/bio.hpp"
#include "deid/core/error.hpp"
#include "deid/core/fileio.hpp"
#include "deid/core/tokenize.hpp"
#include "deid/core/utf8.hpp"
#include "deid/corpusstats/corpusstats.hpp"
#include "deid/evalmetrics/evalmetrics.hpp"
#include "deid/recognize/transport.hpp"
#include "deid/surrogate/surrogate.hpp"
#include "deid/syngen/syngen.hpp"
#include "deid/tagmap/tagmap.hpp"
#include "support/fuzz.hpp"
#include "support/metrics_oracle.hpp"

namespace {

using namespace deid;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;

  // Records the first failure only.
  void expect(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// 1. evaluate() against a brute-force recount.
Verdict metric_oracle() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20260101);
  const auto& schema = canonical_schema();
  double worst = 0;
  auto near = [&](double a, double b, const std::string& what) {
    worst = std::max(worst, std::fabs(a - b));
    v.expect(std::fabs(a - b) <= 1e-12, what + ": " + fmt("%.17g", a) + " vs " + fmt("%.17g", b));
  };
  for (int iter = 0; iter < 500 && v.pass; ++iter) {
    const auto gold = testing::fuzz_corpus(rng, 1 + rng() % 20, schema, 60);
    Corpus pred{{}, schema};
    std::vector<std::pair<Document, Document>> pairs;
    for (const auto& g : gold.documents) {
      pred.documents.push_back(testing::fuzz_prediction(rng, g, schema));
      pairs.emplace_back(g, pred.documents.back());
    }
    for (const bool token : {true, false}) {
      const auto r = evalmetrics::evaluate(gold, pred, token ? evalmetrics::EvalMode::kToken
                                                              : evalmetrics::EvalMode::kEntityStrict);
      const auto o = testing::oracle_evaluate(pairs, schema, token);
      for (const auto& t : r.per_tag) {
        near(t.scores.precision, o.per_tag.at(t.tag).p, t.tag + " P");
        near(t.scores.recall, o.per_tag.at(t.tag).r, t.tag + " R");
        near(t.scores.f1, o.per_tag.at(t.tag).f1, t.tag + " F1");
      }
      v.expect(r.per_tag.size() == o.per_tag.size(), "per-tag row count");
      near(r.micro.precision, o.micro.p, "micro P");
      near(r.micro.recall, o.micro.r, "micro R");
      near(r.micro.f1, o.micro.f1, "micro F1");
      near(r.macro.precision, o.macro.p, "macro P");
      near(r.macro.recall, o.macro.r, "macro R");
      near(r.macro.f1, o.macro.f1, "macro F1");
      near(r.weighted.precision, o.weighted.p, "weighted P");
      near(r.weighted.recall, o.weighted.r, "weighted R");
      near(r.weighted.f1, o.weighted.f1, "weighted F1");
    }
  }
  const double secs = seconds_since(t0);
  v.expect(secs < 10.0, "runtime " + fmt("%.2f s", secs));
  if (v.pass) v.detail = "500 corpus pairs x 2 modes, max |diff| " + fmt("%.1e", worst) + ", " + fmt("%.2f s", secs);
  return v;
}

// 2. Physician review counts.
Verdict review_metrics() {
  Verdict v;
  const auto m = evalmetrics::binary_metrics({25, 10, 5, 0});
  v.expect(std::fabs(m.scores.precision - 0.714) <= 0.001, "P " + fmt("%.4f", m.scores.precision));
  v.expect(std::fabs(m.scores.recall - 0.833) <= 0.001, "R " + fmt("%.4f", m.scores.recall));
  v.expect(std::fabs(m.scores.f1 - 0.769) <= 0.001, "F1 " + fmt("%.4f", m.scores.f1));
  if (v.pass) {
    v.detail = "P " + fmt("%.3f", m.scores.precision) + " R " + fmt("%.3f", m.scores.recall) + " F1 " +
               fmt("%.3f", m.scores.f1);
  }
  return v;
}

// 3. Cohen's kappa.
Verdict kappa() {
  Verdict v;
  using evalmetrics::cohens_kappa;
  v.expect(std::fabs(cohens_kappa({"x", "y", "y", "z"}, {"x", "y", "y", "z"}).kappa - 1.0) <= 1e-12, "identical");
  v.expect(std::fabs(cohens_kappa({"x", "x", "y", "y"}, {"x", "y", "x", "y"}).kappa - 0.0) <= 1e-12, "chance");
  v.expect(std::fabs(cohens_kappa({"x", "y"}, {"y", "x"}).kappa + 1.0) <= 1e-12, "opposite");
  std::mt19937_64 rng(33);
  const std::vector<std::string> labels{"DATE", "ID", "AGE", "O"};
  for (int i = 0; i < 100 && v.pass; ++i) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<std::string> a, b, ra, rb;
    std::map<std::string, std::string> rename{{"DATE", "r1"}, {"ID", "r2"}, {"AGE", "r3"}, {"O", "r0"}};
    for (std::size_t k = 0; k < n; ++k) {
      a.push_back(labels[rng() % labels.size()]);
      b.push_back(rng() % 3 == 0 ? labels[rng() % labels.size()] : a.back());
      ra.push_back(rename[a.back()]);
      rb.push_back(rename[b.back()]);
    }
    const auto x = cohens_kappa(a, b), y = cohens_kappa(ra, rb);
    v.expect(x.kappa == y.kappa, "renaming changed kappa on case " + std::to_string(i));
  }
  if (v.pass) v.detail = "hand cases exact, 100 renamings invariant";
  return v;
}

// 4. Serialisation round trips.
Verdict round_trips() {
  Verdict v;
  std::mt19937_64 rng(44);
  const auto& schema = canonical_schema();
  Corpus corpus{{}, schema};
  for (int i = 0; i < 1000 && v.pass; ++i) {
    const auto doc = testing::fuzz_document(rng, "doc-" + std::to_string(i), schema, 60);
    const auto seq = spans_to_bio(doc, tokenize(doc.text));
    v.expect(bio_to_spans(seq, doc.text).spans == doc.entities, "BIO round trip of " + doc.id);
    Document bare = doc;
    bare.meta.clear();
    const auto xml = annot_io::write_inline_xml(doc);
    v.expect(annot_io::parse_inline_xml(xml, annot_io::InlineXmlPolicy::strict(), schema, doc.id) == bare,
             "inline XML round trip of " + doc.id);
    corpus.documents.push_back(doc);
  }
  v.expect(annot_io::read_jsonl(annot_io::write_jsonl(corpus), schema) == corpus, "JSONL round trip");
  if (v.pass) v.detail = "1000 documents through BIO, inline XML and JSONL";
  return v;
}

// 5. Canonical tag map.
Verdict tag_mapping() {
  Verdict v;
  // The source-tag table, typed in independently of the library's copy.
  // "Contact Information" is listed under both CONTACT and LOCATION; the
  // built-in map resolves it to CONTACT.
  const std::vector<std::pair<std::string, std::vector<std::string>>> table{
      {"DATE", {"Treatment_Date", "Patient_DOB", "Investigation_Date", "Admission Date", "Procedure_Date", "Date"}},
      {"HOSPITAL", {"Ward_Location", "Hospital_Name", "Department"}},
      {"ID", {"Patient_ID", "Misc_Medical_ID", "Employee_ID", "Admission Number"}},
      {"AGE", {"Age"}},
      {"DOCTOR", {"Doctor_Name", "Staff_Name", "Prepared by", "Signature", "Doctor_Signature",
                  "Signature of Consultant"}},
      {"PATIENT", {"Patient_Name", "Gaurdian_Name", "Patient_Signature", "Patient_Spouse", "Family_Member_Name"}},
      {"CONTACT", {"Zip", "Phone_No", "Landline", "IP_Address", "Phone", "Contact_Info", "Contact_Number",
                   "Contact_No", "Mobile", "Phone Number", "Patient_Phone", "Email", "Email_ID", "Contact Information",
                   "Phone No"}},
      {"LOCATION", {"City", "State", "Country", "Street", "Other_Location", "Correspondence_Address",
                    "Contact_Address", "Pin", "Pin Code", "Pin_No", "Postal_Code", "Address"}},
  };
  std::vector<TagId> sources;
  std::size_t rows = 0;
  for (const auto& [_, tags] : table) sources.insert(sources.end(), tags.begin(), tags.end());
  sources.push_back("Starship_Registry");
  const auto map = tagmap::builtin_canonical_map(sources);
  for (const auto& [target, tags] : table) {
    for (const auto& src : tags) {
      ++rows;
      v.expect(map.map(src) == target, src + " -> " + map.map(src) + ", expected " + target);
    }
  }
  v.expect(map.map("Starship_Registry") == "OTHERS", "unknown tag maps to " + map.map("Starship_Registry"));

  std::mt19937_64 rng(55);
  const TagSchema source{"src", sources, "OTHERS"};
  std::size_t outside = 0;
  for (int i = 0; i < 50 && v.pass; ++i) {
    const auto corpus = testing::fuzz_corpus(rng, 5, source);
    const auto once = tagmap::apply_tagmap(corpus, map);
    std::size_t unknown = 0;
    for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
      for (std::size_t e = 0; e < corpus.documents[d].entities.size(); ++e) {
        if (corpus.documents[d].entities[e].tag != "Starship_Registry") continue;
        ++unknown;
        v.expect(once.corpus.documents[d].entities[e].tag == "OTHERS", "unknown tag not mapped to OTHERS");
      }
    }
    const auto it = once.audit.default_hits.find("Starship_Registry");
    v.expect(unknown == (it == once.audit.default_hits.end() ? 0 : it->second), "audit count for unknown tag");
    outside += unknown;
    v.expect(tagmap::apply_tagmap(once.corpus, map).corpus == once.corpus, "mapping twice differs from once");
  }
  v.expect(outside > 0, "fuzz never produced an unknown tag");
  if (v.pass) {
    v.detail = std::to_string(rows) + " source tags, " + std::to_string(outside) +
               " unknown-tag entities audited, idempotent";
  }
  return v;
}

// 6. Surrogate engine.
Verdict surrogates() {
  Verdict v;
  std::mt19937_64 rng(66);
  auto cfg = surrogate::SurrogateConfig::defaults();
  cfg.seed = 606;
  // Ages are kept verbatim by default; jitter puts AGE under the leak check too.
  cfg.age_policy = {surrogate::AgePolicy::Kind::kJitter, 5};
  const auto corpus = testing::fuzz_corpus(rng, 200, canonical_schema(), 60);
  const auto one = surrogate::scrub_corpus(corpus, surrogate::ScrubMode::kSurrogate, cfg, 1);
  std::size_t checked = 0;
  for (std::size_t d = 0; d < corpus.documents.size() && v.pass; ++d) {
    const auto& in = corpus.documents[d];
    const auto& out = one.corpus.documents[d];
    v.expect(in.entities.size() == out.entities.size(), "entity count changed in " + in.id);
    std::map<std::pair<TagId, std::string>, std::string> seen;
    for (std::size_t k = 0; k < in.entities.size() && v.pass; ++k) {
      const auto& before = in.entities[k];
      const auto& after = out.entities[k];
      if (before.tag == "OTHERS") continue;
      const auto key = std::make_pair(before.tag, before.surface);
      const auto [it, fresh] = seen.emplace(key, after.surface);
      v.expect(fresh || it->second == after.surface, "'" + before.surface + "' replaced two ways in " + in.id);
      if (utf8::length(before.surface) >= 4) {
        ++checked;
        v.expect(after.surface.find(before.surface) == std::string::npos,
                 "'" + before.surface + "' survived in " + in.id);
      }
    }
  }
  const auto jsonl = annot_io::write_jsonl(one.corpus);
  v.expect(annot_io::write_jsonl(surrogate::scrub_corpus(corpus, surrogate::ScrubMode::kSurrogate, cfg, 1).corpus) ==
               jsonl,
           "second run differs");
  for (const unsigned threads : {2u, 4u, 8u}) {
    v.expect(annot_io::write_jsonl(
                 surrogate::scrub_corpus(corpus, surrogate::ScrubMode::kSurrogate, cfg, threads).corpus) == jsonl,
             std::to_string(threads) + " threads differ");
  }
  auto shift = cfg;
  shift.date_offset_days = 5;
  const std::string text = "Admitted on 25-08-2023 .";
  Document dated{"d", text, {make_span(text, 12, 22, "DATE")}, {}};
  const auto shifted = surrogate::scrub(dated, surrogate::ScrubMode::kSurrogate, shift);
  v.expect(shifted.entities.at(0).surface == "30-08-2023", "date shifted to " + shifted.entities.at(0).surface);
  if (v.pass) v.detail = "co-replacement, 4 parallelism levels identical, 25-08-2023 -> 30-08-2023, " +
                         std::to_string(checked) + " surfaces leak-checked";
  return v;
}

// 7. Class weights.
Verdict class_weights() {
  Verdict v;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> big(1, 1e6);
  for (int i = 0; i < 100; ++i) {
    const double n = std::floor(big(rng));
    const double n_t = 1 + std::floor(std::uniform_real_distribution<double>(0, 4 * n)(rng));
    v.expect(std::fabs(corpusstats::class_weight(n, n_t) - std::log(4 * n / n_t)) <= 1e-12, "direct evaluation");
    v.expect(corpusstats::class_weight(n, 4 * n) == 0.0, "n_t = 4n is not exactly 0");
  }
  std::mt19937_64 crng(78);
  const auto corpus = testing::fuzz_corpus(crng, 30, canonical_schema(), 60);
  Corpus tripled{{}, corpus.schema};
  for (int k = 0; k < 3; ++k) {
    for (auto d : corpus.documents) {
      d.id += "-" + std::to_string(k);
      tripled.documents.push_back(d);
    }
  }
  const auto a = corpusstats::class_weights(corpus), b = corpusstats::class_weights(tripled);
  v.expect(b.n == 3 * a.n && a.weights.size() == b.weights.size(), "scaled counts");
  for (std::size_t i = 0; i < a.weights.size() && v.pass; ++i) {
    v.expect(std::fabs(a.weights[i].w_t - b.weights[i].w_t) <= 1e-12, "scaling changed " + a.weights[i].tag);
  }
  if (v.pass) v.detail = "100 random (n, n_t) exact, ln(4n/4n) = 0, invariant under x3 counts";
  return v;
}

// 8. Jaccard distance and BERTScore.
Verdict similarity() {
  Verdict v;
  const auto& schema = canonical_schema();
  const Corpus a{{{"a", "fever cough and cold", {}, {}}}, schema};
  const Corpus b{{{"b", "rash itch pain", {}, {}}}, schema};
  v.expect(corpusstats::jaccard_distance(a, a) == 0.0, "identical corpora");
  v.expect(corpusstats::jaccard_distance(a, b) == 1.0, "disjoint corpora");

  auto cosine = [](const corpusstats::Vector& x, const corpusstats::Vector& y) {
    double d = 0, nx = 0, ny = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      d += x[i] * y[i];
      nx += x[i] * x[i];
      ny += y[i] * y[i];
    }
    return nx == 0 || ny == 0 ? 0.0 : d / (std::sqrt(nx) * std::sqrt(ny));
  };
  std::mt19937_64 rng(88);
  std::normal_distribution<double> gauss;
  auto random = [&](std::size_t n, std::size_t dim) {
    corpusstats::Embeddings e(n, corpusstats::Vector(dim));
    for (auto& row : e) {
      for (auto& x : row) x = gauss(rng);
    }
    return e;
  };
  for (int i = 0; i < 200 && v.pass; ++i) {
    const std::size_t dim = 1 + rng() % 16;
    const auto c = random(1 + rng() % 12, dim), r = random(1 + rng() % 12, dim);
    double p = 0, rec = 0;
    for (const auto& x : c) {
      double best = -2;
      for (const auto& y : r) best = std::max(best, cosine(x, y));
      p += best;
    }
    for (const auto& y : r) {
      double best = -2;
      for (const auto& x : c) best = std::max(best, cosine(x, y));
      rec += best;
    }
    p /= static_cast<double>(c.size());
    rec /= static_cast<double>(r.size());
    const double f = p + rec == 0 ? 0 : 2 * p * rec / (p + rec);
    const auto got = corpusstats::bertscore_greedy(c, r);
    v.expect(std::fabs(got.precision - p) <= 1e-12 && std::fabs(got.recall - rec) <= 1e-12 &&
                 std::fabs(got.f1 - f) <= 1e-12,
             "brute force mismatch on case " + std::to_string(i));
    const auto self = corpusstats::bertscore_greedy(c, c);
    v.expect(std::fabs(self.precision - 1) <= 1e-12 && std::fabs(self.recall - 1) <= 1e-12 &&
                 std::fabs(self.f1 - 1) <= 1e-12,
             "bertscore(X, X) != (1, 1, 1) on case " + std::to_string(i));
  }
  if (v.pass) v.detail = "Jaccard 0 / 1, 200 random embedding pairs match brute force, self-score (1, 1, 1)";
  return v;
}

// 9. Synthetic generation against the mock backend executable.
Verdict syngen_end_to_end() {
  Verdict v;
  const auto dir = fs::temp_directory_path() / "deid_acceptance_syngen";
  fs::remove_all(dir);
  write_file(dir / "script.json",
             R"({"ex1#0": "malformed", "ex2#1": "malformed", "ex3#2": "malformed", "ex4#0": "short", "ex5#3": "short"})");
  syngen::GenerationJob job;
  job.exemplars = annot_io::read_jsonl_infer(read_file(fs::path(DEID_DATA_DIR) / "fixtures" / "exemplars.jsonl"));
  job.fanout = 4;
  job.concurrency = 2;
  job.timeout = std::chrono::milliseconds(10000);
  job.endpoint = std::string(DEID_MOCK_BACKEND) + " --script " + (dir / "script.json").string();
  job.validate();
  const auto transport = recognize::make_transport(job.endpoint, job.concurrency);
  const auto result = syngen::generate(job, *transport);
  v.expect(result.scheduled() == 20, std::to_string(result.scheduled()) + " attempts");
  v.expect(result.succeeded() == 20, std::to_string(result.failed()) + " backend failures");
  const auto f = syngen::filter_outputs(syngen::successful_outputs(result), job.validation,
                                        syngen::generation_schema(job.tmpl));
  v.expect(f.accepted.documents.size() == 15, std::to_string(f.accepted.documents.size()) + " accepted");
  const std::map<std::string, std::string> want{{"ex1#0", "malformed_markup"}, {"ex2#1", "malformed_markup"},
                                                {"ex3#2", "malformed_markup"}, {"ex4#0", "length_out_of_bounds"},
                                                {"ex5#3", "length_out_of_bounds"}};
  std::map<std::string, std::string> got;
  for (const auto& r : f.rejects) got[r.id] = r.reason;
  v.expect(got == want, "reject reasons differ");
  const auto conll = annot_io::write_conll(f.accepted);
  try {
    const auto back = annot_io::read_conll(conll, canonical_schema());
    v.expect(back.documents.size() == 15, "CoNLL re-parse lost documents");
    v.expect(annot_io::write_conll(back) == conll, "CoNLL re-parse is not stable");
  } catch (const Error& e) {
    v.expect(false, std::string("CoNLL re-parse failed: ") + e.what());
  }
  if (v.pass) v.detail = "20 attempts, 15 accepted, 3 malformed_markup + 2 length_out_of_bounds, CoNLL re-parses";
  return v;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return out;
}

// 10. run-matrix reproducibility (the total time is checked in main).
Verdict run_matrix() {
  Verdict v;
  const auto matrix = (fs::path(DEID_DATA_DIR) / "fixtures" / "matrix" / "matrix.json").string();
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* name : {"a", "b"}) {
    const auto dir = fs::temp_directory_path() / ("deid_acceptance_matrix_" + std::string(name));
    fs::remove_all(dir);
    std::ostringstream out, err;
    const int code = cli::run({"deid", "--out-dir", dir.string(), "run-matrix", matrix}, out, err);
    v.expect(code == 0, "run-matrix exit " + std::to_string(code) + ": " + err.str());
    if (code == 0) runs.push_back(snapshot(dir));
  }
  if (!v.pass) return v;
  std::size_t reports = 0;
  for (const auto& [path, _] : runs[0]) {
    if (path.rfind("reports/", 0) == 0 && fs::path(path).extension() == ".json") ++reports;
  }
  v.expect(reports == 4, std::to_string(reports) + " reports");
  v.expect(runs[0] == runs[1], "re-run is not byte-identical");
  if (v.pass) v.detail = "2x2 grid, 4 reports, " + std::to_string(runs[0].size()) + " files byte-identical across runs";
  return v;
}

}  // namespace

int main() {
  const auto start = Clock::now();
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"metric oracle equivalence", metric_oracle},
      {"physician review metrics", review_metrics},
      {"Cohen's kappa", kappa},
      {"BIO / inline XML / JSONL round trips", round_trips},
      {"tag mapping", tag_mapping},
      {"surrogate engine", surrogates},
      {"class weights", class_weights},
      {"Jaccard / BERTScore", similarity},
      {"syngen end to end with mock LLM", syngen_end_to_end},
      {"CLI run-matrix", run_matrix},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    if (i + 1 == criteria.size()) {
      const double total = seconds_since(start);
      v.expect(total < 120.0, "suite took " + fmt("%.1f s", total));
      if (v.pass) v.detail += ", suite " + fmt("%.1f s", total);
    }
    std::printf("%s  [%2zu] %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
