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

#include <cstdlib>
#include <map>
#include <memory>
#include <ostream>
#include <set>

#include "deid/annot_io/conll.hpp"
#include "deid/cli/cli.hpp"
#include "deid/core/error.hpp"
#include "deid/core/fileio.hpp"
#include "deid/core/utf8.hpp"
#include "deid/corpusstats/corpusstats.hpp"
#include "deid/recognize/external.hpp"
#include "deid/recognize/rules.hpp"
#include "deid/recognize/transport.hpp"

namespace deid::cli {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct Matrix {
  std::vector<std::pair<std::string, std::vector<std::filesystem::path>>> train;
  std::vector<std::pair<std::string, std::filesystem::path>> test;
  std::string recognizer = "gazetteer";
  evalmetrics::EvalMode mode = evalmetrics::EvalMode::kToken;
  std::uint64_t seed = 0;
};

Matrix parse_matrix(const std::filesystem::path& path, const PipelineConfig& config) {
  Matrix m;
  m.mode = config.eval_mode;
  m.seed = config.seed;
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path f(p);
    return f.is_relative() ? base / f : f;
  };
  try {
    const auto j = json::parse(read_file(path));
    for (const auto& [k, v] : j.items()) {
      if (k == "train_sets") {
        for (const auto& [name, files] : v.items()) {
          std::vector<std::filesystem::path> paths;
          for (const auto& f : files.is_array() ? files : json::array({files})) paths.push_back(resolve(f.get<std::string>()));
          m.train.emplace_back(name, std::move(paths));
        }
      } else if (k == "test_sets") {
        for (const auto& [name, file] : v.items()) m.test.emplace_back(name, resolve(file.get<std::string>()));
      } else if (k == "recognizer") {
        m.recognizer = v.get<std::string>();
        if (m.recognizer != "rules" && m.recognizer != "gazetteer" && m.recognizer != "external") {
          throw Error(ErrorCode::kInvalidConfig, "recognizer must be rules, gazetteer or external");
        }
      } else if (k == "mode") {
        m.mode = evalmetrics::parse_mode(v.get<std::string>());
      } else if (k == "seed") {
        m.seed = v.get<std::uint64_t>();
      } else {
        throw Error(ErrorCode::kInvalidConfig, "unknown matrix key '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad matrix file: ") + e.what(),
                {path.string(), 0, std::nullopt});
  }
  if (m.train.empty() || m.test.empty()) throw Error(ErrorCode::kInvalidConfig, "matrix needs train_sets and test_sets");
  return m;
}

Corpus union_of(const std::vector<std::filesystem::path>& files) {
  Corpus out{{}, canonical_schema()};
  std::set<std::string> ids;
  for (const auto& f : files) {
    auto c = load_corpus(f, "canonical");
    for (auto& d : c.documents) {
      if (!ids.insert(d.id).second) {
        throw Error(ErrorCode::kInvalidDocument, "document id '" + d.id + "' appears twice in the train union",
                    {f.string(), 0, std::nullopt});
      }
      out.documents.push_back(std::move(d));
    }
  }
  return out;
}

// Built-in rules plus one lexicon per tag holding the train set's entity
// surfaces; a surface seen under several tags keeps its most frequent one.
recognize::Rulebook gazetteer(const Corpus& train, const recognize::Rulebook& base) {
  std::map<std::string, std::map<TagId, std::size_t>> seen;
  for (const auto& d : train.documents) {
    for (const auto& e : d.entities) {
      if (e.tag == train.schema.other || utf8::length(e.surface) < 3) continue;
      ++seen[e.surface][e.tag];
    }
  }
  std::map<TagId, std::vector<std::string>> by_tag;
  for (const auto& [surface, tags] : seen) {
    const TagId* best = nullptr;
    std::size_t best_n = 0;
    for (const auto& t : base.priority) {
      const auto it = tags.find(t);
      if (it != tags.end() && it->second > best_n) {
        best = &it->first;
        best_n = it->second;
      }
    }
    if (best) by_tag[*best].push_back(surface);
  }
  auto book = base;
  for (auto& [tag, entries] : by_tag) book.lexicons.push_back({tag, std::move(entries)});
  return book;
}

std::string safe(const std::string& s) {
  std::string out;
  for (const char c : s) {
    const bool ok = (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '-' || c == '_' || c == '.' || c == '+';
    out += ok ? c : '_';
  }
  return out;
}

}  // namespace

std::vector<std::filesystem::path> run_matrix(const std::filesystem::path& matrix_path, const PipelineConfig& config,
                                              const std::filesystem::path& out_dir, std::ostream& log) {
  const auto m = parse_matrix(matrix_path, config);
  const auto base_book = config.rulebook.empty() ? recognize::builtin_rulebook() : recognize::load_rulebook(config.rulebook);

  std::vector<std::pair<std::string, Corpus>> tests;
  for (const auto& [name, file] : m.test) tests.emplace_back(name, load_corpus(file, "canonical"));

  std::unique_ptr<recognize::Transport> transport;
  if (m.recognizer == "external") {
    const char* env = std::getenv(kEndpointEnv);
    const std::string endpoint = env && *env ? env : config.endpoint;
    if (endpoint.empty()) throw Error(ErrorCode::kInvalidConfig, "external recognizer needs an endpoint");
    transport = recognize::make_transport(endpoint, config.concurrency);
  }

  std::vector<std::filesystem::path> reports;
  ordered_json grid = ordered_json::array();
  for (const auto& [train_name, files] : m.train) {
    const auto train = union_of(files);
    write_file(out_dir / "train" / (safe(train_name) + ".conll"), annot_io::write_conll(train));
    write_file(out_dir / "train" / (safe(train_name) + ".weights.json"),
               corpusstats::class_weights(train, config.zero_count_weight).to_json().dump(2) + "\n");
    const recognize::RuleRecognizer rules(m.recognizer == "gazetteer" ? gazetteer(train, base_book) : base_book);

    for (const auto& [test_name, test] : tests) {
      recognize::RunReport run;
      if (transport) {
        recognize::RecognizerBackend backend;
        backend.kind = recognize::RecognizerBackend::Kind::kExternal;
        backend.name = transport->name();
        backend.endpoint = transport->name();
        backend.timeout = config.timeout;
        backend.retry = config.retry;
        backend.concurrency = config.concurrency;
        run = recognize::recognize_external(test.documents, backend, *transport);
      } else {
        run = recognize::recognize_builtin(test.documents, rules, m.recognizer);
      }
      const auto pred = recognize::predictions_to_corpus(test.documents, run, test.schema);
      Corpus gold{{}, test.schema};
      std::set<std::string> kept;
      for (const auto& d : pred.documents) kept.insert(d.id);
      for (const auto& d : test.documents) {
        if (kept.count(d.id)) gold.documents.push_back(d);
      }
      const auto report = evalmetrics::evaluate(gold, pred, m.mode);

      ordered_json j;
      j["train"] = train_name;
      j["test"] = test_name;
      j["recognizer"] = m.recognizer;
      j["seed"] = m.seed;
      j["train_documents"] = train.documents.size();
      j["test_documents"] = test.documents.size();
      j["excluded"] = run.excluded.size();
      j["metrics"] = report.to_json();
      const auto stem = safe(train_name) + "__" + safe(test_name);
      const auto path = out_dir / "reports" / (stem + ".json");
      write_file(path, j.dump(2) + "\n");
      write_file(out_dir / "reports" / (stem + ".txt"),
                 "train=" + train_name + " test=" + test_name + "\n" + report.to_table());
      reports.push_back(path);
      grid.push_back({{"train", train_name},
                      {"test", test_name},
                      {"micro_f1", report.micro.f1},
                      {"macro_f1", report.macro.f1},
                      {"weighted_f1", report.weighted.f1},
                      {"report", std::filesystem::path("reports") / (stem + ".json")}});
      log << "[" << train_name << " x " << test_name << "] micro F1 " << report.micro.f1 << "\n";
    }
  }
  write_file(out_dir / "grid.json", ordered_json{{"mode", evalmetrics::to_string(m.mode)}, {"cells", grid}}.dump(2) + "\n");
  return reports;
}

}  // namespace deid::cli
