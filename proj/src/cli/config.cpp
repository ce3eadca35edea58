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

#include <algorithm>
#include <set>

#include "deid/annot_io/conll.hpp"
#include "deid/annot_io/inline_xml.hpp"
#include "deid/annot_io/jsonl.hpp"
#include "deid/cli/cli.hpp"
#include "deid/core/error.hpp"
#include "deid/core/fileio.hpp"

namespace deid::cli {
namespace {

using nlohmann::json;

Error config_error(const std::string& msg) { return Error(ErrorCode::kInvalidConfig, msg); }

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw config_error(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw config_error("unknown key '" + k + "' in " + where);
  }
}

std::filesystem::path existing(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base / path;
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kIoError, "referenced file does not exist: " + path.string());
  }
  return path;
}

// Tags named in the label column of a CoNLL file, for schema inference.
std::vector<TagId> conll_tags(const std::string& raw) {
  std::set<TagId> tags;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    auto end = raw.find('\n', pos);
    if (end == std::string::npos) end = raw.size();
    const std::string_view line(raw.data() + pos, end - pos);
    pos = end + 1;
    const auto tab = line.rfind('\t');
    if (line.empty() || line.front() == '#' || tab == std::string_view::npos) continue;
    const auto label = line.substr(tab + 1);
    if (label.size() > 2 && (label[0] == 'B' || label[0] == 'I') && label[1] == '-') tags.emplace(label.substr(2));
  }
  return {tags.begin(), tags.end()};
}

}  // namespace

TagSchema resolve_schema(const std::string& spec) {
  if (spec == "canonical" || spec == canonical_schema().name) return canonical_schema();
  const auto raw = read_file(spec);
  try {
    const auto j = json::parse(raw);
    only_keys(j, {"name", "tags", "other"}, "schema file");
    TagSchema s{j.value("name", std::filesystem::path(spec).stem().string()), j.at("tags").get<std::vector<TagId>>(),
                j.value("other", std::string("OTHERS"))};
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad schema file: ") + e.what(), {spec, 0, std::nullopt});
  }
}

Corpus load_corpus(const std::filesystem::path& path, const std::string& schema) {
  const auto raw = read_file(path);
  const auto ext = path.extension().string();
  const bool infer = schema == "infer";
  if (ext == ".conll") {
    if (!infer) return annot_io::read_conll(raw, resolve_schema(schema));
    auto tags = conll_tags(raw);
    TagSchema s{"inferred", tags, "OTHERS"};
    if (std::find(tags.begin(), tags.end(), "OTHERS") == tags.end()) s.tags.push_back("OTHERS");
    return annot_io::read_conll(raw, s);
  }
  if (ext == ".xml" || ext == ".txt") {
    annot_io::InlineXmlPolicy policy;
    policy.unknown_tag_action = infer ? annot_io::UnknownTagAction::kPassthrough : annot_io::UnknownTagAction::kReject;
    const auto s = infer ? canonical_schema() : resolve_schema(schema);
    auto doc = annot_io::parse_inline_xml(raw, policy, s, path.stem().string());
    Corpus c;
    c.schema = infer ? infer_schema("inferred", {doc}) : s;
    c.documents.push_back(std::move(doc));
    return c;
  }
  if (infer) return annot_io::read_jsonl_infer(raw);
  return annot_io::read_jsonl(raw, resolve_schema(schema));
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  PipelineConfig c;
  try {
    only_keys(j, {"seed", "concurrency", "output_dir", "io", "tagmap", "surrogate", "recognize", "eval", "stats", "syngen"},
              "pipeline config");
    c.seed = j.value("seed", c.seed);
    c.concurrency = j.value("concurrency", c.concurrency);
    if (c.concurrency < 1) throw config_error("concurrency must be at least 1");
    if (j.contains("output_dir")) {
      c.output_dir = j["output_dir"].get<std::string>();
      if (c.output_dir.is_relative()) c.output_dir = base / c.output_dir;
    }
    if (j.contains("io")) {
      const auto& io = j["io"];
      only_keys(io, {"schema"}, "io");
      c.schema = io.value("schema", c.schema);
      if (c.schema != "infer" && c.schema != "canonical") c.schema = existing(base, c.schema).string();
    }
    if (j.contains("tagmap")) {
      only_keys(j["tagmap"], {"path"}, "tagmap");
      if (j["tagmap"].contains("path")) c.tagmap = existing(base, j["tagmap"]["path"].get<std::string>());
    }
    if (j.contains("surrogate")) {
      auto s = j["surrogate"];
      if (!s.contains("seed")) s["seed"] = c.seed;
      c.surrogate = surrogate::config_from_json(s, base);
    } else {
      c.surrogate.seed = c.seed;
    }
    if (j.contains("recognize")) {
      const auto& r = j["recognize"];
      only_keys(r, {"backend", "endpoint", "rulebook", "timeout_ms", "retry", "repeats"}, "recognize");
      c.backend = r.value("backend", c.backend);
      if (c.backend != "rules" && c.backend != "external") throw config_error("recognize.backend must be rules or external");
      c.endpoint = r.value("endpoint", c.endpoint);
      if (r.contains("rulebook")) c.rulebook = existing(base, r["rulebook"].get<std::string>());
      c.timeout = std::chrono::milliseconds(r.value("timeout_ms", static_cast<long long>(c.timeout.count())));
      c.retry = r.value("retry", c.retry);
      c.repeats = r.value("repeats", c.repeats);
    }
    if (j.contains("eval")) {
      only_keys(j["eval"], {"mode"}, "eval");
      if (j["eval"].contains("mode")) c.eval_mode = evalmetrics::parse_mode(j["eval"]["mode"].get<std::string>());
    }
    if (j.contains("stats")) {
      const auto& s = j["stats"];
      only_keys(s, {"ngram_window", "top_k", "stoplist", "zero_count_weight", "embed_dim"}, "stats");
      c.ngram_window = s.value("ngram_window", c.ngram_window);
      c.top_k = s.value("top_k", c.top_k);
      if (s.contains("stoplist")) c.stoplist = existing(base, s["stoplist"].get<std::string>());
      c.zero_count_weight = s.value("zero_count_weight", c.zero_count_weight);
      c.embed_dim = s.value("embed_dim", c.embed_dim);
    }
    if (j.contains("syngen")) {
      const auto& s = j["syngen"];
      only_keys(s, {"template", "fanout", "temperature", "timeout_ms", "filter"}, "syngen");
      c.template_id = s.value("template", c.template_id);
      if (c.template_id != "A" && c.template_id != "B" && c.template_id != "C") {
        c.template_id = existing(base, c.template_id).string();
      }
      c.fanout = s.value("fanout", c.fanout);
      c.temperature = s.value("temperature", c.temperature);
      c.generation_timeout =
          std::chrono::milliseconds(s.value("timeout_ms", static_cast<long long>(c.generation_timeout.count())));
      if (s.contains("filter")) c.filter = syngen::FilterPolicy::from_json(s["filter"]);
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("bad pipeline config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad pipeline config: ") + e.what(),
                {path.string(), 0, std::nullopt});
  }
  return from_json(j, path.parent_path());
}

}  // namespace deid::cli
