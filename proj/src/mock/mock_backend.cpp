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

#include "deid/mock/mock_backend.hpp"

#include "deid/annot_io/jsonl.hpp"
#include "deid/core/bio.hpp"
#include "deid/core/error.hpp"
#include "deid/core/fileio.hpp"
#include "deid/core/tokenize.hpp"
#include "deid/core/utf8.hpp"
#include "deid/corpusstats/corpusstats.hpp"
#include "deid/recognize/rules.hpp"

namespace deid::mock {
namespace {

using nlohmann::json;

constexpr std::string_view kOpen = "<RECORD>";
constexpr std::string_view kClose = "</RECORD>";

std::string last_record(const std::string& prompt) {
  const auto close = prompt.rfind(kClose);
  if (close == std::string::npos) return std::string(kOpen) + "No exemplar was supplied ." + std::string(kClose);
  const auto open = prompt.rfind(kOpen, close);
  if (open == std::string::npos) return std::string(kOpen) + "No exemplar was supplied ." + std::string(kClose);
  return prompt.substr(open, close + kClose.size() - open);
}

json spans_json(const std::vector<EntitySpan>& spans) {
  json out = json::array();
  for (const auto& s : spans) out.push_back({{"start", s.start}, {"end", s.end}, {"tag", s.tag}});
  return out;
}

}  // namespace

MockConfig MockConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  MockConfig c;
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "gold") {
        const auto corpus = annot_io::read_jsonl_infer(read_file(resolve(v.get<std::string>())));
        for (const auto& d : corpus.documents) c.gold[d.id] = d;
      } else if (k == "script") {
        const json s = v.is_string() ? json::parse(read_file(resolve(v.get<std::string>()))) : v;
        c.script = s.get<std::map<std::string, std::string>>();
      } else if (k == "embed_dim") {
        c.embed_dim = v.get<std::size_t>();
      } else {
        throw Error(ErrorCode::kInvalidConfig, "unknown mock key '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad mock config: ") + e.what());
  }
  return c;
}

MockConfig MockConfig::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad mock config: ") + e.what(),
                {path.string(), 0, std::nullopt});
  }
  return from_json(j, path.parent_path());
}

MockBackend::MockBackend(MockConfig config)
    : config_(std::move(config)), rules_(std::make_unique<recognize::RuleRecognizer>(recognize::builtin_rulebook())) {}

MockBackend::~MockBackend() = default;
MockBackend::MockBackend(MockBackend&&) noexcept = default;

std::string MockBackend::action(const std::string& id) const {
  const auto it = config_.script.find(id);
  return it == config_.script.end() ? std::string{} : it->second;
}

nlohmann::json MockBackend::handle(const nlohmann::json& request) const {
  if (!request.is_object() || !request.contains("id") || !request["id"].is_string()) {
    return {{"id", nullptr}, {"error", "request needs a string id"}};
  }
  const auto id = request["id"].get<std::string>();
  const auto act = action(id);
  if (act == "timeout") throw Error(ErrorCode::kTimeout, "scripted timeout for '" + id + "'");
  if (act == "fail") return {{"id", id}, {"error", "scripted failure"}};
  const std::string reply_id = act == "bad_id" ? id + "-other" : id;

  if (request.contains("prompt")) {
    const auto record = last_record(request["prompt"].get<std::string>());
    const auto body = record.substr(kOpen.size(), record.size() - kOpen.size() - kClose.size());
    std::string text = record;
    if (act == "malformed") {
      text = std::string(kOpen) + "Seen by <TYPE='Doctor_Name'>Dr Mehta on 25-08-2023 ." + std::string(kClose);
    } else if (act == "short") {
      text = std::string(kOpen) + "Patient discharged in a stable condition with advice ." + std::string(kClose);
    } else if (act == "no_envelope") {
      text = body;
    } else if (act == "gibberish") {
      text = std::string(kOpen) + body + std::string(body.size() / 10 + 1, '\x01') + std::string(kClose);
    } else if (act == "repeat") {
      std::string words;
      for (int i = 0; i < 150; ++i) words += "fever ";
      text = std::string(kOpen) + words + body + std::string(kClose);
    }
    return {{"id", reply_id}, {"text", text}};
  }

  if (request.contains("tokens")) {
    corpusstats::HashEmbedder embedder(config_.embed_dim);
    return {{"id", reply_id}, {"vectors", embedder.embed(request["tokens"].get<std::vector<std::string>>())}};
  }

  if (request.contains("text")) {
    const auto text = request["text"].get<std::string>();
    if (act == "malformed") return {{"id", reply_id}};
    std::vector<EntitySpan> spans;
    const auto it = config_.gold.find(id);
    if (it != config_.gold.end() && it->second.text == text) {
      spans = it->second.entities;
    } else {
      spans = rules_->recognize(text);
    }
    if (request.contains("schema") && request["schema"].is_array()) {
      const auto allowed = request["schema"].get<std::vector<std::string>>();
      std::erase_if(spans, [&](const EntitySpan& s) {
        return std::find(allowed.begin(), allowed.end(), s.tag) == allowed.end();
      });
    }
    if (act == "out_of_range") {
      const auto n = utf8::length(text);
      spans.push_back({n, n + 5, spans.empty() ? "DATE" : spans.front().tag, {}});
    }
    if (act == "tokens") {
      Document doc{id, text, spans, {}};
      const auto seq = spans_to_bio(doc, tokenize(text));
      json toks = json::array();
      for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        const auto& t = seq.tokens[i];
        toks.push_back({{"surface", t.surface}, {"start", t.start}, {"end", t.end}, {"label", (*seq.labels)[i].str()}});
      }
      return {{"id", reply_id}, {"tokens", toks}};
    }
    return {{"id", reply_id}, {"spans", spans_json(spans)}};
  }

  return {{"id", id}, {"error", "request has none of text, prompt or tokens"}};
}

}  // namespace deid::mock
