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

// Deterministic stand-in for the recognizer, LLM and embedding backends.
// Serves line-delimited JSON on stdin/stdout, or HTTP with --port.

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "deid/core/error.hpp"
#include "deid/mock/mock_backend.hpp"

namespace {

nlohmann::json answer(const deid::mock::MockBackend& backend, const std::string& line, bool& stall) {
  stall = false;
  nlohmann::json request;
  try {
    request = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    return {{"id", nullptr}, {"error", std::string("bad request: ") + e.what()}};
  }
  try {
    return backend.handle(request);
  } catch (const deid::Error& e) {
    if (e.code() == deid::ErrorCode::kTimeout) stall = true;
    return {{"id", request.value("id", std::string{})}, {"error", e.detail()}};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic mock backend for deid"};
  std::string config_path, gold_path, script_path;
  int port = 0;
  std::size_t embed_dim = 64;
  app.add_option("--config", config_path, "mock config JSON {gold, script, embed_dim}");
  app.add_option("--gold", gold_path, "gold JSONL echoed for recognize requests");
  app.add_option("--script", script_path, "JSON object mapping request ids to scripted actions");
  app.add_option("--embed-dim", embed_dim, "embedding dimension")->check(CLI::PositiveNumber);
  app.add_option("--port", port, "serve HTTP on 127.0.0.1:PORT instead of stdio");
  CLI11_PARSE(app, argc, argv);

  deid::mock::MockConfig config;
  try {
    if (!config_path.empty()) config = deid::mock::MockConfig::load(config_path);
    nlohmann::json overrides = nlohmann::json::object();
    if (!gold_path.empty()) overrides["gold"] = gold_path;
    if (!script_path.empty()) overrides["script"] = script_path;
    const auto extra = deid::mock::MockConfig::from_json(overrides, ".");
    if (!gold_path.empty()) config.gold = extra.gold;
    if (!script_path.empty()) config.script = extra.script;
    if (app.count("--embed-dim")) config.embed_dim = embed_dim;
  } catch (const deid::Error& e) {
    std::cerr << "deid-mock-backend: " << e.what() << "\n";
    return deid::is_io_error(e.code()) ? 2 : 1;
  }
  const deid::mock::MockBackend backend(std::move(config));

  if (port > 0) {
    httplib::Server server;
    server.Post(".*", [&](const httplib::Request& req, httplib::Response& res) {
      bool stall = false;
      const auto reply = answer(backend, req.body, stall);
      if (stall) std::this_thread::sleep_for(std::chrono::hours(1));
      res.set_content(reply.dump(), "application/json");
    });
    std::cerr << "deid-mock-backend: listening on 127.0.0.1:" << port << "\n";
    return server.listen("127.0.0.1", port) ? 0 : 2;
  }

  std::ios::sync_with_stdio(false);
  for (std::string line; std::getline(std::cin, line);) {
    if (line.empty()) continue;
    bool stall = false;
    const auto reply = answer(backend, line, stall);
    if (stall) {
      // Never answer; the caller's deadline fires and it kills this process.
      std::this_thread::sleep_for(std::chrono::hours(1));
      continue;
    }
    std::cout << reply.dump() << '\n' << std::flush;
  }
  return 0;
}
