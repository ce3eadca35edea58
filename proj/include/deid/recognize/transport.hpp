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
#include <functional>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

namespace deid::recognize {

// One request/response exchange of the line-delimited JSON wire protocol.
// Implementations are safe to call from several threads at once.
class Transport {
 public:
  virtual ~Transport() = default;

  // Throws Error(kTimeout) when no response arrives in time,
  // Error(kTransportError) when the channel fails and
  // Error(kProtocolViolation) when the response is not a JSON object.
  virtual nlohmann::json call(const nlohmann::json& request, std::chrono::milliseconds timeout) = 0;
  virtual std::string name() const = 0;
};

// POSTs each request as a JSON body to http://host[:port]/path.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(const std::string& url);
  ~HttpTransport() override;

  nlohmann::json call(const nlohmann::json& request, std::chrono::milliseconds timeout) override;
  std::string name() const override { return url_; }

 private:
  std::string url_;
  std::string host_;
  int port_ = 80;
  std::string path_;
};

// Runs `command` through /bin/sh; requests go to its stdin and responses are
// read from its stdout, one JSON object per line. Up to `pool_size` child
// processes serve calls in parallel. A child that times out is killed and
// replaced; lines answering a different id are skipped as stale.
class SubprocessTransport : public Transport {
 public:
  SubprocessTransport(std::string command, unsigned pool_size = 1);
  ~SubprocessTransport() override;

  nlohmann::json call(const nlohmann::json& request, std::chrono::milliseconds timeout) override;
  std::string name() const override { return command_; }

 private:
  struct Pool;
  std::string command_;
  std::unique_ptr<Pool> pool_;
};

// Calls a function in-process; for tests and embedding.
class FunctionTransport : public Transport {
 public:
  using Handler = std::function<nlohmann::json(const nlohmann::json&)>;
  FunctionTransport(Handler handler, std::string name = "in-process");

  nlohmann::json call(const nlohmann::json& request, std::chrono::milliseconds timeout) override;
  std::string name() const override { return name_; }

 private:
  Handler handler_;
  std::string name_;
};

// "http://..." selects HttpTransport; anything else is a subprocess command
// (an optional "exec:" prefix is stripped).
std::unique_ptr<Transport> make_transport(const std::string& endpoint, unsigned pool_size = 1);

}  // namespace deid::recognize
