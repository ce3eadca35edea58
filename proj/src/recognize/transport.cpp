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

#include "deid/recognize/transport.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <mutex>
#include <vector>

#include <httplib.h>

#include "deid/core/error.hpp"

extern char** environ;

namespace deid::recognize {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

json parse_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocolViolation, std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kProtocolViolation, "response is not a JSON object");
  return j;
}

class Child {
 public:
  explicit Child(const std::string& command) {
    int to_child[2], from_child[2];
    if (pipe2(to_child, O_CLOEXEC) != 0) fail("pipe");
    if (pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      fail("pipe");
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
    // Own process group, so a kill reaches whatever the shell started.
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);
    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    const int rc = posix_spawn(&pid_, "/bin/sh", &actions, &attr, const_cast<char**>(argv), environ);
    posix_spawnattr_destroy(&attr);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_ = to_child[1];
    out_ = from_child[0];
    if (rc != 0) {
      ::close(in_);
      ::close(out_);
      throw Error(ErrorCode::kTransportError, "cannot start '" + command + "': " + std::strerror(rc));
    }
  }

  Child(const Child&) = delete;
  Child& operator=(const Child&) = delete;

  ~Child() {
    ::close(in_);
    const auto deadline = Clock::now() + std::chrono::seconds(1);
    int status = 0;
    while (waitpid(pid_, &status, WNOHANG) == 0) {
      if (Clock::now() > deadline) {
        kill(-pid_, SIGKILL);
        waitpid(pid_, &status, 0);
        break;
      }
      usleep(2000);
    }
    ::close(out_);
  }

  void kill_now() { kill(-pid_, SIGKILL); }

  void write_line(const std::string& line) {
    std::size_t done = 0;
    while (done < line.size()) {
      const auto n = ::write(in_, line.data() + done, line.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail("write to backend");
      }
      done += static_cast<std::size_t>(n);
    }
  }

  // Returns false on timeout.
  bool read_line(std::string& line, Clock::time_point deadline) {
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      if (left <= 0) return false;
      pollfd p{out_, POLLIN, 0};
      const int r = poll(&p, 1, static_cast<int>(left));
      if (r < 0 && errno == EINTR) continue;
      if (r < 0) fail("poll");
      if (r == 0) return false;
      char chunk[4096];
      const auto n = ::read(out_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n < 0) fail("read from backend");
      if (n == 0) throw Error(ErrorCode::kTransportError, "backend process closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  [[noreturn]] static void fail(const char* what) {
    throw Error(ErrorCode::kTransportError, std::string(what) + ": " + std::strerror(errno));
  }

  pid_t pid_ = -1;
  int in_ = -1;
  int out_ = -1;
  std::string buffer_;
};

}  // namespace

struct SubprocessTransport::Pool {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::unique_ptr<Child>> idle;
  unsigned live = 0;
  unsigned limit = 1;
};

SubprocessTransport::SubprocessTransport(std::string command, unsigned pool_size)
    : command_(std::move(command)), pool_(std::make_unique<Pool>()) {
  pool_->limit = std::max(1u, pool_size);
  signal(SIGPIPE, SIG_IGN);
}

SubprocessTransport::~SubprocessTransport() = default;

json SubprocessTransport::call(const json& request, std::chrono::milliseconds timeout) {
  std::unique_ptr<Child> child;
  {
    std::unique_lock lock(pool_->mu);
    pool_->cv.wait(lock, [&] { return !pool_->idle.empty() || pool_->live < pool_->limit; });
    if (!pool_->idle.empty()) {
      child = std::move(pool_->idle.back());
      pool_->idle.pop_back();
    } else {
      ++pool_->live;
    }
  }
  // Returns the child to the pool, or retires it after a failure.
  auto release = [&](bool healthy) {
    std::lock_guard lock(pool_->mu);
    if (healthy && child) {
      pool_->idle.push_back(std::move(child));
    } else {
      child.reset();
      --pool_->live;
    }
    pool_->cv.notify_one();
  };

  try {
    if (!child) child = std::make_unique<Child>(command_);
    const auto deadline = Clock::now() + timeout;
    child->write_line(request.dump() + "\n");
    for (;;) {
      std::string line;
      if (!child->read_line(line, deadline)) {
        child->kill_now();
        release(false);
        throw Error(ErrorCode::kTimeout, "no response from '" + command_ + "' within " +
                                             std::to_string(timeout.count()) + " ms");
      }
      if (line.empty()) continue;
      auto response = parse_response(line);
      if (request.contains("id") && response.contains("id") && response["id"] != request["id"]) continue;  // stale
      release(true);
      return response;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kTimeout) release(e.code() == ErrorCode::kProtocolViolation);
    throw;
  }
}

HttpTransport::HttpTransport(const std::string& url) : url_(url) {
  constexpr std::string_view scheme = "http://";
  if (url.rfind(scheme, 0) != 0) throw Error(ErrorCode::kInvalidConfig, "not an http:// URL: " + url);
  auto rest = url.substr(scheme.size());
  const auto slash = rest.find('/');
  path_ = slash == std::string::npos ? "/" : rest.substr(slash);
  auto authority = rest.substr(0, slash);
  const auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    try {
      port_ = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidConfig, "bad port in " + url);
    }
    authority = authority.substr(0, colon);
  }
  host_ = authority;
  if (host_.empty()) throw Error(ErrorCode::kInvalidConfig, "missing host in " + url);
}

HttpTransport::~HttpTransport() = default;

json HttpTransport::call(const json& request, std::chrono::milliseconds timeout) {
  httplib::Client client(host_, port_);
  const auto sec = timeout.count() / 1000;
  const auto usec = (timeout.count() % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  const auto started = Clock::now();
  auto res = client.Post(path_, request.dump(), "application/json");
  if (!res) {
    const bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                           (res.error() == httplib::Error::Read && Clock::now() - started >= timeout);
    throw Error(timed_out ? ErrorCode::kTimeout : ErrorCode::kTransportError,
                url_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kBackendError, url_ + " answered HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  return parse_response(res->body);
}

FunctionTransport::FunctionTransport(Handler handler, std::string name)
    : handler_(std::move(handler)), name_(std::move(name)) {}

json FunctionTransport::call(const json& request, std::chrono::milliseconds) {
  auto response = handler_(request);
  if (!response.is_object()) throw Error(ErrorCode::kProtocolViolation, "response is not a JSON object");
  return response;
}

std::unique_ptr<Transport> make_transport(const std::string& endpoint, unsigned pool_size) {
  if (endpoint.rfind("http://", 0) == 0) return std::make_unique<HttpTransport>(endpoint);
  std::string command = endpoint;
  if (command.rfind("exec:", 0) == 0) command = command.substr(5);
  if (command.empty()) throw Error(ErrorCode::kInvalidConfig, "empty backend endpoint");
  return std::make_unique<SubprocessTransport>(std::move(command), pool_size);
}

}  // namespace deid::recognize
