// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <pthread.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "genex/error.hpp"
#include "genex/filter.hpp"
#include "genex/lm.hpp"
#include "genex/rank.hpp"
#include "genex/subtype.hpp"

extern char** environ;

namespace genex::bridge {

using nlohmann::json;

inline const std::vector<std::string>& supportedOps() {
  static const std::vector<std::string> kOps = {"logprobs", "seqscore", "nli", "complete", "infill", "discriminate"};
  return kOps;
}

// A request is one JSON object per line: {"id", "op", ...payload fields}.
inline json makeRequest(const std::string& id, const std::string& op, const json& payload) {
  json j = payload.is_object() ? payload : json::object();
  j["id"] = id;
  j["op"] = op;
  return j;
}

struct Response {
  std::string id;
  bool ok = false;
  json result;
  std::string error;
};

// A response is {"id", "ok": true, "result": ...} or {"id", "ok": false,
// "error": "..."}; id may be null when the request could not be parsed.
inline Response parseResponse(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("malformed response: ") + e.what());
  }
  if (!j.is_object() || !j.contains("ok") || !j.at("ok").is_boolean()) {
    throw Error(ErrorCode::ProtocolError, "response lacks a boolean 'ok'");
  }
  Response r;
  if (j.contains("id") && j.at("id").is_string()) r.id = j.at("id").get<std::string>();
  r.ok = j.at("ok").get<bool>();
  if (r.ok) {
    if (!j.contains("result")) throw Error(ErrorCode::ProtocolError, "ok response lacks 'result'");
    r.result = j.at("result");
  } else {
    r.error = j.value("error", "unspecified error");
  }
  return r;
}

inline json okResponse(const std::string& id, json result) {
  return {{"id", id}, {"ok", true}, {"result", std::move(result)}};
}

inline json errorResponse(const json& id, const std::string& message) {
  return {{"id", id}, {"ok", false}, {"error", message}};
}

// Line transport. readLine blocks and returns nullopt at end of stream.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void writeLine(const std::string& line) = 0;
  virtual std::optional<std::string> readLine() = 0;
  virtual void closeWrite() = 0;
};

// Transport over a pair of file descriptors, owned by this object.
class FdTransport : public Transport {
 public:
  FdTransport(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}
  FdTransport(const FdTransport&) = delete;
  FdTransport& operator=(const FdTransport&) = delete;

  ~FdTransport() override {
    closeWrite();
    if (read_fd_ >= 0) ::close(read_fd_);
  }

  // SIGPIPE is blocked for the calling thread while writing, so a service
  // that has exited surfaces as an IoError instead of killing the process.
  void writeLine(const std::string& line) override {
    std::string data = line + "\n";
    sigset_t pipe_set, old_set;
    sigemptyset(&pipe_set);
    sigaddset(&pipe_set, SIGPIPE);
    pthread_sigmask(SIG_BLOCK, &pipe_set, &old_set);
    int err = 0;
    std::size_t off = 0;
    while (off < data.size()) {
      auto n = ::write(write_fd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        err = errno;
        break;
      }
      off += static_cast<std::size_t>(n);
    }
    if (err == EPIPE) {
      const timespec zero{0, 0};
      sigtimedwait(&pipe_set, nullptr, &zero);
    }
    pthread_sigmask(SIG_SETMASK, &old_set, nullptr);
    if (err != 0) throw Error(ErrorCode::IoError, std::string("bridge write failed: ") + std::strerror(err));
  }

  std::optional<std::string> readLine() override {
    while (true) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        auto line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      auto n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        if (buffer_.empty()) return std::nullopt;
        auto line = std::move(buffer_);
        buffer_.clear();
        return line;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void closeWrite() override {
    if (write_fd_ >= 0) {
      ::close(write_fd_);
      write_fd_ = -1;
    }
  }

 private:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

// Runs the bridge as a child process speaking the protocol over stdio.
class SubprocessTransport : public FdTransport {
 public:
  static std::unique_ptr<SubprocessTransport> spawn(const std::vector<std::string>& argv) {
    if (argv.empty()) throw Error(ErrorCode::ConfigurationError, "bridge command is empty");
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw Error(ErrorCode::IoError, "pipe failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw Error(ErrorCode::IoError, "pipe failed");
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) posix_spawn_file_actions_addclose(&actions, fd);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    pid_t pid = 0;
    int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      throw Error(ErrorCode::ConfigurationError, "cannot start bridge '" + argv[0] + "': " + std::strerror(rc));
    }
    return std::unique_ptr<SubprocessTransport>(new SubprocessTransport(from_child[0], to_child[1], pid));
  }

  ~SubprocessTransport() override {
    closeWrite();
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

 private:
  SubprocessTransport(int read_fd, int write_fd, pid_t pid) : FdTransport(read_fd, write_fd), pid_(pid) {}

  pid_t pid_;
};

// Thread-safe request/response client. Any number of callers may have
// requests in flight; a reader thread matches responses to requests by id, so
// the service may answer in any order.
class Client {
 public:
  explicit Client(std::unique_ptr<Transport> transport,
                  std::chrono::milliseconds timeout = std::chrono::milliseconds(120000))
      : transport_(std::move(transport)), timeout_(timeout) {
    reader_ = std::thread([this] { readLoop(); });
  }

  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  ~Client() {
    transport_->closeWrite();
    if (reader_.joinable()) reader_.join();
  }

  json call(const std::string& op, const json& payload) {
    std::future<Response> fut;
    std::string id;
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (closed_) throw Error(ErrorCode::ProtocolError, "bridge connection closed: " + close_reason_);
      id = std::to_string(next_id_++);
      fut = pending_[id].get_future();
    }
    {
      std::lock_guard<std::mutex> lock(write_mu_);
      try {
        transport_->writeLine(makeRequest(id, op, payload).dump());
      } catch (...) {
        std::lock_guard<std::mutex> l2(mu_);
        pending_.erase(id);
        throw;
      }
    }
    if (fut.wait_for(timeout_) != std::future_status::ready) {
      std::lock_guard<std::mutex> lock(mu_);
      pending_.erase(id);
      throw Error(ErrorCode::ProtocolError, "bridge request " + id + " (" + op + ") timed out");
    }
    auto r = fut.get();
    if (!r.ok) throw Error(ErrorCode::ProtocolError, op + ": " + r.error);
    return r.result;
  }

  // Responses that matched no pending request.
  std::size_t strayResponses() const { return stray_.load(); }

 private:
  void readLoop() {
    std::string reason = "end of stream";
    try {
      while (auto line = transport_->readLine()) {
        if (text::trim(*line).empty()) continue;
        Response r;
        try {
          r = parseResponse(*line);
        } catch (const Error&) {
          ++stray_;
          continue;
        }
        std::lock_guard<std::mutex> lock(mu_);
        auto it = pending_.find(r.id);
        if (it == pending_.end()) {
          ++stray_;
          continue;
        }
        it->second.set_value(std::move(r));
        pending_.erase(it);
      }
    } catch (const std::exception& e) {
      reason = e.what();
    }
    std::lock_guard<std::mutex> lock(mu_);
    closed_ = true;
    close_reason_ = reason;
    for (auto& [id, p] : pending_) p.set_value(Response{id, false, nullptr, "bridge connection closed: " + reason});
    pending_.clear();
  }

  std::unique_ptr<Transport> transport_;
  std::chrono::milliseconds timeout_;
  std::mutex mu_;
  std::mutex write_mu_;
  std::map<std::string, std::promise<Response>> pending_;
  std::uint64_t next_id_ = 1;
  bool closed_ = false;
  std::string close_reason_;
  std::atomic<std::size_t> stray_{0};
  std::thread reader_;
};

// ---------------------------------------------------------------------------
// Provider clients

// Next-word scorer backed by the bridge. The request carries the prefix as
// words; the result is either a dense "logprobs" array aligned with this
// client's vocabulary or a sparse {"topk": {word: logprob}, "backoff": mass}
// whose backoff mass is spread uniformly over the vocabulary words missing
// from topk. Words outside the vocabulary are ignored.
class LmClient : public LmScorer {
 public:
  LmClient(Client& client, Vocabulary vocab) : client_(client), vocab_(std::move(vocab)) {}

  const Vocabulary& vocabulary() const override { return vocab_; }

  std::vector<double> nextLogProbs(std::span<const TokenId> prefix) const override {
    json words = json::array();
    for (auto t : prefix) words.push_back(vocab_.symbol(t));
    return fromResult(client_.call("logprobs", {{"prefix", words}}));
  }

  std::vector<double> fromResult(const json& r) const {
    std::vector<double> lp(vocab_.size(), kNegInf);
    if (r.contains("logprobs")) {
      auto dense = r.at("logprobs").get<std::vector<double>>();
      if (dense.size() != vocab_.size()) throw Error(ErrorCode::ScorerMismatch, "dense logprobs size mismatch");
      lp = std::move(dense);
    } else if (r.contains("topk")) {
      std::vector<bool> seen(vocab_.size(), false);
      std::size_t missing = vocab_.size();
      for (const auto& [word, v] : r.at("topk").items()) {
        if (auto id = vocab_.find(word)) {
          lp[*id] = v.get<double>();
          seen[*id] = true;
          --missing;
        }
      }
      double backoff = r.value("backoff", 0.0);
      if (missing > 0 && backoff > 0) {
        double each = std::log(backoff / static_cast<double>(missing));
        for (std::size_t i = 0; i < lp.size(); ++i) {
          if (!seen[i]) lp[i] = each;
        }
      }
      renormalize(lp);
    } else {
      throw Error(ErrorCode::ProtocolError, "logprobs result needs 'logprobs' or 'topk'");
    }
    return lp;
  }

 private:
  // Restricting a sparse distribution to the vocabulary loses mass; put it back.
  static void renormalize(std::vector<double>& lp) {
    double mx = kNegInf;
    for (double v : lp) mx = std::max(mx, v);
    if (mx == kNegInf) throw Error(ErrorCode::ScorerMismatch, "no vocabulary word received probability mass");
    double s = 0.0;
    for (double v : lp) s += std::exp(v - mx);
    double log_z = mx + std::log(s);
    for (auto& v : lp) v -= log_z;
  }

  Client& client_;
  Vocabulary vocab_;
};

inline double sequenceLogProb(Client& client, const std::vector<std::string>& words) {
  return client.call("seqscore", {{"tokens", words}}).at("logprob").get<double>();
}

class NliClient : public NliProvider {
 public:
  explicit NliClient(Client& client) : client_(client) {}

  NliJudgment judge(const std::string& premise, const std::string& hypothesis) const override {
    auto r = client_.call("nli", {{"premise", premise}, {"hypothesis", hypothesis}});
    NliJudgment j{r.at("entail").get<double>(), r.at("neutral").get<double>(), r.at("contradict").get<double>()};
    if (!j.valid()) throw Error(ErrorCode::ProtocolError, "nli result is not a distribution");
    return j;
  }

 private:
  Client& client_;
};

class CompletionClient : public TextCompletionProvider {
 public:
  CompletionClient(Client& client, int max_in_flight = 4) : client_(client), max_in_flight_(max_in_flight) {}

  std::vector<std::string> complete(const std::string& prompt, int n_sequences) const override {
    auto r = client_.call("complete", {{"prompt", prompt}, {"n", n_sequences}});
    return r.at("completions").get<std::vector<std::string>>();
  }

  int maxInFlight() const override { return max_in_flight_; }

 private:
  Client& client_;
  int max_in_flight_;
};

class InfillClient : public MaskInfillProvider {
 public:
  InfillClient(Client& client, int max_in_flight = 4) : client_(client), max_in_flight_(max_in_flight) {}

  std::vector<std::pair<std::string, double>> infill(const std::string& text_in, int k) const override {
    auto r = client_.call("infill", {{"text", text_in}, {"k", k}});
    std::vector<std::pair<std::string, double>> out;
    for (const auto& f : r.at("fills")) out.emplace_back(f.at(0).get<std::string>(), f.at(1).get<double>());
    return out;
  }

  int maxInFlight() const override { return max_in_flight_; }

 private:
  Client& client_;
  int max_in_flight_;
};

class DiscriminatorClient : public DiscriminatorProvider {
 public:
  DiscriminatorClient(Client& client, DiscriminatorKind kind, std::string model_id)
      : client_(client), kind_(kind), model_id_(std::move(model_id)) {}

  DiscriminatorKind kind() const override { return kind_; }
  std::string modelId() const override { return model_id_; }

  double score(const std::string& generic, const std::string& exemplar) const override {
    auto r = client_.call("discriminate", {{"kind", discriminatorKindName(kind_)}, {"generic", generic}, {"exemplar", exemplar}});
    return r.at("probability").get<double>();
  }

 private:
  Client& client_;
  DiscriminatorKind kind_;
  std::string model_id_;
};

}  // namespace genex::bridge
