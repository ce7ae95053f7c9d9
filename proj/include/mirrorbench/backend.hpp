#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "mirrorbench/core.hpp"

namespace mirrorbench {

/// Transient or permanent generation failure after retry handling; status
/// carries the last HTTP status (0 for transport-level failures and scripted
/// misses).
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, int status_code = 0)
      : std::runtime_error(what), status(status_code) {}
  int status;
};

/// The endpoint answered but not in the expected chat-completions shape.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CallContext {
  std::string question_id;
  int call_index = 0;
  CallPurpose purpose = CallPurpose::sample;
};

struct GenerationOutcome {
  std::string text;
  int retry_count = 0;       // transient failures absorbed before this text
  std::int64_t latency_ms = 0;  // 0 on the scripted backend, by construction
};

class TextBackend {
 public:
  virtual ~TextBackend() = default;

  /// One logical generation. Retries happen inside; callers always see either
  /// one outcome or one exception per logical call.
  virtual GenerationOutcome generate(const CallContext& ctx, const std::string& prompt,
                                     const GenerationParams& params) = 0;
};

/// Frozen (question_id, call_index) -> response table backing offline runs.
class ScriptBook {
 public:
  /// Line-delimited JSON entries; duplicate keys or malformed lines throw
  /// with the line number.
  static ScriptBook load(const std::string& path);

  void add(const std::string& question_id, int call_index, std::string text);
  std::optional<std::string> find(const std::string& question_id, int call_index) const;
  std::size_t size() const { return entries_.size(); }
  void save(const std::string& path) const;

 private:
  std::map<std::pair<std::string, int>, std::string> entries_;
};

/// Deterministic offline backend. strict distinguishes regression tests
/// (missing key = call-ordering bug, hard error) from permissive replay
/// (missing key = empty text, which extracts to unparseable).
class ScriptedBackend : public TextBackend {
 public:
  ScriptedBackend(ScriptBook book, bool strict, int delay_ms = 0)
      : book_(std::move(book)), strict_(strict), delay_ms_(delay_ms) {}

  GenerationOutcome generate(const CallContext& ctx, const std::string& prompt,
                             const GenerationParams& params) override;

 private:
  ScriptBook book_;
  bool strict_;
  int delay_ms_;  // artificial per-call stall so tests can interrupt mid-run
};

struct HttpResult {
  int status = 0;
  std::string body;
  bool network_error = false;  // no HTTP exchange happened at all
  std::string error;           // transport-level detail when network_error
};

/// Seam between the retry/protocol logic and actual HTTP, so tests can fake
/// rate limits, outages, and malformed bodies without sockets.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual HttpResult post_json(const std::string& url, const json& body,
                               const std::map<std::string, std::string>& headers,
                               double timeout_s) = 0;
};

/// Real HTTPS/HTTP transport.
std::unique_ptr<ChatTransport> make_httplib_transport();

/// Client for OpenAI-compatible chat-completions endpoints. Sends one user
/// message per call, retries 429/5xx/network failures with exponential
/// backoff and jitter, caps concurrent requests at desc.max_in_flight, and
/// reports absorbed retries in the outcome's retry_count.
class ChatCompletionsBackend : public TextBackend {
 public:
  using SleepFn = std::function<void(std::chrono::milliseconds)>;

  /// transport/sleep_fn default to the real implementations.
  ChatCompletionsBackend(BackendDesc desc, std::unique_ptr<ChatTransport> transport = nullptr,
                         SleepFn sleep_fn = nullptr);
  ~ChatCompletionsBackend() override;

  GenerationOutcome generate(const CallContext& ctx, const std::string& prompt,
                             const GenerationParams& params) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Backend named by the manifest: "scripted" loads desc.script_path,
/// "chat_completions" builds the live client.
std::unique_ptr<TextBackend> make_backend(const BackendDesc& desc);

}  // namespace mirrorbench
