#include "mirrorbench/backend.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <semaphore>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "mirrorbench/rng.hpp"

namespace mirrorbench {

namespace {

constexpr const char* kScriptSchema = "script_entry/1";

}  // namespace

ScriptBook ScriptBook::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open script file: " + path);
  ScriptBook book;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json entry;
    try {
      entry = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad script line: " + e.what());
    }
    try {
      if (entry.at("schema").get<std::string>() != kScriptSchema) {
        throw std::runtime_error("unsupported schema " + entry["schema"].dump());
      }
      const auto qid = entry.at("question_id").get<std::string>();
      const int idx = entry.at("call_index").get<int>();
      auto text = entry.at("text").get<std::string>();
      if (idx < 0) throw std::runtime_error("negative call_index");
      if (!book.entries_.emplace(std::make_pair(qid, idx), std::move(text)).second) {
        throw std::runtime_error("duplicate key (" + qid + ", " + std::to_string(idx) + ")");
      }
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad script entry: " + e.what());
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return book;
}

void ScriptBook::add(const std::string& question_id, int call_index, std::string text) {
  if (call_index < 0) throw std::invalid_argument("negative call_index");
  if (!entries_.emplace(std::make_pair(question_id, call_index), std::move(text)).second) {
    throw std::runtime_error("duplicate script key (" + question_id + ", " +
                             std::to_string(call_index) + ")");
  }
}

std::optional<std::string> ScriptBook::find(const std::string& question_id,
                                            int call_index) const {
  auto it = entries_.find(std::make_pair(question_id, call_index));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScriptBook::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write script file: " + path);
  for (const auto& [key, text] : entries_) {
    json entry;
    entry["schema"] = kScriptSchema;
    entry["question_id"] = key.first;
    entry["call_index"] = key.second;
    entry["text"] = text;
    out << entry.dump() << '\n';
  }
  if (!out.flush()) throw std::runtime_error("failed writing script file: " + path);
}

GenerationOutcome ScriptedBackend::generate(const CallContext& ctx, const std::string& prompt,
                                            const GenerationParams& params) {
  (void)prompt;
  (void)params;
  if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
  auto text = book_.find(ctx.question_id, ctx.call_index);
  if (!text) {
    if (strict_) {
      throw BackendError("script has no entry for (" + ctx.question_id + ", " +
                         std::to_string(ctx.call_index) + ")");
    }
    return GenerationOutcome{"", 0, 0};
  }
  return GenerationOutcome{std::move(*text), 0, 0};
}

namespace {

class HttplibTransport : public ChatTransport {
 public:
  HttpResult post_json(const std::string& url, const json& body,
                       const std::map<std::string, std::string>& headers,
                       double timeout_s) override {
    auto split = split_url(url);
    httplib::Client cli(split.first);
    cli.set_connection_timeout(std::chrono::milliseconds(
        static_cast<std::int64_t>(timeout_s * 1000)));
    cli.set_read_timeout(std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000)));
    cli.set_write_timeout(std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000)));
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = cli.Post(split.second, h, body.dump(), "application/json");
    HttpResult out;
    if (!res) {
      out.network_error = true;
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }

 private:
  // "scheme://host[:port]/path" -> (base for the client, path for the request).
  static std::pair<std::string, std::string> split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      throw std::invalid_argument("endpoint must include a scheme: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
  }
};

}  // namespace

std::unique_ptr<ChatTransport> make_httplib_transport() {
  return std::make_unique<HttplibTransport>();
}

struct ChatCompletionsBackend::Impl {
  BackendDesc desc;
  std::unique_ptr<ChatTransport> transport;
  SleepFn sleep_fn;
  std::string url;
  std::string api_key;
  std::counting_semaphore<4096> slots;
  std::mutex rng_mu;
  RngStream jitter_rng;

  Impl(BackendDesc d, std::unique_ptr<ChatTransport> t, SleepFn s)
      : desc(std::move(d)),
        transport(t ? std::move(t) : make_httplib_transport()),
        sleep_fn(s ? std::move(s)
                   : [](std::chrono::milliseconds ms) { std::this_thread::sleep_for(ms); }),
        slots(desc.max_in_flight),
        jitter_rng(std::random_device{}()) {
    if (desc.endpoint.empty()) throw std::invalid_argument("chat_completions needs an endpoint");
    if (desc.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
    if (desc.max_in_flight > 4096) throw std::invalid_argument("max_in_flight too large");
    url = desc.endpoint;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const std::string suffix = "/chat/completions";
    if (url.size() < suffix.size() ||
        url.compare(url.size() - suffix.size(), suffix.size(), suffix) != 0) {
      url += suffix;
    }
    if (!desc.api_key_env.empty()) {
      const char* v = std::getenv(desc.api_key_env.c_str());
      if (v != nullptr) api_key = v;
    }
  }

  std::chrono::milliseconds backoff_delay(int retry_number, const RetryPolicy& retry) {
    double scale = std::pow(retry.backoff_factor, retry_number - 1);
    double jitter;
    {
      std::lock_guard<std::mutex> lock(rng_mu);
      jitter = 1.0 - retry.jitter_frac + 2.0 * retry.jitter_frac * jitter_rng.next_unit();
    }
    double ms = static_cast<double>(retry.base_delay.count()) * scale * jitter;
    return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(ms)));
  }
};

ChatCompletionsBackend::ChatCompletionsBackend(BackendDesc desc,
                                               std::unique_ptr<ChatTransport> transport,
                                               SleepFn sleep_fn)
    : impl_(std::make_unique<Impl>(std::move(desc), std::move(transport), std::move(sleep_fn))) {}

ChatCompletionsBackend::~ChatCompletionsBackend() = default;

GenerationOutcome ChatCompletionsBackend::generate(const CallContext& ctx,
                                                   const std::string& prompt,
                                                   const GenerationParams& params) {
  json request;
  request["model"] = params.model;
  request["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  request["temperature"] = params.temperature;
  request["max_tokens"] = params.max_tokens;

  std::map<std::string, std::string> headers;
  if (!impl_->api_key.empty()) headers["Authorization"] = "Bearer " + impl_->api_key;

  const RetryPolicy& retry = params.retry;
  if (retry.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");

  const auto started = std::chrono::steady_clock::now();
  int last_status = 0;
  std::string last_error;
  for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
    HttpResult res;
    {
      impl_->slots.acquire();
      struct Release {
        std::counting_semaphore<4096>* s;
        ~Release() { s->release(); }
      } release{&impl_->slots};
      res = impl_->transport->post_json(impl_->url, request, headers, params.timeout_s);
    }
    bool retryable = res.network_error || res.status == 429 || res.status >= 500;
    if (!res.network_error && res.status == 200) {
      json reply;
      try {
        reply = json::parse(res.body);
      } catch (const json::exception& e) {
        throw ProtocolError("response is not JSON (" + ctx.question_id + " call " +
                            std::to_string(ctx.call_index) + "): " + e.what());
      }
      std::string text;
      try {
        text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        throw ProtocolError("response missing choices[0].message.content: " +
                            std::string(e.what()));
      }
      GenerationOutcome out;
      out.text = std::move(text);
      out.retry_count = attempt - 1;
      out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();
      return out;
    }
    last_status = res.network_error ? 0 : res.status;
    last_error = res.network_error ? res.error : res.body;
    if (!retryable) {
      throw BackendError("request rejected with status " + std::to_string(res.status) + ": " +
                             res.body,
                         res.status);
    }
    if (attempt < retry.max_attempts) {
      impl_->sleep_fn(impl_->backoff_delay(attempt, retry));
    }
  }
  std::ostringstream msg;
  msg << "gave up after " << retry.max_attempts << " attempts (last status " << last_status;
  if (!last_error.empty()) msg << ", " << last_error;
  msg << ")";
  throw BackendError(msg.str(), last_status);
}

std::unique_ptr<TextBackend> make_backend(const BackendDesc& desc) {
  if (desc.kind == "scripted") {
    if (desc.script_path.empty()) throw std::invalid_argument("scripted backend needs script_path");
    return std::make_unique<ScriptedBackend>(ScriptBook::load(desc.script_path), desc.strict,
                                             desc.scripted_delay_ms);
  }
  if (desc.kind == "chat_completions") {
    return std::make_unique<ChatCompletionsBackend>(desc);
  }
  throw std::invalid_argument("unknown backend kind: " + desc.kind);
}

}  // namespace mirrorbench
