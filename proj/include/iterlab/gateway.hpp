// Copyright 2026 The iterlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Clients for the model endpoints, with injectable transport and clock.

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "iterlab/types.hpp"

namespace iterlab {

class Clock {
 public:
  using Duration = std::chrono::nanoseconds;
  using TimePoint = std::chrono::time_point<std::chrono::steady_clock, Duration>;

  virtual ~Clock() = default;
  virtual TimePoint now() = 0;
  virtual void sleep_until(TimePoint t) = 0;
  void sleep_for(Duration d) { sleep_until(now() + d); }
  /// Wall-clock time used for record timestamps.
  virtual std::chrono::system_clock::time_point wall_now() = 0;
};

class SystemClock final : public Clock {
 public:
  TimePoint now() override;
  void sleep_until(TimePoint t) override;
  std::chrono::system_clock::time_point wall_now() override;
};

/// Virtual time: sleeping advances the clock instantly. Thread-safe.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::chrono::system_clock::time_point wall_epoch = {})
      : wall_epoch_(wall_epoch) {}
  TimePoint now() override;
  void sleep_until(TimePoint t) override;
  std::chrono::system_clock::time_point wall_now() override;
  void advance(Duration d);

 private:
  std::mutex mu_;
  TimePoint now_{};
  std::chrono::system_clock::time_point wall_epoch_;
};

/// Exponential backoff with full jitter: the delay before retry k (k >= 1)
/// is uniform in [0, min(cap, base * factor^(k-1))].
struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base{1000};
  double factor = 2.0;
  std::chrono::milliseconds cap{60000};

  std::chrono::milliseconds ceiling(int retry) const;
  std::chrono::milliseconds delay(int retry, std::mt19937_64& rng) const;
};

/// Spaces request starts at least 1/rps apart. Thread-safe; the serialization
/// point for concurrent callers of one provider.
class RateLimiter {
 public:
  RateLimiter(double requests_per_second, Clock& clock);
  void acquire();

 private:
  Clock& clock_;
  Clock::Duration interval_;
  std::mutex mu_;
  std::optional<Clock::TimePoint> next_;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// POST transport. Network failures and timeouts throw TransportError.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& url,
                            const std::map<std::string, std::string>& headers,
                            const std::string& body,
                            std::chrono::seconds timeout) = 0;
};

/// cpp-httplib backed transport (http and https).
std::unique_ptr<HttpTransport> make_http_transport();

struct ProviderConfig {
  std::string name;
  std::string endpoint;        // full URL of the POST endpoint
  std::string model_id;
  std::string credential_env;  // env var holding the bearer token; may be empty
  double requests_per_second = 2.0;
  int max_concurrency = 4;
  int timeout_s = 600;
  int batch_limit = 64;  // embeddings only
  int max_tokens = 10000;  // judge only
};

void to_json(Json& j, const ProviderConfig& v);
void from_json(const Json& j, ProviderConfig& v);

struct ChatMessage {
  std::string role;  // "user" or "assistant"
  std::string content;
};

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  double temperature = 0.7;
  int max_tokens = 10000;
};

/// Throws PreconditionError when a ChatRequest invariant fails.
void check_request(const ChatRequest& req);

/// OpenAI-compatible request body.
Json chat_request_body(const ChatRequest& req);

struct ChatResult {
  std::string text;
  std::optional<TokenUsage> usage;
  bool truncated = false;  // provider stopped at max_tokens
  int attempts = 1;
  Json raw_response;       // provider payload as received
};

/// Anything that can answer a chat request: real providers or mocks.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResult complete_chat(const ChatRequest& req) = 0;
};

/// Runs `call` under the retry policy. `call` returns an HttpResponse or
/// throws TransportError. Retries timeouts, 429 and 5xx; 401/403 raise
/// AuthError immediately and other 4xx are returned to the caller.
HttpResponse with_retries(const RetryPolicy& policy, Clock& clock,
                          std::mt19937_64& rng,
                          const std::function<HttpResponse()>& call,
                          int* attempts_out = nullptr);

/// Shared plumbing for one configured provider: credential, limiter,
/// concurrency cap, retries.
class ProviderHandle {
 public:
  ProviderHandle(ProviderConfig config, HttpTransport& transport, Clock& clock,
                 RetryPolicy retry = {}, std::uint64_t seed = 0x5eed);

  const ProviderConfig& config() const { return config_; }

  /// POSTs `body` with retries. Returns the final response (2xx or a
  /// permanent 4xx) and the number of attempts used.
  HttpResponse post_json(const Json& body, int* attempts_out);

 private:
  ProviderConfig config_;
  HttpTransport& transport_;
  Clock& clock_;
  RetryPolicy retry_;
  RateLimiter limiter_;
  std::counting_semaphore<1024> slots_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
};

class ChatClient final : public ChatBackend {
 public:
  ChatClient(ProviderConfig config, HttpTransport& transport, Clock& clock,
             RetryPolicy retry = {}, std::uint64_t seed = 0x5eed);

  /// Throws ProviderExhausted, AuthError, ContentFilterBlocked, ProviderError.
  ChatResult complete_chat(const ChatRequest& req) override;

  const ProviderConfig& config() const { return handle_.config(); }

 private:
  ProviderHandle handle_;
};

/// Routes requests to the client configured for their model id.
class ModelRouter final : public ChatBackend {
 public:
  void add(std::unique_ptr<ChatClient> client);
  bool has(std::string_view model_id) const;
  ChatResult complete_chat(const ChatRequest& req) override;

 private:
  std::map<std::string, std::unique_ptr<ChatClient>, std::less<>> clients_;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;
  int dim = 0;

  bool operator==(const EmbeddingVector&) const = default;
};

EmbeddingVector make_embedding(std::vector<double> values,
                               std::string model_id = {});

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// One vector per input, order preserved.
  virtual std::vector<EmbeddingVector> embed_texts(
      const std::vector<std::string>& texts) = 0;
  /// Largest batch accepted by one embed_texts call.
  virtual std::size_t batch_limit() const { return 64; }
};

/// Client for an OpenAI-style embeddings endpoint: request
/// {"model", "input": [...]}, response {"data": [{"index", "embedding"}]}.
class EmbeddingClient final : public Embedder {
 public:
  EmbeddingClient(ProviderConfig config, HttpTransport& transport, Clock& clock,
                  RetryPolicy retry = {}, std::uint64_t seed = 0x5eed);

  /// Empty texts and oversize batches are rejected with PreconditionError
  /// before any request. Duplicate inputs are sent once, so identical strings
  /// always receive identical vectors. Throws DimensionMismatch on ragged
  /// dims.
  std::vector<EmbeddingVector> embed_texts(
      const std::vector<std::string>& texts) override;
  std::size_t batch_limit() const override;

 private:
  ProviderHandle handle_;
};

/// Embeds texts in chunks of `embedder.batch_limit()`.
std::vector<EmbeddingVector> embed_all(Embedder& embedder,
                                       const std::vector<std::string>& texts);

class Judge {
 public:
  virtual ~Judge() = default;
  /// Returns the judge's raw text, untouched.
  virtual std::string judge_call(std::string_view judge_prompt,
                                 std::string_view payload) = 0;
};

/// Judge over a chat endpoint at temperature 0. The prompt and payload go out
/// as one user message separated by a blank line.
class JudgeClient final : public Judge {
 public:
  JudgeClient(ProviderConfig config, HttpTransport& transport, Clock& clock,
              RetryPolicy retry = {}, std::uint64_t seed = 0x5eed);

  /// Throws ProviderExhausted, AuthError, JudgePayloadTooLarge.
  std::string judge_call(std::string_view judge_prompt,
                         std::string_view payload) override;

 private:
  ChatClient chat_;
};

std::string judge_message(std::string_view judge_prompt,
                          std::string_view payload);

/// Raw request/response payloads of one run, kept as
/// <dir>/<stem>.request.json and <dir>/<stem>.response.json. Lock-guarded;
/// safe for concurrent writers.
class Archive {
 public:
  explicit Archive(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }
  void write_request(std::string_view stem, const Json& payload);
  void write_response(std::string_view stem, const Json& payload);

 private:
  void write(std::string_view stem, std::string_view kind, const Json& payload);

  std::filesystem::path dir_;
  std::mutex mu_;
};

}  // namespace iterlab
