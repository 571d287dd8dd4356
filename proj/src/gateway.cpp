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

#include "iterlab/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <unordered_map>

#include "iterlab/errors.hpp"
#include "iterlab/util.hpp"

namespace iterlab {

Clock::TimePoint SystemClock::now() {
  return std::chrono::time_point_cast<Duration>(std::chrono::steady_clock::now());
}

void SystemClock::sleep_until(TimePoint t) { std::this_thread::sleep_until(t); }

std::chrono::system_clock::time_point SystemClock::wall_now() {
  return std::chrono::system_clock::now();
}

Clock::TimePoint ManualClock::now() {
  std::lock_guard lock(mu_);
  return now_;
}

void ManualClock::sleep_until(TimePoint t) {
  std::lock_guard lock(mu_);
  now_ = std::max(now_, t);
}

std::chrono::system_clock::time_point ManualClock::wall_now() {
  std::lock_guard lock(mu_);
  return wall_epoch_ + std::chrono::duration_cast<
                           std::chrono::system_clock::duration>(
                           now_.time_since_epoch());
}

void ManualClock::advance(Duration d) {
  std::lock_guard lock(mu_);
  now_ += d;
}

std::chrono::milliseconds RetryPolicy::ceiling(int retry) const {
  double ms = static_cast<double>(base.count()) *
              std::pow(factor, static_cast<double>(std::max(retry, 1) - 1));
  ms = std::min(ms, static_cast<double>(cap.count()));
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

std::chrono::milliseconds RetryPolicy::delay(int retry,
                                             std::mt19937_64& rng) const {
  auto hi = ceiling(retry).count();
  if (hi <= 0) return std::chrono::milliseconds(0);
  std::uniform_int_distribution<long long> dist(0, hi);
  return std::chrono::milliseconds(dist(rng));
}

RateLimiter::RateLimiter(double requests_per_second, Clock& clock)
    : clock_(clock) {
  if (!(requests_per_second > 0)) {
    throw PreconditionError("requests_per_second must be positive");
  }
  interval_ = std::chrono::duration_cast<Clock::Duration>(
      std::chrono::duration<double>(1.0 / requests_per_second));
}

void RateLimiter::acquire() {
  Clock::TimePoint slot;
  {
    std::lock_guard lock(mu_);
    auto now = clock_.now();
    slot = next_ ? std::max(now, *next_) : now;
    next_ = slot + interval_;
  }
  clock_.sleep_until(slot);
}

void to_json(Json& j, const ProviderConfig& v) {
  j = Json{{"name", v.name},
           {"endpoint", v.endpoint},
           {"model_id", v.model_id},
           {"credential_env", v.credential_env},
           {"requests_per_second", v.requests_per_second},
           {"max_concurrency", v.max_concurrency},
           {"timeout_s", v.timeout_s},
           {"batch_limit", v.batch_limit},
           {"max_tokens", v.max_tokens}};
}

void from_json(const Json& j, ProviderConfig& v) {
  ProviderConfig d;
  v.name = j.value("name", std::string{});
  v.endpoint = j.at("endpoint").get<std::string>();
  v.model_id = j.at("model_id").get<std::string>();
  v.credential_env = j.value("credential_env", std::string{});
  v.requests_per_second = j.value("requests_per_second", d.requests_per_second);
  v.max_concurrency = j.value("max_concurrency", d.max_concurrency);
  v.timeout_s = j.value("timeout_s", d.timeout_s);
  v.batch_limit = j.value("batch_limit", d.batch_limit);
  v.max_tokens = j.value("max_tokens", d.max_tokens);
}

void check_request(const ChatRequest& req) {
  if (req.messages.empty()) throw PreconditionError("messages is empty");
  if (!(req.temperature >= 0.0)) throw PreconditionError("temperature < 0");
  if (req.max_tokens <= 0) throw PreconditionError("max_tokens <= 0");
  for (const auto& m : req.messages) {
    if (m.role != "user" && m.role != "assistant") {
      throw PreconditionError("unsupported role: " + m.role);
    }
  }
}

Json chat_request_body(const ChatRequest& req) {
  Json messages = Json::array();
  for (const auto& m : req.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  return Json{{"model", req.model_id},
              {"messages", std::move(messages)},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens}};
}

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

std::string snippet(const std::string& body) {
  return body.size() <= 300 ? body : body.substr(0, 300) + "...";
}

// Provider error code from an OpenAI-style {"error": {"code": ...}} body.
std::string error_code(const std::string& body) {
  auto j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return {};
  auto it = j.find("error");
  if (it == j.end() || !it->is_object()) return {};
  for (const char* key : {"code", "type"}) {
    if (auto c = it->find(key); c != it->end() && c->is_string()) {
      auto s = c->get<std::string>();
      if (!s.empty()) return s;
    }
  }
  return {};
}

}  // namespace

HttpResponse with_retries(const RetryPolicy& policy, Clock& clock,
                          std::mt19937_64& rng,
                          const std::function<HttpResponse()>& call,
                          int* attempts_out) {
  std::string last_error;
  const int max_attempts = std::max(policy.max_attempts, 1);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempts_out) *attempts_out = attempt;
    if (attempt > 1) clock.sleep_for(policy.delay(attempt - 1, rng));
    try {
      HttpResponse resp = call();
      if (resp.status == 401 || resp.status == 403) {
        throw AuthError("provider rejected credentials (HTTP " +
                        std::to_string(resp.status) + ")");
      }
      if (!retryable_status(resp.status)) return resp;
      last_error = "HTTP " + std::to_string(resp.status) + ": " +
                   snippet(resp.body);
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw ProviderExhausted(max_attempts, last_error);
}

ProviderHandle::ProviderHandle(ProviderConfig config, HttpTransport& transport,
                               Clock& clock, RetryPolicy retry,
                               std::uint64_t seed)
    : config_(std::move(config)),
      transport_(transport),
      clock_(clock),
      retry_(retry),
      limiter_(config_.requests_per_second, clock),
      slots_(std::clamp(config_.max_concurrency, 1, 1024)),
      rng_(seed) {}

HttpResponse ProviderHandle::post_json(const Json& body, int* attempts_out) {
  std::map<std::string, std::string> headers = {
      {"Content-Type", "application/json"}};
  if (!config_.credential_env.empty()) {
    const char* token = std::getenv(config_.credential_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw AuthError("credential env var " + config_.credential_env +
                      " is not set");
    }
    headers["Authorization"] = std::string("Bearer ") + token;
  }
  const std::string payload = body.dump();

  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};

  // Each attempt draws from the shared generator under its own lock so
  // concurrent callers do not share a jitter sequence position.
  std::mt19937_64 local;
  {
    std::lock_guard lock(rng_mu_);
    local.seed(rng_());
  }
  return with_retries(
      retry_, clock_, local,
      [&] {
        limiter_.acquire();
        return transport_.post(config_.endpoint, headers, payload,
                               std::chrono::seconds(config_.timeout_s));
      },
      attempts_out);
}

ChatClient::ChatClient(ProviderConfig config, HttpTransport& transport,
                       Clock& clock, RetryPolicy retry, std::uint64_t seed)
    : handle_(std::move(config), transport, clock, retry, seed) {}

ChatResult ChatClient::complete_chat(const ChatRequest& req) {
  check_request(req);
  ChatResult result;
  HttpResponse resp = handle_.post_json(chat_request_body(req), &result.attempts);

  if (resp.status < 200 || resp.status >= 300) {
    const std::string code = error_code(resp.body);
    if (code == "content_filter" || code == "content_policy_violation") {
      throw ContentFilterBlocked("provider blocked content: " +
                                 snippet(resp.body));
    }
    throw ProviderError(resp.status, "HTTP " + std::to_string(resp.status) +
                                         " (" + code + "): " +
                                         snippet(resp.body));
  }

  result.raw_response = Json::parse(resp.body, nullptr, false);
  if (result.raw_response.is_discarded()) {
    throw ProviderError(resp.status, "response is not JSON: " +
                                         snippet(resp.body));
  }
  const Json& raw = result.raw_response;
  if (!raw.contains("choices") || !raw["choices"].is_array() ||
      raw["choices"].empty()) {
    throw ProviderError(resp.status, "response has no choices");
  }
  const Json& choice = raw["choices"][0];
  const std::string finish = choice.value("finish_reason", std::string{});
  if (finish == "content_filter") {
    throw ContentFilterBlocked("completion stopped by content filter");
  }
  result.truncated = finish == "length";
  if (choice.contains("message") && choice["message"].contains("content") &&
      choice["message"]["content"].is_string()) {
    result.text = choice["message"]["content"].get<std::string>();
  }
  if (auto it = raw.find("usage"); it != raw.end() && it->is_object()) {
    result.usage = TokenUsage{it->value("prompt_tokens", 0LL),
                              it->value("completion_tokens", 0LL)};
  }
  return result;
}

void ModelRouter::add(std::unique_ptr<ChatClient> client) {
  auto id = client->config().model_id;
  clients_[id] = std::move(client);
}

bool ModelRouter::has(std::string_view model_id) const {
  return clients_.find(model_id) != clients_.end();
}

ChatResult ModelRouter::complete_chat(const ChatRequest& req) {
  auto it = clients_.find(req.model_id);
  if (it == clients_.end()) {
    throw PreconditionError("no provider configured for model " + req.model_id);
  }
  return it->second->complete_chat(req);
}

EmbeddingVector make_embedding(std::vector<double> values,
                               std::string model_id) {
  if (values.empty()) throw DimensionMismatch("embedding has no values");
  for (double v : values) {
    if (!std::isfinite(v)) throw DimensionMismatch("embedding is not finite");
  }
  EmbeddingVector out;
  out.dim = static_cast<int>(values.size());
  out.values = std::move(values);
  out.model_id = std::move(model_id);
  return out;
}

EmbeddingClient::EmbeddingClient(ProviderConfig config,
                                 HttpTransport& transport, Clock& clock,
                                 RetryPolicy retry, std::uint64_t seed)
    : handle_(std::move(config), transport, clock, retry, seed) {}

std::size_t EmbeddingClient::batch_limit() const {
  return static_cast<std::size_t>(std::max(handle_.config().batch_limit, 1));
}

std::vector<EmbeddingVector> EmbeddingClient::embed_texts(
    const std::vector<std::string>& texts) {
  if (texts.size() > batch_limit()) {
    throw PreconditionError("batch of " + std::to_string(texts.size()) +
                            " exceeds limit " + std::to_string(batch_limit()));
  }
  for (const auto& t : texts) {
    if (t.empty()) throw PreconditionError("cannot embed an empty string");
  }
  if (texts.empty()) return {};

  std::vector<std::string> unique;
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::size_t> index_of(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto [it, inserted] = slot.try_emplace(texts[i], unique.size());
    if (inserted) unique.push_back(texts[i]);
    index_of[i] = it->second;
  }

  const auto& cfg = handle_.config();
  HttpResponse resp =
      handle_.post_json(Json{{"model", cfg.model_id}, {"input", unique}}, nullptr);
  if (resp.status < 200 || resp.status >= 300) {
    throw ProviderError(resp.status, "embedding HTTP " +
                                         std::to_string(resp.status) + ": " +
                                         snippet(resp.body));
  }
  Json raw = Json::parse(resp.body, nullptr, false);
  if (raw.is_discarded() || !raw.contains("data") || !raw["data"].is_array()) {
    throw ProviderError(resp.status, "malformed embedding response");
  }
  const Json& data = raw["data"];
  if (data.size() != unique.size()) {
    throw ProviderError(resp.status, "embedding count mismatch");
  }

  std::vector<std::optional<EmbeddingVector>> vectors(unique.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Json& item = data[k];
    std::size_t idx = item.value("index", k);
    if (idx >= unique.size() || vectors[idx]) {
      throw ProviderError(resp.status, "bad embedding index");
    }
    vectors[idx] = make_embedding(
        item.at("embedding").get<std::vector<double>>(), cfg.model_id);
  }
  const int dim = vectors.front()->dim;
  for (const auto& v : vectors) {
    if (v->dim != dim) {
      throw DimensionMismatch("inconsistent embedding dims in one batch");
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back(*vectors[index_of[i]]);
  return out;
}

std::vector<EmbeddingVector> embed_all(Embedder& embedder,
                                       const std::vector<std::string>& texts) {
  const std::size_t limit = std::max<std::size_t>(embedder.batch_limit(), 1);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += limit) {
    std::vector<std::string> chunk(
        texts.begin() + static_cast<std::ptrdiff_t>(i),
        texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), i + limit)));
    auto part = embedder.embed_texts(chunk);
    if (part.size() != chunk.size()) {
      throw DimensionMismatch("embedder returned wrong number of vectors");
    }
    for (auto& v : part) out.push_back(std::move(v));
  }
  if (!out.empty()) {
    for (const auto& v : out) {
      if (v.dim != out.front().dim) {
        throw DimensionMismatch("inconsistent embedding dims across batches");
      }
    }
  }
  return out;
}

std::string judge_message(std::string_view judge_prompt,
                          std::string_view payload) {
  std::string msg(judge_prompt);
  if (payload.empty()) return msg;
  msg += "\n\n";
  msg += payload;
  return msg;
}

JudgeClient::JudgeClient(ProviderConfig config, HttpTransport& transport,
                         Clock& clock, RetryPolicy retry, std::uint64_t seed)
    : chat_(std::move(config), transport, clock, retry, seed) {}

std::string JudgeClient::judge_call(std::string_view judge_prompt,
                                    std::string_view payload) {
  ChatRequest req;
  req.model_id = chat_.config().model_id;
  req.messages = {{"user", judge_message(judge_prompt, payload)}};
  req.temperature = 0.0;
  req.max_tokens = chat_.config().max_tokens;
  try {
    return chat_.complete_chat(req).text;
  } catch (const ProviderError& e) {
    std::string what = e.what();
    if (e.status() == 413 ||
        what.find("context_length_exceeded") != std::string::npos) {
      throw JudgePayloadTooLarge(what);
    }
    throw;
  }
}

void Archive::write_request(std::string_view stem, const Json& payload) {
  write(stem, "request", payload);
}

void Archive::write_response(std::string_view stem, const Json& payload) {
  write(stem, "response", payload);
}

void Archive::write(std::string_view stem, std::string_view kind,
                    const Json& payload) {
  std::lock_guard lock(mu_);
  write_file_atomic(dir_ / (std::string(stem) + "." + std::string(kind) + ".json"),
                    payload.dump(2));
}

}  // namespace iterlab
