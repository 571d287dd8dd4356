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

#include "iterlab/mocks.hpp"

#include <cctype>
#include <cstdint>

#include "iterlab/errors.hpp"
#include "iterlab/util.hpp"

namespace iterlab {

namespace {

constexpr std::string_view kIterHeader = "The following is a previous response:\n---\n";
constexpr std::string_view kIterFooter = "\n---\n\n";

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string deterministic_reply(const ChatRequest& req) {
  const std::string& prompt = req.messages.back().content;
  const std::string tag = sha256_hex(req.model_id + "\n" + prompt).substr(0, 8);
  if (prompt.starts_with(kIterHeader)) {
    auto end = prompt.rfind(kIterFooter);
    std::string previous =
        prompt.substr(kIterHeader.size(), end - kIterHeader.size());
    return previous + "\nRevision " + tag + " adds one more consideration.";
  }
  if (prompt.ends_with("Please provide a complete solution.")) {
    return "Here is a solution (" + tag + ").\n```python\nresult = 42\n```";
  }
  return "Initial answer " + tag + " outlines the main approach.";
}

}  // namespace

MockChatBackend::MockChatBackend(Responder responder)
    : responder_(std::move(responder)) {}

MockChatBackend::Responder MockChatBackend::deterministic() {
  return deterministic_reply;
}

ChatResult MockChatBackend::complete_chat(const ChatRequest& req) {
  check_request(req);
  {
    std::lock_guard lock(mu_);
    requests_.push_back(req);
  }
  ChatResult result;
  result.text = responder_(req);
  result.raw_response = Json{
      {"mock", true},
      {"choices",
       Json::array({Json{{"message", {{"role", "assistant"}, {"content", result.text}}},
                         {"finish_reason", "stop"}}})}};
  return result;
}

std::vector<ChatRequest> MockChatBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::size_t MockChatBackend::call_count() const {
  std::lock_guard lock(mu_);
  return requests_.size();
}

std::vector<EmbeddingVector> HashingEmbedder::embed_texts(
    const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  for (const auto& text : texts) {
    if (text.empty()) throw PreconditionError("cannot embed an empty string");
    std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
    std::string token;
    auto flush = [&] {
      if (token.empty()) return;
      std::uint64_t h = fnv1a(token);
      v[h % v.size()] += (h >> 63) ? 1.0 : -1.0;
      token.clear();
    };
    for (unsigned char c : text) {
      if (std::isalnum(c)) {
        token.push_back(static_cast<char>(std::tolower(c)));
      } else {
        flush();
      }
    }
    flush();
    bool zero = true;
    for (double x : v) zero = zero && x == 0.0;
    if (zero) v[0] = 1.0;
    out.push_back(make_embedding(std::move(v), "hashing-bow"));
  }
  return out;
}

std::string MockJudge::judge_call(std::string_view judge_prompt,
                                  std::string_view payload) {
  ++calls_;
  // The judged turns travel as one compact {"turns": [...]} line, either in
  // the payload or inside the assembled grader prompt.
  const std::string message = judge_message(judge_prompt, payload);
  std::size_t n = 0;
  if (auto pos = message.find("{\"turns\":"); pos != std::string::npos) {
    auto end = message.find('\n', pos);
    auto turns = Json::parse(message.substr(pos, end == std::string::npos
                                                      ? std::string::npos
                                                      : end - pos),
                             nullptr, false);
    if (!turns.is_discarded()) n = turns["turns"].size();
  }

  const std::uint64_t seed = fnv1a(message);
  auto score = [&](std::size_t turn, int salt) {
    return static_cast<int>((seed >> ((turn * 7 + salt) % 50)) % 10) + 1;
  };
  Json evals = Json::array();
  for (std::size_t t = 1; t <= n; ++t) {
    Json e;
    if (judge_prompt.find("answer_correctness") != std::string_view::npos) {
      e = {{"turn", t},
           {"answer_correctness", score(t, 1) > 5 ? 1 : 0},
           {"reasoning_soundness", score(t, 2)}};
    } else if (judge_prompt.find("originality") != std::string_view::npos) {
      e = {{"turn", t},
           {"originality", score(t, 1)},
           {"feasibility", score(t, 2)},
           {"clarity", score(t, 3)},
           {"buzzwords", score(t, 4) - 1}};
    } else if (judge_prompt.find("pragmatism") != std::string_view::npos) {
      e = {{"turn", t}, {"pragmatism", score(t, 1)}, {"readability", score(t, 2)}};
    } else {
      e = {{"turn", t},
           {"logical_soundness", score(t, 1)},
           {"clarity_of_explanation", score(t, 2)}};
    }
    evals.push_back(std::move(e));
  }
  return Json{{"evaluations", evals}}.dump();
}

}  // namespace iterlab
