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

// Offline stand-ins for the network services, used by `--mock` CLI runs and
// by tests. All of them are deterministic functions of their inputs.

#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "iterlab/gateway.hpp"

namespace iterlab {

/// Chat backend driven by a responder function. Records every request.
class MockChatBackend final : public ChatBackend {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;

  explicit MockChatBackend(Responder responder);

  /// A responder that only looks at the prompt: turn 1 yields a short draft,
  /// later turns echo the embedded previous response plus one new sentence.
  static Responder deterministic();

  ChatResult complete_chat(const ChatRequest& req) override;

  std::vector<ChatRequest> requests() const;
  std::size_t call_count() const;

 private:
  Responder responder_;
  mutable std::mutex mu_;
  std::vector<ChatRequest> requests_;
};

/// Feature-hashing bag-of-words embedder; no model required.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(int dim = 64) : dim_(dim) {}
  std::vector<EmbeddingVector> embed_texts(
      const std::vector<std::string>& texts) override;

 private:
  int dim_;
};

/// Produces schema-valid judge output with scores derived from a hash of the
/// judged payload.
class MockJudge final : public Judge {
 public:
  std::string judge_call(std::string_view judge_prompt,
                         std::string_view payload) override;
  std::size_t call_count() const { return calls_; }

 private:
  std::size_t calls_ = 0;
};

}  // namespace iterlab
