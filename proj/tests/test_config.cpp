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

#include <gtest/gtest.h>

#include "iterlab/config.hpp"
#include "iterlab/errors.hpp"
#include "test_support.hpp"

namespace iterlab {
namespace {

TEST(Config, DefaultsWithoutFile) {
  const auto c = load_config(std::nullopt);
  EXPECT_EQ(c.workers, 4);
  EXPECT_TRUE(c.providers.empty());
  EXPECT_EQ(c.sandbox.limits.timeout_s, 30);
  EXPECT_EQ(c.sandbox.limits.mem_limit_mb, 1024);
  EXPECT_EQ(c.retry.max_attempts, 5);
}

TEST(Config, LoadsProvidersAndSandbox) {
  testing::TempDir dir;
  const auto path = dir.path() / "c.json";
  write_file_atomic(path, R"({
    "providers": [{"name": "p", "endpoint": "https://x/v1/chat/completions",
                   "model_id": "gpt-x", "credential_env": "X_KEY",
                   "requests_per_second": 1.5}],
    "judge": {"endpoint": "https://j", "model_id": "judge-1"},
    "embedding": null,
    "workers": 2,
    "sandbox": {"command": "python3 shim.py", "timeout_s": 10},
    "retry": {"max_attempts": 3, "base_ms": 10}
  })");
  const auto c = load_config(path);
  ASSERT_EQ(c.providers.size(), 1u);
  EXPECT_EQ(c.providers[0].requests_per_second, 1.5);
  EXPECT_EQ(c.providers[0].max_concurrency, 4);
  ASSERT_TRUE(c.judge.has_value());
  EXPECT_EQ(c.judge->model_id, "judge-1");
  EXPECT_FALSE(c.embedding.has_value());
  EXPECT_EQ(c.sandbox.command, (std::vector<std::string>{"/bin/sh", "-c", "python3 shim.py"}));
  EXPECT_EQ(c.sandbox.limits.timeout_s, 10);
  EXPECT_EQ(c.retry.max_attempts, 3);
  EXPECT_EQ(c.retry.base.count(), 10);

  const Json round = c;
  EXPECT_EQ(round.get<HarnessConfig>().providers[0].model_id, "gpt-x");
}

TEST(Config, RejectsBadValues) {
  testing::TempDir dir;
  const auto path = dir.path() / "c.json";
  write_file_atomic(path, R"({"workers": 0})");
  EXPECT_THROW(load_config(path), PreconditionError);
  write_file_atomic(path, R"({"providers": [{"endpoint": "x"}]})");
  EXPECT_THROW(load_config(path), PreconditionError);
  write_file_atomic(path, "{");
  EXPECT_THROW(load_config(path), PreconditionError);
}

TEST(Config, ExampleConfigParses) {
  const auto example = std::filesystem::path(ITERLAB_GOLDEN_DIR) / ".." / ".." / "configs" / "example.json";
  const auto c = load_config(example);
  EXPECT_EQ(c.providers.size(), 4u);
  ASSERT_TRUE(c.judge.has_value());
  ASSERT_TRUE(c.embedding.has_value());
  EXPECT_EQ(c.embedding->model_id, "Qwen/Qwen3-Embedding-0.6B");
}

}  // namespace
}  // namespace iterlab
