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

#include <random>

#include "iterlab/validate.hpp"
#include "test_support.hpp"

namespace iterlab {
namespace {

using testing::chained_run;
using testing::ideas_task;

std::vector<std::string> rules(const ValidationReport& r) {
  std::vector<std::string> out;
  for (const auto& v : r) out.push_back(v.rule);
  return out;
}

TEST(ValidateRun, WellFormedRunHasNoViolations) {
  EXPECT_TRUE(validate_run(chained_run(ideas_task(), 12)).empty());
}

TEST(ValidateRun, DetectsEachRule) {
  auto run = chained_run(ideas_task(), 12);
  run.run_id = "forged";
  EXPECT_EQ(rules(validate_run(run)), std::vector<std::string>{"run-id"});

  run = chained_run(ideas_task(), 12);
  run.turns.pop_back();
  EXPECT_EQ(rules(validate_run(run)), std::vector<std::string>{"turn-count"});
  run.status = RunStatus::kPartial;
  EXPECT_TRUE(validate_run(run).empty());

  run = chained_run(ideas_task(), 12);
  run.turns[4].turn_index = 7;
  auto report = validate_run(run);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].rule, "turn-index");
  EXPECT_EQ(report[0].turn, 5);

  run = chained_run(ideas_task(), 12);
  run.turns[3].response_text = "something never shown to turn 5";
  report = validate_run(run);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].rule, "memoryless-chain");
  EXPECT_EQ(report[0].turn, 5);
}

// Soundness: random well-formed runs never raise violations, and a random
// single corruption of the chain is always caught at the right turn.
TEST(ValidateRunProperty, SoundAndCompleteForChainCorruption) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int turns = 2 + static_cast<int>(rng() % 11);
    std::vector<std::string> responses;
    for (int t = 0; t < turns; ++t) {
      responses.push_back("answer " + std::to_string(rng()) + " v" + std::to_string(t));
    }
    auto run = chained_run(ideas_task(), turns, responses);
    run.planned_turns = turns;
    ASSERT_TRUE(validate_run(run).empty()) << trial;

    const auto k = 1 + rng() % static_cast<std::uint64_t>(turns - 1);  // 1..T-1
    run.turns[k].prompt_text = "The following is a previous response:\n---\nnope\n---";
    const auto report = validate_run(run);
    ASSERT_EQ(report.size(), 1u) << trial;
    EXPECT_EQ(report[0].rule, "memoryless-chain");
    EXPECT_EQ(report[0].turn, static_cast<int>(k) + 1);
  }
}

TEST(ValidateArchive, MissingAndNonMemorylessRequests) {
  testing::TempDir dir;
  const auto run = chained_run(ideas_task(), 3);
  auto write = [&](int turn, const Json& messages) {
    write_file_atomic(dir.path() / (std::to_string(turn) + ".request.json"),
                      Json{{"messages", messages}}.dump());
  };
  write(1, Json::array({{{"role", "user"}, {"content", run.turns[0].prompt_text}}}));
  write(2, Json::array({{{"role", "user"}, {"content", run.turns[1].prompt_text}}}));
  auto report = validate_archive(run, dir.path());
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].rule, "archive-missing");
  EXPECT_EQ(report[0].turn, 3);

  // Turn 3 carrying the earlier conversation breaks memorylessness.
  write(3, Json::array({{{"role", "user"}, {"content", run.turns[0].prompt_text}},
                        {{"role", "assistant"}, {"content", run.turns[0].response_text}},
                        {{"role", "user"}, {"content", run.turns[2].prompt_text}}}));
  report = validate_archive(run, dir.path());
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].rule, "archive-memoryless");
}

TEST(ValidateRun, DescribeMentionsRuleAndTurn) {
  EXPECT_EQ(describe({"prompt_text", 4, "memoryless-chain"}),
            "memoryless-chain (prompt_text, turn 4)");
}

}  // namespace
}  // namespace iterlab
