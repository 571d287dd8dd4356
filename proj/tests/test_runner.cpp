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

#include <atomic>

#include "iterlab/errors.hpp"
#include "iterlab/mocks.hpp"
#include "iterlab/runner.hpp"
#include "iterlab/validate.hpp"
#include "test_support.hpp"

namespace iterlab {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

ExperimentPlan small_plan(const fs::path& out) {
  ExperimentPlan plan;
  plan.tasks = {testing::ideas_task("IDEA-1"), testing::ideas_task("IDEA-2")};
  plan.model_ids = {"mock-a"};
  plan.techniques = {"v1_improve", "s1_novel"};
  plan.output_dir = out;
  return plan;
}

std::map<std::string, std::string> run_files(const fs::path& out) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(out / "runs")) {
    if (e.is_regular_file()) files[fs::relative(e.path(), out).string()] = read_file(e.path());
  }
  return files;
}

TEST(RunConversation, MemorylessTurnsWithMock) {
  MockChatBackend backend(MockChatBackend::deterministic());
  ManualClock clock;
  const auto run = run_conversation(testing::math_task(), "mock-a", "s1_elaboration",
                                    GenParams{}, backend, {.clock = &clock});
  EXPECT_EQ(run.status, RunStatus::kComplete);
  ASSERT_EQ(run.turns.size(), 12u);
  EXPECT_TRUE(validate_run(run).empty());
  const auto reqs = backend.requests();
  ASSERT_EQ(reqs.size(), 12u);
  for (std::size_t t = 1; t < reqs.size(); ++t) {
    ASSERT_EQ(reqs[t].messages.size(), 1u);
    EXPECT_EQ(reqs[t].messages[0].role, "user");
    EXPECT_NE(reqs[t].messages[0].content.find(run.turns[t - 1].response_text),
              std::string::npos);
    EXPECT_EQ(reqs[t].temperature, 0.7);
    EXPECT_EQ(reqs[t].max_tokens, 10000);
  }
  // Turn 1 content is never re-sent later.
  EXPECT_EQ(reqs[5].messages[0].content.find("Please reason step by step"), std::string::npos);
}

TEST(RunConversation, GatewayFailureEndsRunEarly) {
  std::atomic<int> calls{0};
  MockChatBackend backend([&](const ChatRequest&) -> std::string {
    if (++calls == 4) throw ProviderExhausted(5, "HTTP 503");
    return "reply " + std::to_string(calls.load());
  });
  const auto run =
      run_conversation(testing::ideas_task(), "m", "v2_better", GenParams{}, backend);
  EXPECT_EQ(run.status, RunStatus::kPartial);
  EXPECT_EQ(run.turns.size(), 3u);
  ASSERT_TRUE(run.failure.has_value());
  EXPECT_NE(run.failure->find("turn 4"), std::string::npos);
  EXPECT_TRUE(validate_run(run).empty());

  MockChatBackend empty([](const ChatRequest&) { return std::string(); });
  const auto failed =
      run_conversation(testing::ideas_task(), "m", "v2_better", GenParams{}, empty);
  EXPECT_EQ(failed.status, RunStatus::kFailed);
  EXPECT_TRUE(failed.turns.empty());
}

TEST(RunConversation, RejectsTechniqueOutsideDomain) {
  MockChatBackend backend(MockChatBackend::deterministic());
  EXPECT_THROW(run_conversation(testing::ideas_task(), "m", "s1_perf", GenParams{}, backend),
               TechniqueDomainMismatch);
  EXPECT_EQ(backend.call_count(), 0u);
}

TEST(RunExperiment, GridArchivesAndResume) {
  TempDir dir;
  auto plan = small_plan(dir.path());
  MockChatBackend backend(MockChatBackend::deterministic());
  const auto first = run_experiment(plan, backend);
  EXPECT_EQ(first, (RunSetSummary{4, 4, 0, 0}));
  EXPECT_EQ(backend.call_count(), 48u);

  const auto runs = load_all_runs(dir.path());
  ASSERT_EQ(runs.size(), 4u);
  for (const auto& run : runs) {
    EXPECT_EQ(run.turns.size(), 12u);
    EXPECT_TRUE(validate_run(run).empty());
    EXPECT_TRUE(validate_archive(run, run_dir(dir.path(), run.run_id) / "raw").empty());
  }

  const auto second = run_experiment(plan, backend);
  EXPECT_EQ(second, (RunSetSummary{4, 0, 4, 0}));
  EXPECT_EQ(backend.call_count(), 48u);
}

TEST(RunExperiment, InvalidPlanFailsBeforeAnyCall) {
  TempDir dir;
  auto plan = small_plan(dir.path());
  plan.techniques.push_back("s1_perf");
  MockChatBackend backend(MockChatBackend::deterministic());
  EXPECT_THROW(run_experiment(plan, backend), PlanInvalid);
  EXPECT_EQ(backend.call_count(), 0u);
  plan = small_plan(dir.path());
  plan.turns = 0;
  EXPECT_THROW(run_experiment(plan, backend), PlanInvalid);
  plan = small_plan(dir.path());
  plan.tasks.push_back(plan.tasks.front());
  EXPECT_THROW(run_experiment(plan, backend), PlanInvalid);
}

TEST(RunExperiment, PartialRunsAreRedoneFromTurnOne) {
  TempDir dir;
  auto plan = small_plan(dir.path());
  plan.tasks.resize(1);
  plan.techniques = {"v1_improve"};
  std::atomic<int> calls{0};
  MockChatBackend flaky([&](const ChatRequest& r) -> std::string {
    if (++calls == 6) throw ProviderExhausted(5, "HTTP 500");
    return MockChatBackend::deterministic()(r);
  });
  EXPECT_EQ(run_experiment(plan, flaky), (RunSetSummary{1, 0, 0, 1}));
  EXPECT_EQ(load_all_runs(dir.path()).front().status, RunStatus::kPartial);

  MockChatBackend good(MockChatBackend::deterministic());
  EXPECT_EQ(run_experiment(plan, good), (RunSetSummary{1, 1, 0, 0}));
  EXPECT_EQ(good.call_count(), 12u);
  EXPECT_EQ(load_all_runs(dir.path()).front().status, RunStatus::kComplete);
}

TEST(RunExperiment, BookkeepingIsDeterministic) {
  TempDir a, b;
  ManualClock clock_a, clock_b;
  MockChatBackend backend_a(MockChatBackend::deterministic());
  MockChatBackend backend_b(MockChatBackend::deterministic());
  run_experiment(small_plan(a.path()), backend_a, {.workers = 4, .clock = &clock_a, .on_run = {}});
  run_experiment(small_plan(b.path()), backend_b, {.workers = 1, .clock = &clock_b, .on_run = {}});
  EXPECT_EQ(run_files(a.path()), run_files(b.path()));
}

TEST(RunExperiment, CrashMidGridThenRerunMatchesUninterrupted) {
  TempDir crashed, clean;
  ManualClock c1, c2, c3;
  std::atomic<int> calls{0};
  MockChatBackend dying([&](const ChatRequest& r) -> std::string {
    if (++calls == 20) throw std::runtime_error("process killed");
    return MockChatBackend::deterministic()(r);
  });
  EXPECT_THROW(run_experiment(small_plan(crashed.path()), dying, {.workers = 1, .clock = &c1, .on_run = {}}),
               std::runtime_error);
  EXPECT_LT(load_all_runs(crashed.path()).size(), 4u);

  MockChatBackend good(MockChatBackend::deterministic());
  run_experiment(small_plan(crashed.path()), good, {.workers = 2, .clock = &c2, .on_run = {}});
  MockChatBackend reference(MockChatBackend::deterministic());
  run_experiment(small_plan(clean.path()), reference, {.workers = 2, .clock = &c3, .on_run = {}});
  EXPECT_EQ(run_files(crashed.path()), run_files(clean.path()));
}

TEST(RunExperiment, RepeatsGetDistinctRunIds) {
  TempDir dir;
  auto plan = small_plan(dir.path());
  plan.tasks.resize(1);
  plan.techniques = {"v1_improve"};
  plan.repeats = 3;
  MockChatBackend backend(MockChatBackend::deterministic());
  EXPECT_EQ(run_experiment(plan, backend).completed, 3);
  EXPECT_EQ(load_all_runs(dir.path()).size(), 3u);
}

TEST(LoadPlan, TasksFileRelativeToPlan) {
  TempDir dir;
  write_file_atomic(dir.path() / "tasks.jsonl", Json(testing::math_task()).dump() + "\n");
  write_file_atomic(dir.path() / "plan.json",
                    Json{{"tasks_file", "tasks.jsonl"},
                         {"model_ids", {"m"}},
                         {"techniques", {"s2_exploration"}},
                         {"gen_params", {{"temperature", 0.7}, {"max_tokens", 10000}}},
                         {"template_set", "short"},
                         {"turns", 5}}
                        .dump());
  const auto plan = load_plan(dir.path() / "plan.json");
  ASSERT_EQ(plan.tasks.size(), 1u);
  EXPECT_EQ(plan.tasks[0], testing::math_task());
  EXPECT_EQ(plan.turns, 5);
  EXPECT_EQ(plan.template_set, TemplateSet::kShort);
  EXPECT_NO_THROW(validate_plan(plan));
}

}  // namespace
}  // namespace iterlab
