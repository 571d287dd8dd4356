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

// Per-turn outcome evaluation. Code runs in an external sandbox process; math
// grading and quality scorecards go through a judge model.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "iterlab/gateway.hpp"
#include "iterlab/types.hpp"

namespace iterlab {

/// Contents of the last ``` fenced block, if any. An unterminated final
/// fence runs to the end of the text.
std::optional<std::string> last_fenced_block(std::string_view text);

/// Last fenced block; otherwise the whole response when it looks like code
/// (some line ends in ':' or contains '=', and no sentence runs past 200
/// characters); otherwise nothing.
std::optional<std::string> extract_code(std::string_view response_text);

enum class ErrorType { kAssertion, kException, kCompile, kTimeout, kNoCode, kInfra };

std::string_view to_string(ErrorType e);
std::optional<ErrorType> parse_error_type(std::string_view s);

struct SandboxLimits {
  int timeout_s = 30;
  int mem_limit_mb = 1024;
};

struct SandboxJob {
  std::string code;
  std::string code_context;  // holds exactly one `[insert]` marker
  int timeout_s = 30;
  int mem_limit_mb = 1024;
};

Json to_json_value(const SandboxJob& job);

struct SandboxVerdict {
  int passed = 0;
  std::optional<ErrorType> error_type;
  std::string stderr_tail;
  long long duration_ms = 0;
};

/// Parses a verdict object; malformed verdicts throw PreconditionError.
SandboxVerdict parse_verdict(const Json& j);

class SandboxExecutor {
 public:
  virtual ~SandboxExecutor() = default;
  /// Subject-code failures come back as verdicts; shim failures as
  /// error_type == kInfra.
  virtual SandboxVerdict execute(const SandboxJob& job) = 0;
};

/// Runs one shim process per job: job JSON on stdin, verdict JSON on stdout,
/// exit 0 with a verdict or exit 1 for infra failure. The child is killed if
/// it outlives timeout_s plus `grace`.
class SubprocessSandbox final : public SandboxExecutor {
 public:
  explicit SubprocessSandbox(std::vector<std::string> argv,
                             std::chrono::seconds grace = std::chrono::seconds(5));
  SandboxVerdict execute(const SandboxJob& job) override;

 private:
  std::vector<std::string> argv_;
  std::chrono::seconds grace_;
};

struct CorrectnessResult {
  int turn_index = 0;
  int passed = 0;
  std::optional<ErrorType> error_type;
  std::optional<std::string> stderr_tail;
  long long duration_ms = 0;

  bool operator==(const CorrectnessResult&) const = default;
};

void to_json(Json& j, const CorrectnessResult& v);
void from_json(const Json& j, CorrectnessResult& v);

/// Verdicts keyed by (run_id, turn, sha256 of code), one JSON file each.
class CorrectnessCache {
 public:
  explicit CorrectnessCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::optional<CorrectnessResult> get(std::string_view run_id, int turn,
                                       std::string_view code_hash) const;
  void put(std::string_view run_id, int turn, std::string_view code_hash,
           const CorrectnessResult& result);

 private:
  std::filesystem::path path_for(std::string_view run_id, int turn,
                                 std::string_view code_hash) const;
  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

/// One result per turn present. Infra failures are recorded per turn and
/// never abort the series; infra verdicts are not cached.
std::vector<CorrectnessResult> eval_code_run(const ConversationRun& run,
                                             const TaskSpec& task,
                                             SandboxExecutor& sandbox,
                                             CorrectnessCache* cache = nullptr,
                                             SandboxLimits limits = {},
                                             int workers = 4);

struct JudgeEvaluation {
  int turn = 0;
  std::map<std::string, double> scores;

  bool operator==(const JudgeEvaluation&) const = default;
};

/// Strips a markdown fence when the raw text is not bare JSON, then checks
/// the {"evaluations": [...]} shape: exactly `expected_turns` objects, each
/// carrying exactly `expected_keys` (an extra "turn" key is tolerated and, if
/// present, must enumerate 1..expected_turns once each). Ranges:
/// answer_correctness in {0,1}; reasoning_soundness integer 1-10; buzzwords
/// integer >= 0; every other score in [1,10]. Throws MalformedJudgeOutput.
std::vector<JudgeEvaluation> parse_judge_payload(
    std::string_view raw, int expected_turns,
    const std::set<std::string>& expected_keys);

/// Compact {"turns": [{"turn": t, "response": ...}]} payload.
std::string turns_payload(const ConversationRun& run);

/// Auto-grader prompt with turns JSON and ground truth filled in.
std::string assemble_grader_prompt(const ConversationRun& run,
                                   const TaskSpec& task);

/// Throws JudgeUnavailable, JudgePayloadTooLarge, MalformedJudgeOutput (after
/// one retry), MissingField.
std::vector<JudgeEvaluation> grade_math_run(const ConversationRun& run,
                                            const TaskSpec& task, Judge& judge,
                                            Archive* archive = nullptr);

/// Scorecard per existing turn with the domain key set enforced.
std::vector<JudgeEvaluation> judge_quality_run(const ConversationRun& run,
                                               Domain domain, Judge& judge,
                                               Archive* archive = nullptr);

struct EvaluatorDeps {
  Judge* judge = nullptr;
  SandboxExecutor* sandbox = nullptr;
  CorrectnessCache* cache = nullptr;
  Archive* archive = nullptr;
  SandboxLimits limits;
  int sandbox_workers = 4;
};

/// Every evaluation that applies to the run's domain, merged per turn.
/// Failures become per-turn eval_error entries rather than exceptions.
EvalSeries evaluate_run(const ConversationRun& run, const TaskSpec& task,
                        const EvaluatorDeps& deps);

}  // namespace iterlab
