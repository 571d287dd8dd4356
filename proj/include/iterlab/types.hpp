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

// Shared data model and its canonical JSON encodings.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace iterlab {

using Json = nlohmann::json;

/// Fixed horizon of one refinement conversation.
inline constexpr int kDefaultTurns = 12;

enum class Domain { kIdeas, kMath, kCoding };

std::string_view to_string(Domain d);
Domain parse_domain(std::string_view s);

/// Which tasks a technique may be applied to.
enum class DomainScope { kAllVague, kIdeas, kCoding, kMath };

std::string_view to_string(DomainScope s);
DomainScope parse_domain_scope(std::string_view s);
bool scope_allows(DomainScope scope, Domain domain);

struct TaskSpec {
  std::string task_id;
  Domain domain = Domain::kIdeas;
  std::optional<std::string> keywords;               // IDEAS
  std::optional<std::string> problem;                // MATH
  std::optional<std::string> ground_truth_solution;  // MATH
  std::optional<std::string> ground_truth_answer;    // MATH
  std::optional<std::string> library;                // CODING
  std::optional<std::string> code_context;           // CODING
  std::optional<std::string> prompt;                 // CODING
  std::optional<double> difficulty;                  // MATH, 0..10

  bool operator==(const TaskSpec&) const = default;
};

/// Names of required fields that are absent for the task's domain.
std::vector<std::string> missing_required_fields(const TaskSpec& task);

struct TechniqueSpec {
  std::string technique_id;
  DomainScope domain_scope = DomainScope::kAllVague;
  std::string template_text;

  bool operator==(const TechniqueSpec&) const = default;
};

struct TokenUsage {
  long long prompt_tokens = 0;
  long long completion_tokens = 0;

  bool operator==(const TokenUsage&) const = default;
};

struct TurnRecord {
  int turn_index = 0;
  std::string prompt_text;
  std::string response_text;
  std::string created_at;
  std::optional<TokenUsage> token_usage;
  std::optional<Json> provider_meta;

  bool operator==(const TurnRecord&) const = default;
};

struct GenParams {
  double temperature = 0.7;
  int max_tokens = 10000;

  bool operator==(const GenParams&) const = default;
};

enum class RunStatus { kComplete, kPartial, kFailed };

std::string_view to_string(RunStatus s);
RunStatus parse_run_status(std::string_view s);

struct ConversationRun {
  std::string run_id;
  std::string task_id;
  std::string model_id;
  std::string technique_id;
  GenParams gen_params;
  std::vector<TurnRecord> turns;
  RunStatus status = RunStatus::kFailed;
  // Bookkeeping beyond the core fields.
  std::optional<Domain> domain;
  int planned_turns = kDefaultTurns;
  int repeat = 0;
  std::optional<std::string> failure;

  bool operator==(const ConversationRun&) const = default;
};

/// Deterministic id over (task, model, technique, generation params). The
/// repeat index only contributes when non-zero so single-repeat ids stay
/// stable.
std::string compute_run_id(std::string_view task_id, std::string_view model_id,
                           std::string_view technique_id,
                           const GenParams& params, int repeat = 0);

struct MetricSeries {
  std::string run_id;
  std::vector<double> drift;       // turns 1..T, drift[0] == 0
  std::vector<double> volatility;  // turns 2..T
  std::vector<double> lexical_novelty;                // turns 1..T
  std::vector<double> growth_score;                   // turns 1..T
  std::vector<std::optional<double>> growth_factor;   // turns 1..T
  bool growth_degenerate = false;  // G(1) == 0, factors are null

  bool operator==(const MetricSeries&) const = default;
};

struct TurnEval {
  std::optional<int> correctness;
  std::optional<int> reasoning_soundness;
  std::optional<std::map<std::string, double>> scorecard;
  std::optional<std::string> eval_error;

  bool operator==(const TurnEval&) const = default;
};

struct EvalSeries {
  std::string run_id;
  std::vector<TurnEval> per_turn;

  bool operator==(const EvalSeries&) const = default;
};

/// Scorecard keys the quality judge must return for `domain`.
const std::vector<std::string>& scorecard_keys(Domain domain);

void to_json(Json& j, const TaskSpec& v);
void from_json(const Json& j, TaskSpec& v);
void to_json(Json& j, const TechniqueSpec& v);
void from_json(const Json& j, TechniqueSpec& v);
void to_json(Json& j, const TokenUsage& v);
void from_json(const Json& j, TokenUsage& v);
void to_json(Json& j, const TurnRecord& v);
void from_json(const Json& j, TurnRecord& v);
void to_json(Json& j, const GenParams& v);
void from_json(const Json& j, GenParams& v);
void to_json(Json& j, const ConversationRun& v);
void from_json(const Json& j, ConversationRun& v);
void to_json(Json& j, const MetricSeries& v);
void from_json(const Json& j, MetricSeries& v);
void to_json(Json& j, const TurnEval& v);
void from_json(const Json& j, TurnEval& v);
void to_json(Json& j, const EvalSeries& v);
void from_json(const Json& j, EvalSeries& v);

}  // namespace iterlab
