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

#include "iterlab/types.hpp"

#include <cmath>

#include "iterlab/errors.hpp"
#include "iterlab/util.hpp"

namespace iterlab {

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::kIdeas: return "IDEAS";
    case Domain::kMath: return "MATH";
    case Domain::kCoding: return "CODING";
  }
  return "?";
}

Domain parse_domain(std::string_view s) {
  if (s == "IDEAS") return Domain::kIdeas;
  if (s == "MATH") return Domain::kMath;
  if (s == "CODING") return Domain::kCoding;
  throw PreconditionError("unknown domain: " + std::string(s));
}

std::string_view to_string(DomainScope s) {
  switch (s) {
    case DomainScope::kAllVague: return "ALL_VAGUE";
    case DomainScope::kIdeas: return "IDEAS";
    case DomainScope::kCoding: return "CODING";
    case DomainScope::kMath: return "MATH";
  }
  return "?";
}

DomainScope parse_domain_scope(std::string_view s) {
  if (s == "ALL_VAGUE") return DomainScope::kAllVague;
  if (s == "IDEAS") return DomainScope::kIdeas;
  if (s == "CODING") return DomainScope::kCoding;
  if (s == "MATH") return DomainScope::kMath;
  throw PreconditionError("unknown domain scope: " + std::string(s));
}

bool scope_allows(DomainScope scope, Domain domain) {
  switch (scope) {
    case DomainScope::kAllVague: return true;
    case DomainScope::kIdeas: return domain == Domain::kIdeas;
    case DomainScope::kCoding: return domain == Domain::kCoding;
    case DomainScope::kMath: return domain == Domain::kMath;
  }
  return false;
}

std::vector<std::string> missing_required_fields(const TaskSpec& task) {
  std::vector<std::string> missing;
  if (task.task_id.empty()) missing.emplace_back("task_id");
  auto need = [&](const std::optional<std::string>& f, const char* name) {
    if (!f || f->empty()) missing.emplace_back(name);
  };
  switch (task.domain) {
    case Domain::kIdeas:
      need(task.keywords, "keywords");
      break;
    case Domain::kMath:
      need(task.problem, "problem");
      need(task.ground_truth_answer, "ground_truth_answer");
      break;
    case Domain::kCoding:
      need(task.prompt, "prompt");
      need(task.code_context, "code_context");
      break;
  }
  return missing;
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kComplete: return "complete";
    case RunStatus::kPartial: return "partial";
    case RunStatus::kFailed: return "failed";
  }
  return "?";
}

RunStatus parse_run_status(std::string_view s) {
  if (s == "complete") return RunStatus::kComplete;
  if (s == "partial") return RunStatus::kPartial;
  if (s == "failed") return RunStatus::kFailed;
  throw PreconditionError("unknown run status: " + std::string(s));
}

std::string compute_run_id(std::string_view task_id, std::string_view model_id,
                           std::string_view technique_id,
                           const GenParams& params, int repeat) {
  // Length-prefixed fields so no two tuples serialize alike.
  std::string key;
  auto add = [&key](std::string_view field) {
    key += std::to_string(field.size());
    key += ':';
    key += field;
    key += ';';
  };
  add(task_id);
  add(model_id);
  add(technique_id);
  add(format_double(params.temperature));
  add(std::to_string(params.max_tokens));
  if (repeat != 0) add("repeat=" + std::to_string(repeat));
  return sha256_hex(key).substr(0, 24);
}

const std::vector<std::string>& scorecard_keys(Domain domain) {
  static const std::vector<std::string> kIdeasKeys = {
      "originality", "feasibility", "clarity", "buzzwords"};
  static const std::vector<std::string> kCodingKeys = {"pragmatism",
                                                       "readability"};
  static const std::vector<std::string> kMathKeys = {"logical_soundness",
                                                     "clarity_of_explanation"};
  switch (domain) {
    case Domain::kIdeas: return kIdeasKeys;
    case Domain::kCoding: return kCodingKeys;
    case Domain::kMath: return kMathKeys;
  }
  return kIdeasKeys;
}

namespace {

template <typename T>
void put_opt(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
void get_opt(const Json& j, const char* key, std::optional<T>& v) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    v.reset();
  } else {
    v = it->template get<T>();
  }
}

Json optional_doubles(const std::vector<std::optional<double>>& values) {
  Json arr = Json::array();
  for (const auto& v : values) arr.push_back(v ? Json(*v) : Json(nullptr));
  return arr;
}

}  // namespace

void to_json(Json& j, const TaskSpec& v) {
  j = Json::object();
  j["task_id"] = v.task_id;
  j["domain"] = to_string(v.domain);
  put_opt(j, "keywords", v.keywords);
  put_opt(j, "problem", v.problem);
  put_opt(j, "ground_truth_solution", v.ground_truth_solution);
  put_opt(j, "ground_truth_answer", v.ground_truth_answer);
  put_opt(j, "library", v.library);
  put_opt(j, "code_context", v.code_context);
  put_opt(j, "prompt", v.prompt);
  put_opt(j, "difficulty", v.difficulty);
}

void from_json(const Json& j, TaskSpec& v) {
  v.task_id = j.at("task_id").get<std::string>();
  v.domain = parse_domain(j.at("domain").get<std::string>());
  get_opt(j, "keywords", v.keywords);
  get_opt(j, "problem", v.problem);
  get_opt(j, "ground_truth_solution", v.ground_truth_solution);
  get_opt(j, "ground_truth_answer", v.ground_truth_answer);
  get_opt(j, "library", v.library);
  get_opt(j, "code_context", v.code_context);
  get_opt(j, "prompt", v.prompt);
  get_opt(j, "difficulty", v.difficulty);
}

void to_json(Json& j, const TechniqueSpec& v) {
  j = Json{{"technique_id", v.technique_id},
           {"domain_scope", to_string(v.domain_scope)},
           {"template", v.template_text}};
}

void from_json(const Json& j, TechniqueSpec& v) {
  v.technique_id = j.at("technique_id").get<std::string>();
  v.domain_scope = parse_domain_scope(j.at("domain_scope").get<std::string>());
  v.template_text = j.at("template").get<std::string>();
}

void to_json(Json& j, const TokenUsage& v) {
  j = Json{{"prompt_tokens", v.prompt_tokens},
           {"completion_tokens", v.completion_tokens}};
}

void from_json(const Json& j, TokenUsage& v) {
  v.prompt_tokens = j.value("prompt_tokens", 0LL);
  v.completion_tokens = j.value("completion_tokens", 0LL);
}

void to_json(Json& j, const TurnRecord& v) {
  j = Json::object();
  j["turn_index"] = v.turn_index;
  j["prompt_text"] = v.prompt_text;
  j["response_text"] = v.response_text;
  j["created_at"] = v.created_at;
  put_opt(j, "token_usage", v.token_usage);
  put_opt(j, "provider_meta", v.provider_meta);
}

void from_json(const Json& j, TurnRecord& v) {
  v.turn_index = j.at("turn_index").get<int>();
  v.prompt_text = j.at("prompt_text").get<std::string>();
  v.response_text = j.at("response_text").get<std::string>();
  v.created_at = j.value("created_at", std::string{});
  get_opt(j, "token_usage", v.token_usage);
  get_opt(j, "provider_meta", v.provider_meta);
}

void to_json(Json& j, const GenParams& v) {
  j = Json{{"temperature", v.temperature}, {"max_tokens", v.max_tokens}};
}

void from_json(const Json& j, GenParams& v) {
  GenParams defaults;
  v.temperature = j.value("temperature", defaults.temperature);
  v.max_tokens = j.value("max_tokens", defaults.max_tokens);
}

void to_json(Json& j, const ConversationRun& v) {
  j = Json::object();
  j["run_id"] = v.run_id;
  j["task_id"] = v.task_id;
  j["model_id"] = v.model_id;
  j["technique_id"] = v.technique_id;
  j["gen_params"] = v.gen_params;
  j["turns"] = v.turns;
  j["status"] = to_string(v.status);
  if (v.domain) j["domain"] = to_string(*v.domain);
  j["planned_turns"] = v.planned_turns;
  j["repeat"] = v.repeat;
  put_opt(j, "failure", v.failure);
}

void from_json(const Json& j, ConversationRun& v) {
  v.run_id = j.at("run_id").get<std::string>();
  v.task_id = j.at("task_id").get<std::string>();
  v.model_id = j.at("model_id").get<std::string>();
  v.technique_id = j.at("technique_id").get<std::string>();
  v.gen_params = j.value("gen_params", GenParams{});
  v.turns = j.at("turns").get<std::vector<TurnRecord>>();
  v.status = parse_run_status(j.at("status").get<std::string>());
  if (auto it = j.find("domain"); it != j.end() && !it->is_null()) {
    v.domain = parse_domain(it->get<std::string>());
  } else {
    v.domain.reset();
  }
  v.planned_turns = j.value("planned_turns", kDefaultTurns);
  v.repeat = j.value("repeat", 0);
  get_opt(j, "failure", v.failure);
}

void to_json(Json& j, const MetricSeries& v) {
  j = Json::object();
  j["run_id"] = v.run_id;
  j["drift"] = v.drift;
  j["volatility"] = v.volatility;
  j["lexical_novelty"] = v.lexical_novelty;
  j["growth_score"] = v.growth_score;
  j["growth_factor"] = optional_doubles(v.growth_factor);
  j["growth_degenerate"] = v.growth_degenerate;
}

void from_json(const Json& j, MetricSeries& v) {
  v.run_id = j.at("run_id").get<std::string>();
  v.drift = j.at("drift").get<std::vector<double>>();
  v.volatility = j.at("volatility").get<std::vector<double>>();
  v.lexical_novelty = j.at("lexical_novelty").get<std::vector<double>>();
  v.growth_score = j.at("growth_score").get<std::vector<double>>();
  v.growth_factor.clear();
  for (const auto& x : j.at("growth_factor")) {
    v.growth_factor.push_back(x.is_null() ? std::nullopt
                                          : std::optional(x.get<double>()));
  }
  v.growth_degenerate = j.value("growth_degenerate", false);
}

void to_json(Json& j, const TurnEval& v) {
  j = Json::object();
  j["correctness"] = v.correctness ? Json(*v.correctness) : Json(nullptr);
  j["reasoning_soundness"] =
      v.reasoning_soundness ? Json(*v.reasoning_soundness) : Json(nullptr);
  j["scorecard"] = v.scorecard ? Json(*v.scorecard) : Json(nullptr);
  j["eval_error"] = v.eval_error ? Json(*v.eval_error) : Json(nullptr);
}

void from_json(const Json& j, TurnEval& v) {
  get_opt(j, "correctness", v.correctness);
  get_opt(j, "reasoning_soundness", v.reasoning_soundness);
  get_opt(j, "scorecard", v.scorecard);
  get_opt(j, "eval_error", v.eval_error);
}

void to_json(Json& j, const EvalSeries& v) {
  j = Json{{"run_id", v.run_id}, {"per_turn", v.per_turn}};
}

void from_json(const Json& j, EvalSeries& v) {
  v.run_id = j.at("run_id").get<std::string>();
  v.per_turn = j.at("per_turn").get<std::vector<TurnEval>>();
}

}  // namespace iterlab
