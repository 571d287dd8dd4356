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

#include "iterlab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include "iterlab/errors.hpp"
#include "iterlab/tasks.hpp"
#include "iterlab/util.hpp"

namespace iterlab {

namespace fs = std::filesystem;

ExperimentPlan load_plan(const fs::path& path) {
  Json j = Json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw PlanInvalid("plan file is not a JSON object: " + path.string());
  }
  ExperimentPlan plan;
  try {
    if (j.contains("tasks")) {
      plan.tasks = j["tasks"].get<std::vector<TaskSpec>>();
    } else if (j.contains("tasks_file")) {
      fs::path tasks = j["tasks_file"].get<std::string>();
      if (tasks.is_relative()) tasks = path.parent_path() / tasks;
      plan.tasks = parse_tasks(read_file(tasks));
    }
    plan.model_ids = j.at("model_ids").get<std::vector<std::string>>();
    plan.techniques = j.at("techniques").get<std::vector<std::string>>();
    plan.gen_params = j.value("gen_params", GenParams{});
    plan.turns = j.value("turns", kDefaultTurns);
    plan.repeats = j.value("repeats", 1);
    plan.output_dir = j.value("output_dir", std::string{});
    plan.template_set =
        parse_template_set(j.value("template_set", std::string("canonical")));
  } catch (const PlanInvalid&) {
    throw;
  } catch (const std::exception& e) {
    throw PlanInvalid(std::string("bad plan: ") + e.what());
  }
  return plan;
}

void validate_plan(const ExperimentPlan& plan) {
  if (plan.turns < 1) throw PlanInvalid("turns must be >= 1");
  if (plan.repeats < 1) throw PlanInvalid("repeats must be >= 1");
  if (plan.tasks.empty()) throw PlanInvalid("plan has no tasks");
  if (plan.model_ids.empty()) throw PlanInvalid("plan has no models");
  if (plan.techniques.empty()) throw PlanInvalid("plan has no techniques");
  if (!(plan.gen_params.temperature >= 0) || plan.gen_params.max_tokens <= 0) {
    throw PlanInvalid("invalid generation parameters");
  }
  std::set<std::string> ids;
  for (const auto& task : plan.tasks) {
    if (!ids.insert(task.task_id).second) {
      throw PlanInvalid("duplicate task id " + task.task_id);
    }
    if (auto missing = missing_required_fields(task); !missing.empty()) {
      throw PlanInvalid("task " + task.task_id + " lacks " + missing.front());
    }
  }
  for (const auto& id : plan.techniques) {
    TechniqueSpec technique;
    try {
      technique = find_technique(id, plan.template_set);
    } catch (const UnknownTechnique& e) {
      throw PlanInvalid(e.what());
    }
    for (const auto& task : plan.tasks) {
      if (!scope_allows(technique.domain_scope, task.domain)) {
        throw PlanInvalid(id + " cannot be applied to " + task.task_id + " (" +
                          std::string(to_string(task.domain)) + ")");
      }
    }
  }
}

ConversationRun run_conversation(const TaskSpec& task, const std::string& model_id,
                                 const std::string& technique_id,
                                 const GenParams& params, ChatBackend& backend,
                                 const ConversationOptions& options) {
  SystemClock system_clock;
  Clock& clock = options.clock ? *options.clock : system_clock;
  const TechniqueSpec technique = find_technique(technique_id, options.template_set);
  if (!scope_allows(technique.domain_scope, task.domain)) {
    throw TechniqueDomainMismatch(technique_id + " does not apply to " +
                                  std::string(to_string(task.domain)));
  }

  ConversationRun run;
  run.task_id = task.task_id;
  run.model_id = model_id;
  run.technique_id = technique_id;
  run.gen_params = params;
  run.domain = task.domain;
  run.planned_turns = options.turns;
  run.repeat = options.repeat;
  run.run_id = compute_run_id(task.task_id, model_id, technique_id, params,
                              options.repeat);

  for (int t = 1; t <= options.turns; ++t) {
    RenderedPrompt prompt =
        t == 1 ? render_initial_prompt(task)
               : render_iteration_prompt(run.turns.back().response_text,
                                         technique, task.domain);
    ChatRequest req;
    req.model_id = model_id;
    req.messages = {{"user", prompt.text}};
    req.temperature = params.temperature;
    req.max_tokens = params.max_tokens;

    const std::string stem = std::to_string(t);
    if (options.archive) options.archive->write_request(stem, chat_request_body(req));

    ChatResult result;
    try {
      result = backend.complete_chat(req);
    } catch (const GatewayError& e) {
      run.failure = "turn " + stem + ": " + e.what();
      break;
    }
    if (options.archive) options.archive->write_response(stem, result.raw_response);
    if (result.text.empty()) {
      run.failure = "turn " + stem + ": empty response";
      break;
    }

    TurnRecord turn;
    turn.turn_index = t;
    turn.prompt_text = std::move(prompt.text);
    turn.response_text = std::move(result.text);
    turn.created_at = format_utc(clock.wall_now());
    turn.token_usage = result.usage;
    turn.provider_meta =
        Json{{"attempts", result.attempts}, {"truncated", result.truncated}};
    run.turns.push_back(std::move(turn));
  }

  if (static_cast<int>(run.turns.size()) == options.turns) {
    run.status = RunStatus::kComplete;
  } else {
    run.status = run.turns.empty() ? RunStatus::kFailed : RunStatus::kPartial;
  }
  return run;
}

fs::path run_dir(const fs::path& output_dir, std::string_view run_id) {
  return output_dir / "runs" / std::string(run_id);
}

std::optional<ConversationRun> load_run(const fs::path& output_dir,
                                        std::string_view run_id) {
  const auto file = run_dir(output_dir, run_id) / "run.json";
  std::error_code ec;
  if (!fs::exists(file, ec)) return std::nullopt;
  try {
    return Json::parse(read_file(file)).get<ConversationRun>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<ConversationRun> load_all_runs(const fs::path& output_dir) {
  std::vector<ConversationRun> runs;
  const auto root = output_dir / "runs";
  std::error_code ec;
  if (!fs::is_directory(root, ec)) return runs;
  for (const auto& entry : fs::directory_iterator(root)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_directory() || name.starts_with(".")) continue;
    if (auto run = load_run(output_dir, name)) runs.push_back(std::move(*run));
  }
  std::sort(runs.begin(), runs.end(),
            [](const auto& a, const auto& b) { return a.run_id < b.run_id; });
  return runs;
}

namespace {

struct Job {
  const TaskSpec* task;
  std::string model_id;
  std::string technique_id;
  int repeat;
};

}  // namespace

RunSetSummary run_experiment(const ExperimentPlan& plan, ChatBackend& backend,
                             const RunnerOptions& options) {
  validate_plan(plan);
  if (plan.output_dir.empty()) throw PlanInvalid("plan has no output_dir");
  fs::create_directories(plan.output_dir / "runs");

  std::vector<Job> jobs;
  for (const auto& task : plan.tasks) {
    for (const auto& model : plan.model_ids) {
      for (const auto& technique : plan.techniques) {
        for (int r = 0; r < plan.repeats; ++r) {
          jobs.push_back({&task, model, technique, r});
        }
      }
    }
  }
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    return std::tie(a.task->task_id, a.model_id, a.technique_id, a.repeat) <
           std::tie(b.task->task_id, b.model_id, b.technique_id, b.repeat);
  });

  std::atomic<int> completed{0}, skipped{0}, failed{0};
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mu;
  std::exception_ptr first_error;

  auto execute = [&](const Job& job) {
    const std::string id = compute_run_id(job.task->task_id, job.model_id,
                                          job.technique_id, plan.gen_params,
                                          job.repeat);
    if (auto existing = load_run(plan.output_dir, id);
        existing && existing->status == RunStatus::kComplete &&
        existing->planned_turns == plan.turns) {
      ++skipped;
      if (options.on_run) options.on_run(*existing, true);
      return;
    }

    const fs::path final_dir = run_dir(plan.output_dir, id);
    const fs::path work_dir = plan.output_dir / "runs" / ("." + id + ".inprogress");
    fs::remove_all(work_dir);
    fs::create_directories(work_dir / "raw");

    Archive archive(work_dir / "raw");
    ConversationOptions conv;
    conv.turns = plan.turns;
    conv.repeat = job.repeat;
    conv.template_set = plan.template_set;
    conv.archive = &archive;
    conv.clock = options.clock;
    ConversationRun run = run_conversation(*job.task, job.model_id,
                                           job.technique_id, plan.gen_params,
                                           backend, conv);
    write_file_atomic(work_dir / "run.json", Json(run).dump(2));
    fs::remove_all(final_dir);
    fs::rename(work_dir, final_dir);

    if (run.status == RunStatus::kComplete) {
      ++completed;
    } else {
      ++failed;
    }
    if (options.on_run) options.on_run(run, false);
  };

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size() && !stop; i = next++) {
      try {
        execute(jobs[i]);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        stop = true;
      }
    }
  };

  const int pool = std::clamp(options.workers, 1,
                              static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
  {
    std::vector<std::jthread> threads;
    for (int k = 1; k < pool; ++k) threads.emplace_back(worker);
    worker();
  }
  if (first_error) std::rethrow_exception(first_error);

  return RunSetSummary{static_cast<int>(jobs.size()), completed.load(),
                       skipped.load(), failed.load()};
}

}  // namespace iterlab
