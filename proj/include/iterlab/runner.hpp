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

// Memoryless refinement loop and grid execution with resume.
//
// Store layout under the output directory:
//   runs/<run_id>/run.json
//   runs/<run_id>/raw/<turn>.request.json, <turn>.response.json
// A run directory is assembled under runs/.<run_id>.inprogress and renamed
// into place once its run.json is written.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "iterlab/gateway.hpp"
#include "iterlab/prompts.hpp"
#include "iterlab/types.hpp"

namespace iterlab {

struct ExperimentPlan {
  std::vector<TaskSpec> tasks;
  std::vector<std::string> model_ids;
  std::vector<std::string> techniques;
  GenParams gen_params;
  int turns = kDefaultTurns;
  std::filesystem::path output_dir;
  int repeats = 1;
  TemplateSet template_set = TemplateSet::kCanonical;
};

/// Reads a plan file. Tasks come inline ("tasks": [...]) or from a JSONL file
/// ("tasks_file", relative to the plan file).
ExperimentPlan load_plan(const std::filesystem::path& path);

/// Throws PlanInvalid (unknown or inapplicable technique, bad turn count,
/// duplicate task ids, missing task fields).
void validate_plan(const ExperimentPlan& plan);

struct ConversationOptions {
  int turns = kDefaultTurns;
  int repeat = 0;
  TemplateSet template_set = TemplateSet::kCanonical;
  Archive* archive = nullptr;  // raw request/response per turn
  Clock* clock = nullptr;      // timestamps; system clock when null
};

/// Turn 1 sends the task prompt; each later turn sends one user message
/// embedding only the previous response and the instruction. Gateway
/// failures end the run early as partial (some turns) or failed (none).
ConversationRun run_conversation(const TaskSpec& task, const std::string& model_id,
                                 const std::string& technique_id,
                                 const GenParams& params, ChatBackend& backend,
                                 const ConversationOptions& options = {});

struct RunSetSummary {
  int total = 0;
  int completed = 0;
  int skipped_existing = 0;
  int failed = 0;  // runs that ended partial or failed

  bool operator==(const RunSetSummary&) const = default;
};

struct RunnerOptions {
  int workers = 4;
  Clock* clock = nullptr;
  /// Called once per finished or skipped run, from worker threads.
  std::function<void(const ConversationRun&, bool skipped)> on_run;
};

std::filesystem::path run_dir(const std::filesystem::path& output_dir,
                              std::string_view run_id);

/// Loads runs/<id>/run.json; nullopt if absent or unreadable.
std::optional<ConversationRun> load_run(const std::filesystem::path& output_dir,
                                        std::string_view run_id);

/// Every stored run, sorted by run_id.
std::vector<ConversationRun> load_all_runs(const std::filesystem::path& output_dir);

/// Executes the (task, model, technique, repeat) grid in sorted order.
/// Complete runs already on disk are skipped; anything else is redone from
/// turn 1.
RunSetSummary run_experiment(const ExperimentPlan& plan, ChatBackend& backend,
                             const RunnerOptions& options = {});

}  // namespace iterlab
