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

#include "iterlab/validate.hpp"

#include "iterlab/util.hpp"

namespace iterlab {

ValidationReport validate_run(const ConversationRun& run) {
  ValidationReport out;

  if (run.run_id != compute_run_id(run.task_id, run.model_id,
                                   run.technique_id, run.gen_params,
                                   run.repeat)) {
    out.push_back({"run_id", std::nullopt, "run-id"});
  }
  if (!(run.gen_params.temperature >= 0.0) || run.gen_params.max_tokens <= 0) {
    out.push_back({"gen_params", std::nullopt, "gen-params"});
  }

  const bool full = static_cast<int>(run.turns.size()) == run.planned_turns;
  if ((run.status == RunStatus::kComplete) != full) {
    out.push_back({"status", std::nullopt, "turn-count"});
  }

  for (std::size_t i = 0; i < run.turns.size(); ++i) {
    const int position = static_cast<int>(i) + 1;
    const auto& turn = run.turns[i];
    if (turn.turn_index != position) {
      out.push_back({"turn_index", position, "turn-index"});
    }
    if (i > 0) {
      const auto& prev = run.turns[i - 1].response_text;
      if (turn.prompt_text.find(prev) == std::string::npos) {
        out.push_back({"prompt_text", position, "memoryless-chain"});
      }
    }
  }
  return out;
}

ValidationReport validate_archive(const ConversationRun& run,
                                  const std::filesystem::path& raw_dir) {
  ValidationReport out;
  for (std::size_t i = 0; i < run.turns.size(); ++i) {
    const int position = static_cast<int>(i) + 1;
    const auto file = raw_dir / (std::to_string(position) + ".request.json");
    Json request;
    try {
      request = Json::parse(read_file(file));
    } catch (const std::exception&) {
      out.push_back({"raw", position, "archive-missing"});
      continue;
    }
    if (i == 0) continue;
    const Json messages = request.value("messages", Json::array());
    const bool ok = messages.is_array() && messages.size() == 1 &&
                    messages[0].value("role", "") == "user" &&
                    messages[0].value("content", "").find(
                        run.turns[i - 1].response_text) != std::string::npos;
    if (!ok) out.push_back({"raw", position, "archive-memoryless"});
  }
  return out;
}

std::string describe(const Violation& v) {
  std::string s = v.rule + " (" + v.field;
  if (v.turn) s += ", turn " + std::to_string(*v.turn);
  return s + ")";
}

}  // namespace iterlab
