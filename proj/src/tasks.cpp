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

#include "iterlab/tasks.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "iterlab/errors.hpp"
#include "iterlab/util.hpp"

namespace iterlab {

std::vector<TaskSpec> parse_tasks(std::string_view jsonl,
                                  std::optional<Domain> domain) {
  std::vector<TaskSpec> tasks;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    auto line = jsonl.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                               : nl - pos);
    pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw SchemaError(line_no, "not a JSON object");
    }
    if (domain) {
      if (!j.contains("domain")) {
        j["domain"] = to_string(*domain);
      } else if (j["domain"] != to_string(*domain)) {
        throw SchemaError(line_no, "domain differs from " +
                                       std::string(to_string(*domain)));
      }
    }
    TaskSpec task;
    try {
      task = j.get<TaskSpec>();
    } catch (const std::exception& e) {
      throw SchemaError(line_no, e.what());
    }
    if (auto missing = missing_required_fields(task); !missing.empty()) {
      throw SchemaError(line_no, "missing " + missing.front());
    }
    if (task.difficulty && (*task.difficulty < 0 || *task.difficulty > 10)) {
      throw SchemaError(line_no, "difficulty outside 0..10");
    }
    if (!ids.insert(task.task_id).second) {
      throw SchemaError(line_no, "duplicate task_id " + task.task_id);
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

std::vector<TaskSpec> filter_tasks(std::vector<TaskSpec> tasks,
                                   const TaskFilter& filter) {
  if (filter.min_difficulty) {
    std::erase_if(tasks, [&](const TaskSpec& t) {
      return !t.difficulty || !(*t.difficulty > *filter.min_difficulty);
    });
  }
  std::sort(tasks.begin(), tasks.end(),
            [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
  if (filter.sample_n && *filter.sample_n < tasks.size()) {
    std::mt19937_64 rng(filter.seed);
    for (std::size_t i = tasks.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(tasks[i], tasks[j]);
    }
    tasks.resize(*filter.sample_n);
    std::sort(tasks.begin(), tasks.end(),
              [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
  }
  if (tasks.empty()) throw EmptyAfterFilter();
  return tasks;
}

std::vector<TaskSpec> load_tasks(const std::filesystem::path& path,
                                 std::optional<Domain> domain,
                                 const TaskFilter& filter) {
  return filter_tasks(parse_tasks(read_file(path), domain), filter);
}

std::string tasks_to_jsonl(const std::vector<TaskSpec>& tasks) {
  std::string out;
  for (const auto& t : tasks) {
    out += Json(t).dump();
    out += '\n';
  }
  return out;
}

}  // namespace iterlab
