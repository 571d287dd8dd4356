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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iterlab/types.hpp"

namespace iterlab {

struct TaskFilter {
  std::optional<double> min_difficulty;  // exclusive: keeps difficulty > min
  std::optional<std::size_t> sample_n;
  std::uint64_t seed = 0;
};

/// Parses JSONL task lines. When `domain` is given, lines without a "domain"
/// field take it and lines naming another domain are rejected. Blank lines
/// are skipped. Throws SchemaError with the 1-based line number.
std::vector<TaskSpec> parse_tasks(std::string_view jsonl,
                                  std::optional<Domain> domain = std::nullopt);

/// Difficulty filter, then an optional deterministic sample: tasks sorted by
/// id, shuffled with a seeded mt19937_64 Fisher-Yates, first n kept and
/// returned in id order. Throws EmptyAfterFilter.
std::vector<TaskSpec> filter_tasks(std::vector<TaskSpec> tasks,
                                   const TaskFilter& filter);

std::vector<TaskSpec> load_tasks(const std::filesystem::path& path,
                                 std::optional<Domain> domain = std::nullopt,
                                 const TaskFilter& filter = {});

std::string tasks_to_jsonl(const std::vector<TaskSpec>& tasks);

}  // namespace iterlab
