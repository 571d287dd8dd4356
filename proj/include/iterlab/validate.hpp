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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iterlab/types.hpp"

namespace iterlab {

struct Violation {
  std::string field;
  std::optional<int> turn;  // 1-based position in `turns`, when turn-scoped
  std::string rule;         // e.g. "turn-count", "memoryless-chain"

  bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

/// Checks the protocol invariants of a stored run. Violations are returned as
/// data; an empty report means the run is well formed.
///
/// Rules: "run-id", "gen-params", "turn-count", "turn-index",
/// "memoryless-chain".
ValidationReport validate_run(const ConversationRun& run);

/// Checks the raw request archive of a run: every turn has a request file,
/// and each request from turn 2 on holds exactly one user message that
/// embeds the previous response verbatim. Rules: "archive-missing",
/// "archive-memoryless".
ValidationReport validate_archive(const ConversationRun& run,
                                  const std::filesystem::path& raw_dir);

std::string describe(const Violation& v);

}  // namespace iterlab
