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

// Harness configuration: model endpoints plus sandbox and concurrency
// settings. Credentials never live here; each
// provider names the environment variable that holds its token.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iterlab/evaluators.hpp"
#include "iterlab/gateway.hpp"

namespace iterlab {

struct SandboxConfig {
  std::vector<std::string> command;  // argv of the shim; empty = not configured
  SandboxLimits limits;
  int workers = 4;
  int grace_s = 5;
};

struct HarnessConfig {
  std::vector<ProviderConfig> providers;  // one per generation model
  std::optional<ProviderConfig> embedding;
  std::optional<ProviderConfig> judge;
  SandboxConfig sandbox;
  int workers = 4;
  RetryPolicy retry;
};

void to_json(Json& j, const HarnessConfig& v);
void from_json(const Json& j, HarnessConfig& v);

/// Reads a config file. A missing path yields the defaults. Throws
/// PreconditionError on malformed values.
HarnessConfig load_config(const std::optional<std::filesystem::path>& path);

}  // namespace iterlab
