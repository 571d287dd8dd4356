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

#include "iterlab/config.hpp"

#include "iterlab/errors.hpp"
#include "iterlab/util.hpp"

namespace iterlab {

void to_json(Json& j, const HarnessConfig& v) {
  j = Json::object();
  j["providers"] = v.providers;
  j["embedding"] = v.embedding ? Json(*v.embedding) : Json(nullptr);
  j["judge"] = v.judge ? Json(*v.judge) : Json(nullptr);
  j["workers"] = v.workers;
  j["sandbox"] = Json{{"command", v.sandbox.command},
                      {"timeout_s", v.sandbox.limits.timeout_s},
                      {"mem_limit_mb", v.sandbox.limits.mem_limit_mb},
                      {"workers", v.sandbox.workers},
                      {"grace_s", v.sandbox.grace_s}};
  j["retry"] = Json{{"max_attempts", v.retry.max_attempts},
                    {"base_ms", v.retry.base.count()},
                    {"factor", v.retry.factor},
                    {"cap_ms", v.retry.cap.count()}};
}

void from_json(const Json& j, HarnessConfig& v) {
  v = HarnessConfig{};
  if (j.contains("providers")) v.providers = j.at("providers").get<std::vector<ProviderConfig>>();
  if (j.contains("embedding") && !j["embedding"].is_null()) {
    v.embedding = j["embedding"].get<ProviderConfig>();
  }
  if (j.contains("judge") && !j["judge"].is_null()) {
    v.judge = j["judge"].get<ProviderConfig>();
  }
  v.workers = j.value("workers", 4);
  if (j.contains("sandbox")) {
    const Json& s = j["sandbox"];
    if (s.contains("command")) {
      v.sandbox.command = s["command"].is_string()
                              ? std::vector<std::string>{"/bin/sh", "-c",
                                                         s["command"].get<std::string>()}
                              : s["command"].get<std::vector<std::string>>();
    }
    v.sandbox.limits.timeout_s = s.value("timeout_s", 30);
    v.sandbox.limits.mem_limit_mb = s.value("mem_limit_mb", 1024);
    v.sandbox.workers = s.value("workers", 4);
    v.sandbox.grace_s = s.value("grace_s", 5);
  }
  if (j.contains("retry")) {
    const Json& r = j["retry"];
    v.retry.max_attempts = r.value("max_attempts", 5);
    v.retry.base = std::chrono::milliseconds(r.value("base_ms", 1000));
    v.retry.factor = r.value("factor", 2.0);
    v.retry.cap = std::chrono::milliseconds(r.value("cap_ms", 60000));
  }

  if (v.workers < 1) throw PreconditionError("workers must be >= 1");
  if (v.sandbox.workers < 1) throw PreconditionError("sandbox.workers must be >= 1");
  if (v.sandbox.limits.timeout_s < 1 || v.sandbox.limits.mem_limit_mb < 1) {
    throw PreconditionError("sandbox limits must be positive");
  }
  if (v.retry.max_attempts < 1) throw PreconditionError("retry.max_attempts must be >= 1");
}

HarnessConfig load_config(const std::optional<std::filesystem::path>& path) {
  if (!path) return HarnessConfig{};
  Json j;
  try {
    j = Json::parse(read_file(*path));
  } catch (const Json::parse_error& e) {
    throw PreconditionError("config " + path->string() + ": " + e.what());
  }
  try {
    return j.get<HarnessConfig>();
  } catch (const Json::exception& e) {
    throw PreconditionError("config " + path->string() + ": " + e.what());
  }
}

}  // namespace iterlab
