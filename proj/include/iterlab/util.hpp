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

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>

namespace iterlab {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never observe a
/// half-written file.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

/// UTC, second resolution, e.g. "2026-10-15T08:00:00Z".
std::string format_utc(std::chrono::system_clock::time_point tp);

}  // namespace iterlab
