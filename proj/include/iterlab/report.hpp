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

// Turn-wise tables and coverage curves over a run store, with deterministic
// file emission.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iterlab/types.hpp"

namespace iterlab {

struct CorrectnessSummary {
  int pass_count = 0;
  double pass_rate = 0.0;
  std::optional<int> first_success_turn;
  std::vector<int> failing_turns;  // 1-based

  bool operator==(const CorrectnessSummary&) const = default;
};

/// Requires 1..12 entries, each 0 or 1.
CorrectnessSummary summarize_correctness(std::span<const int> series);

/// One run with whatever evaluation and metric files exist for it.
struct RunBundle {
  std::string run_id;
  std::string task_id;
  std::string model_id;
  std::string technique_id;
  std::optional<Domain> domain;
  std::optional<EvalSeries> eval;
  std::optional<MetricSeries> metrics;
};

RunBundle bundle_of(const ConversationRun& run);

enum class GroupBy { kTechnique, kModel, kTask, kDomain, kNone };

std::string_view to_string(GroupBy g);
GroupBy parse_group_by(std::string_view s);
std::string group_key(const RunBundle& b, GroupBy g);

/// Metric names accepted by turnwise_matrix: correctness,
/// reasoning_soundness, scorecard keys, drift, volatility, lexical_novelty,
/// growth_score, growth_factor.
const std::vector<std::string>& known_metrics();

/// Value of `metric` at 1-based `turn` for a run, if recorded.
std::optional<double> metric_value(const RunBundle& b, std::string_view metric,
                                   int turn);

struct TurnwiseCell {
  std::optional<double> mean;  // null when n == 0
  int n = 0;

  bool operator==(const TurnwiseCell&) const = default;
};

struct TurnwiseMatrix {
  std::string metric;
  std::string group_by;
  std::vector<std::string> row_keys;            // sorted
  std::vector<std::vector<TurnwiseCell>> cells;  // [row][turn-1]

  int turns() const { return cells.empty() ? 0 : static_cast<int>(cells[0].size()); }
};

/// cell(g, t) = mean of the metric over runs of group g that recorded it at
/// turn t. Summation follows run_id order, so the result does not depend on
/// input order. Throws UnknownMetric.
TurnwiseMatrix turnwise_matrix(std::span<const RunBundle> runs, GroupBy group_by,
                               std::string_view metric,
                               int turns = kDefaultTurns);

struct CoverageSeries {
  std::string label;
  std::vector<double> fraction;  // per turn, cumulative
  std::vector<int> solved;       // per turn, count of tasks covered
  int n_tasks = 0;
};

/// A task is covered at turn t once any of its runs has correctness 1 at a
/// turn <= t. Tasks with no correctness data at all are left out.
CoverageSeries cumulative_coverage(std::span<const RunBundle> runs,
                                   int turns = kDefaultTurns,
                                   std::string label = "pooled");

/// Selection and grouping behind a report; recorded in its manifest.
struct ReportSettings {
  GroupBy group_by = GroupBy::kTechnique;
  int turns = kDefaultTurns;
  std::optional<Domain> domain;         // keep only runs of this domain
  std::optional<std::string> model_id;  // keep only runs of this model
};

void to_json(Json& j, const ReportSettings& v);
void from_json(const Json& j, ReportSettings& v);

std::vector<RunBundle> select_runs(std::span<const RunBundle> runs,
                                   const ReportSettings& settings);

struct ReportAggregates {
  ReportSettings settings;
  std::vector<TurnwiseMatrix> by_group;  // one per metric with data
  std::vector<TurnwiseMatrix> pooled;    // same metrics, single row "all"
  std::vector<CoverageSeries> coverage;  // pooled first, then per group
  struct RunSummaryRow {
    RunBundle keys;
    CorrectnessSummary summary;
  };
  std::vector<RunSummaryRow> run_summaries;
};

/// Applies the settings' filters, then aggregates every metric with data.
ReportAggregates build_aggregates(std::span<const RunBundle> runs,
                                  const ReportSettings& settings = {});

enum class ReportFormat { kCsv, kJson, kSvg };

std::set<ReportFormat> parse_formats(std::string_view csv_list);

/// Header `<group>,t1..tT`; empty cells for null means.
std::string matrix_csv(const TurnwiseMatrix& m);
/// Same shape as matrix_csv with denominators.
std::string matrix_n_csv(const TurnwiseMatrix& m);
/// Heatmap: rows = groups, columns = turns, fixed color scale over
/// [lo, hi] (values clamped), numeric label in every cell.
std::string matrix_svg(const TurnwiseMatrix& m, double lo = 0.0, double hi = 1.0);

/// File name -> contents. Pure; identical aggregates give identical bytes.
std::map<std::string, std::string> render_report(const ReportAggregates& agg,
                                                 const std::set<ReportFormat>& formats);

struct ManifestEntry {
  std::string file;
  std::string sha256;

  bool operator==(const ManifestEntry&) const = default;
};

/// Writes every rendered file plus manifest.json holding the settings, the
/// formats and {"files": [{file, sha256}]}.
std::vector<ManifestEntry> emit_report(const ReportAggregates& agg,
                                       const std::filesystem::path& out_dir,
                                       const std::set<ReportFormat>& formats);

/// Loads runs plus any eval.json / metrics.json beside them.
std::vector<RunBundle> load_bundles(const std::filesystem::path& output_dir);

/// Recomputes the report from the run store using the settings recorded in
/// the manifest and compares it with the manifest and the files on disk.
/// Returns the discrepancies; empty means the report verifies.
std::vector<std::string> verify_report(const std::filesystem::path& output_dir,
                                       const std::filesystem::path& report_dir);

}  // namespace iterlab
