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

#include "iterlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "iterlab/errors.hpp"
#include "iterlab/runner.hpp"
#include "iterlab/util.hpp"

namespace iterlab {

namespace fs = std::filesystem;

CorrectnessSummary summarize_correctness(std::span<const int> series) {
  if (series.empty() || series.size() > static_cast<std::size_t>(kDefaultTurns)) {
    throw PreconditionError("correctness series must hold 1..12 turns");
  }
  CorrectnessSummary s;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const int turn = static_cast<int>(i) + 1;
    if (series[i] != 0 && series[i] != 1) {
      throw PreconditionError("correctness values must be 0 or 1");
    }
    if (series[i] == 1) {
      ++s.pass_count;
      if (!s.first_success_turn) s.first_success_turn = turn;
    } else {
      s.failing_turns.push_back(turn);
    }
  }
  s.pass_rate = static_cast<double>(s.pass_count) / static_cast<double>(series.size());
  return s;
}

RunBundle bundle_of(const ConversationRun& run) {
  return RunBundle{run.run_id, run.task_id, run.model_id, run.technique_id,
                   run.domain, std::nullopt, std::nullopt};
}

std::string_view to_string(GroupBy g) {
  switch (g) {
    case GroupBy::kTechnique: return "technique";
    case GroupBy::kModel: return "model";
    case GroupBy::kTask: return "task";
    case GroupBy::kDomain: return "domain";
    case GroupBy::kNone: return "none";
  }
  return "none";
}

GroupBy parse_group_by(std::string_view s) {
  for (auto g : {GroupBy::kTechnique, GroupBy::kModel, GroupBy::kTask,
                 GroupBy::kDomain, GroupBy::kNone}) {
    if (to_string(g) == s) return g;
  }
  throw PreconditionError("unknown group-by key: " + std::string(s));
}

std::string group_key(const RunBundle& b, GroupBy g) {
  switch (g) {
    case GroupBy::kTechnique: return b.technique_id;
    case GroupBy::kModel: return b.model_id;
    case GroupBy::kTask: return b.task_id;
    case GroupBy::kDomain:
      return b.domain ? std::string(to_string(*b.domain)) : "unknown";
    case GroupBy::kNone: return "all";
  }
  return "all";
}

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> kMetrics = {
      "correctness",     "reasoning_soundness", "originality",
      "feasibility",     "clarity",             "buzzwords",
      "pragmatism",      "readability",         "logical_soundness",
      "clarity_of_explanation", "drift",        "volatility",
      "lexical_novelty", "growth_score",        "growth_factor"};
  return kMetrics;
}

std::optional<double> metric_value(const RunBundle& b, std::string_view metric,
                                   int turn) {
  if (turn < 1) return std::nullopt;
  const auto i = static_cast<std::size_t>(turn - 1);
  if (b.eval && i < b.eval->per_turn.size()) {
    const TurnEval& e = b.eval->per_turn[i];
    if (metric == "correctness") {
      return e.correctness ? std::optional<double>(*e.correctness) : std::nullopt;
    }
    if (metric == "reasoning_soundness") {
      return e.reasoning_soundness ? std::optional<double>(*e.reasoning_soundness)
                                   : std::nullopt;
    }
    if (e.scorecard) {
      if (auto it = e.scorecard->find(std::string(metric)); it != e.scorecard->end()) {
        return it->second;
      }
    }
  }
  if (b.metrics) {
    const MetricSeries& m = *b.metrics;
    auto at = [](const std::vector<double>& v, std::size_t k) -> std::optional<double> {
      return k < v.size() ? std::optional<double>(v[k]) : std::nullopt;
    };
    if (metric == "drift") return at(m.drift, i);
    if (metric == "volatility") return i == 0 ? std::nullopt : at(m.volatility, i - 1);
    if (metric == "lexical_novelty") return at(m.lexical_novelty, i);
    if (metric == "growth_score") return at(m.growth_score, i);
    if (metric == "growth_factor") {
      return i < m.growth_factor.size() ? m.growth_factor[i] : std::nullopt;
    }
  }
  return std::nullopt;
}

namespace {

std::vector<const RunBundle*> sorted_by_id(std::span<const RunBundle> runs) {
  std::vector<const RunBundle*> out;
  for (const auto& r : runs) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const RunBundle* a, const RunBundle* b) {
    return a->run_id < b->run_id;
  });
  return out;
}

}  // namespace

TurnwiseMatrix turnwise_matrix(std::span<const RunBundle> runs, GroupBy group_by,
                               std::string_view metric, int turns) {
  const auto& known = known_metrics();
  if (std::find(known.begin(), known.end(), metric) == known.end()) {
    throw UnknownMetric("unknown metric: " + std::string(metric));
  }
  const auto ordered = sorted_by_id(runs);
  std::map<std::string, std::vector<const RunBundle*>> groups;
  for (const RunBundle* r : ordered) groups[group_key(*r, group_by)].push_back(r);

  TurnwiseMatrix m;
  m.metric = std::string(metric);
  m.group_by = std::string(to_string(group_by));
  for (const auto& [key, members] : groups) {
    m.row_keys.push_back(key);
    std::vector<TurnwiseCell> row(static_cast<std::size_t>(turns));
    for (int t = 1; t <= turns; ++t) {
      double sum = 0.0;
      int n = 0;
      for (const RunBundle* r : members) {
        if (auto v = metric_value(*r, metric, t)) {
          sum += *v;
          ++n;
        }
      }
      auto& cell = row[static_cast<std::size_t>(t - 1)];
      cell.n = n;
      if (n > 0) cell.mean = sum / n;
    }
    m.cells.push_back(std::move(row));
  }
  return m;
}

CoverageSeries cumulative_coverage(std::span<const RunBundle> runs, int turns,
                                   std::string label) {
  // Earliest solved turn per task; 0 = has data but never solved.
  std::map<std::string, int> first_solved;
  for (const RunBundle* r : sorted_by_id(runs)) {
    bool has_data = false;
    int first = 0;
    for (int t = 1; t <= turns; ++t) {
      if (auto v = metric_value(*r, "correctness", t)) {
        has_data = true;
        if (*v == 1.0 && first == 0) first = t;
      }
    }
    if (!has_data) continue;
    auto [it, inserted] = first_solved.try_emplace(r->task_id, first);
    if (!inserted && first != 0 && (it->second == 0 || first < it->second)) {
      it->second = first;
    }
  }

  CoverageSeries c;
  c.label = std::move(label);
  c.n_tasks = static_cast<int>(first_solved.size());
  for (int t = 1; t <= turns; ++t) {
    int solved = 0;
    for (const auto& [task, first] : first_solved) {
      if (first != 0 && first <= t) ++solved;
    }
    c.solved.push_back(solved);
    c.fraction.push_back(c.n_tasks == 0 ? 0.0
                                        : static_cast<double>(solved) / c.n_tasks);
  }
  return c;
}

void to_json(Json& j, const ReportSettings& v) {
  j = Json{{"group_by", to_string(v.group_by)}, {"turns", v.turns}};
  j["domain"] = v.domain ? Json(to_string(*v.domain)) : Json(nullptr);
  j["model_id"] = v.model_id ? Json(*v.model_id) : Json(nullptr);
}

void from_json(const Json& j, ReportSettings& v) {
  v.group_by = parse_group_by(j.value("group_by", std::string("technique")));
  v.turns = j.value("turns", kDefaultTurns);
  v.domain.reset();
  if (j.contains("domain") && j["domain"].is_string()) {
    v.domain = parse_domain(j["domain"].get<std::string>());
  }
  v.model_id.reset();
  if (j.contains("model_id") && j["model_id"].is_string()) {
    v.model_id = j["model_id"].get<std::string>();
  }
}

std::vector<RunBundle> select_runs(std::span<const RunBundle> runs,
                                   const ReportSettings& settings) {
  std::vector<RunBundle> out;
  for (const auto& r : runs) {
    if (settings.domain && r.domain != settings.domain) continue;
    if (settings.model_id && r.model_id != *settings.model_id) continue;
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.run_id < b.run_id; });
  return out;
}

ReportAggregates build_aggregates(std::span<const RunBundle> all_runs,
                                  const ReportSettings& settings) {
  const auto runs = select_runs(all_runs, settings);
  ReportAggregates agg;
  agg.settings = settings;
  const int turns = settings.turns;

  for (const auto& metric : known_metrics()) {
    auto pooled = turnwise_matrix(runs, GroupBy::kNone, metric, turns);
    bool any = false;
    for (const auto& row : pooled.cells) {
      for (const auto& cell : row) any = any || cell.n > 0;
    }
    if (!any) continue;
    agg.by_group.push_back(turnwise_matrix(runs, settings.group_by, metric, turns));
    agg.pooled.push_back(std::move(pooled));
  }

  agg.coverage.push_back(cumulative_coverage(runs, turns, "pooled"));
  if (agg.coverage.front().n_tasks == 0) {
    agg.coverage.clear();
  } else if (settings.group_by != GroupBy::kNone) {
    std::map<std::string, std::vector<RunBundle>> groups;
    for (const auto& r : runs) groups[group_key(r, settings.group_by)].push_back(r);
    for (const auto& [key, members] : groups) {
      auto c = cumulative_coverage(members, turns, key);
      if (c.n_tasks > 0) agg.coverage.push_back(std::move(c));
    }
  }

  for (const auto& r : runs) {
    if (!r.eval || r.eval->per_turn.empty() ||
        r.eval->per_turn.size() > static_cast<std::size_t>(kDefaultTurns)) {
      continue;
    }
    std::vector<int> series;
    for (const auto& e : r.eval->per_turn) {
      if (!e.correctness) break;
      series.push_back(*e.correctness);
    }
    if (series.size() != r.eval->per_turn.size()) continue;
    agg.run_summaries.push_back({r, summarize_correctness(series)});
  }
  return agg;
}

std::set<ReportFormat> parse_formats(std::string_view csv_list) {
  std::set<ReportFormat> out;
  std::stringstream ss{std::string(csv_list)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "csv") {
      out.insert(ReportFormat::kCsv);
    } else if (item == "json") {
      out.insert(ReportFormat::kJson);
    } else if (item == "svg") {
      out.insert(ReportFormat::kSvg);
    } else if (!item.empty()) {
      throw PreconditionError("unknown report format: " + item);
    }
  }
  return out;
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header_row(std::string_view first, int turns) {
  std::string h(first);
  for (int t = 1; t <= turns; ++t) h += ",t" + std::to_string(t);
  return h + "\n";
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Blue (low) -> pale yellow -> red (high); t in [0, 1].
std::string color_for(double t) {
  struct Rgb { double r, g, b; };
  static constexpr Rgb kStops[] = {{49, 54, 149}, {255, 255, 191}, {165, 0, 38}};
  t = std::clamp(t, 0.0, 1.0);
  const double x = t * 2.0;
  const int k = std::min(static_cast<int>(x), 1);
  const double f = x - k;
  auto lerp = [&](double a, double b) {
    return static_cast<int>(std::lround(a + (b - a) * f));
  };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", lerp(kStops[k].r, kStops[k + 1].r),
                lerp(kStops[k].g, kStops[k + 1].g), lerp(kStops[k].b, kStops[k + 1].b));
  return buf;
}

std::pair<double, double> svg_range(const TurnwiseMatrix& m) {
  const std::string& k = m.metric;
  if (k == "correctness" || k == "lexical_novelty" || k == "drift" ||
      k == "volatility") {
    return {0.0, 1.0};
  }
  if (k == "growth_factor" || k == "growth_score" || k == "buzzwords") {
    double hi = 1.0;
    for (const auto& row : m.cells) {
      for (const auto& c : row) {
        if (c.mean) hi = std::max(hi, *c.mean);
      }
    }
    return {0.0, hi};
  }
  return {1.0, 10.0};
}

Json matrix_json(const TurnwiseMatrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.row_keys.size(); ++r) {
    Json cells = Json::array();
    for (const auto& c : m.cells[r]) {
      cells.push_back({{"mean", c.mean ? Json(*c.mean) : Json(nullptr)}, {"n", c.n}});
    }
    rows.push_back({{"key", m.row_keys[r]}, {"cells", std::move(cells)}});
  }
  return Json{{"metric", m.metric}, {"group_by", m.group_by}, {"rows", std::move(rows)}};
}

std::string coverage_csv(const std::vector<CoverageSeries>& coverage, int turns) {
  std::string out = "label,n_tasks";
  for (int t = 1; t <= turns; ++t) out += ",t" + std::to_string(t);
  out += "\n";
  for (const auto& c : coverage) {
    out += csv_field(c.label) + "," + std::to_string(c.n_tasks);
    for (double f : c.fraction) out += "," + format_double(f);
    out += "\n";
  }
  return out;
}

std::string summary_csv(const std::vector<ReportAggregates::RunSummaryRow>& rows) {
  std::string out =
      "run_id,task_id,model_id,technique_id,turns,pass_count,pass_rate,"
      "first_success_turn,failing_turns\n";
  for (const auto& row : rows) {
    const auto& s = row.summary;
    std::string failing;
    for (int t : s.failing_turns) {
      if (!failing.empty()) failing += ';';
      failing += std::to_string(t);
    }
    out += csv_field(row.keys.run_id) + "," + csv_field(row.keys.task_id) + "," +
           csv_field(row.keys.model_id) + "," + csv_field(row.keys.technique_id) + "," +
           std::to_string(s.failing_turns.size() + static_cast<std::size_t>(s.pass_count)) +
           "," + std::to_string(s.pass_count) + "," + format_double(s.pass_rate) + "," +
           (s.first_success_turn ? std::to_string(*s.first_success_turn) : "") + "," +
           failing + "\n";
  }
  return out;
}

}  // namespace

std::string matrix_csv(const TurnwiseMatrix& m) {
  std::string out = header_row(m.group_by, m.turns() > 0 ? m.turns() : kDefaultTurns);
  for (std::size_t r = 0; r < m.row_keys.size(); ++r) {
    out += csv_field(m.row_keys[r]);
    for (const auto& c : m.cells[r]) {
      out += ",";
      if (c.mean) out += format_double(*c.mean);
    }
    out += "\n";
  }
  return out;
}

std::string matrix_n_csv(const TurnwiseMatrix& m) {
  std::string out = header_row(m.group_by, m.turns() > 0 ? m.turns() : kDefaultTurns);
  for (std::size_t r = 0; r < m.row_keys.size(); ++r) {
    out += csv_field(m.row_keys[r]);
    for (const auto& c : m.cells[r]) out += "," + std::to_string(c.n);
    out += "\n";
  }
  return out;
}

std::string matrix_svg(const TurnwiseMatrix& m, double lo, double hi) {
  constexpr int kCellW = 56, kCellH = 28, kLabelW = 200, kTop = 48;
  const int turns = m.turns() > 0 ? m.turns() : kDefaultTurns;
  const int rows = static_cast<int>(m.row_keys.size());
  const int width = kLabelW + turns * kCellW + 10;
  const int height = kTop + rows * kCellH + 10;
  const double span = hi > lo ? hi - lo : 1.0;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<text x=\"4\" y=\"16\" font-size=\"13\">" << xml_escape(m.metric) << " by "
     << xml_escape(m.group_by) << " (scale " << fixed(lo, 2) << "-" << fixed(hi, 2)
     << ")</text>\n";
  for (int t = 1; t <= turns; ++t) {
    os << "<text x=\"" << kLabelW + (t - 1) * kCellW + kCellW / 2 << "\" y=\""
       << kTop - 6 << "\" text-anchor=\"middle\">T" << t << "</text>\n";
  }
  for (int r = 0; r < rows; ++r) {
    int n_max = 0;
    for (const auto& c : m.cells[static_cast<std::size_t>(r)]) n_max = std::max(n_max, c.n);
    const int y = kTop + r * kCellH;
    os << "<text x=\"4\" y=\"" << y + kCellH / 2 + 4 << "\">"
       << xml_escape(m.row_keys[static_cast<std::size_t>(r)]) << " (n=" << n_max
       << ")</text>\n";
    for (int t = 0; t < turns; ++t) {
      const auto& c = m.cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(t)];
      const int x = kLabelW + t * kCellW;
      const std::string fill = c.mean ? color_for((*c.mean - lo) / span) : "#dddddd";
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCellW
         << "\" height=\"" << kCellH << "\" fill=\"" << fill
         << "\" stroke=\"#ffffff\"/>\n";
      os << "<text x=\"" << x + kCellW / 2 << "\" y=\"" << y + kCellH / 2 + 4
         << "\" text-anchor=\"middle\">" << (c.mean ? fixed(*c.mean, 2) : "-")
         << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::map<std::string, std::string> render_report(
    const ReportAggregates& agg, const std::set<ReportFormat>& formats) {
  std::map<std::string, std::string> files;
  const int turns = agg.settings.turns;
  const std::string group(to_string(agg.settings.group_by));

  if (formats.contains(ReportFormat::kCsv)) {
    for (const auto& m : agg.by_group) {
      files[m.metric + "_by_" + group + ".csv"] = matrix_csv(m);
      files[m.metric + "_by_" + group + ".n.csv"] = matrix_n_csv(m);
    }
    for (const auto& m : agg.pooled) {
      files[m.metric + "_pooled.csv"] = matrix_csv(m);
      files[m.metric + "_pooled.n.csv"] = matrix_n_csv(m);
    }
    files["coverage.csv"] = coverage_csv(agg.coverage, turns);
    files["run_summary.csv"] = summary_csv(agg.run_summaries);
  }
  if (formats.contains(ReportFormat::kSvg)) {
    for (const auto& m : agg.by_group) {
      auto [lo, hi] = svg_range(m);
      files[m.metric + "_by_" + group + ".svg"] = matrix_svg(m, lo, hi);
    }
  }
  if (formats.contains(ReportFormat::kJson)) {
    Json j;
    j["settings"] = agg.settings;
    j["by_group"] = Json::array();
    for (const auto& m : agg.by_group) j["by_group"].push_back(matrix_json(m));
    j["pooled"] = Json::array();
    for (const auto& m : agg.pooled) j["pooled"].push_back(matrix_json(m));
    j["coverage"] = Json::array();
    for (const auto& c : agg.coverage) {
      j["coverage"].push_back({{"label", c.label},
                               {"n_tasks", c.n_tasks},
                               {"fraction", c.fraction},
                               {"solved", c.solved}});
    }
    j["run_summaries"] = Json::array();
    for (const auto& row : agg.run_summaries) {
      const auto& s = row.summary;
      j["run_summaries"].push_back(
          {{"run_id", row.keys.run_id},
           {"task_id", row.keys.task_id},
           {"model_id", row.keys.model_id},
           {"technique_id", row.keys.technique_id},
           {"pass_count", s.pass_count},
           {"pass_rate", s.pass_rate},
           {"first_success_turn",
            s.first_success_turn ? Json(*s.first_success_turn) : Json(nullptr)},
           {"failing_turns", s.failing_turns}});
    }
    files["aggregates.json"] = j.dump(2) + "\n";
  }
  return files;
}

namespace {

Json formats_json(const std::set<ReportFormat>& formats) {
  Json arr = Json::array();
  for (auto f : formats) {
    arr.push_back(f == ReportFormat::kCsv ? "csv" : f == ReportFormat::kJson ? "json" : "svg");
  }
  return arr;
}

}  // namespace

std::vector<ManifestEntry> emit_report(const ReportAggregates& agg,
                                       const fs::path& out_dir,
                                       const std::set<ReportFormat>& formats) {
  fs::create_directories(out_dir);
  std::vector<ManifestEntry> manifest;
  for (const auto& [name, contents] : render_report(agg, formats)) {
    write_file_atomic(out_dir / name, contents);
    manifest.push_back({name, sha256_hex(contents)});
  }
  Json files = Json::array();
  for (const auto& e : manifest) files.push_back({{"file", e.file}, {"sha256", e.sha256}});
  Json doc{{"settings", agg.settings}, {"formats", formats_json(formats)}, {"files", files}};
  write_file_atomic(out_dir / "manifest.json", doc.dump(2) + "\n");
  return manifest;
}

std::vector<RunBundle> load_bundles(const fs::path& output_dir) {
  std::vector<RunBundle> bundles;
  for (const auto& run : load_all_runs(output_dir)) {
    RunBundle b = bundle_of(run);
    const auto dir = run_dir(output_dir, run.run_id);
    std::error_code ec;
    if (fs::exists(dir / "eval.json", ec)) {
      b.eval = Json::parse(read_file(dir / "eval.json")).get<EvalSeries>();
    }
    if (fs::exists(dir / "metrics.json", ec)) {
      b.metrics = Json::parse(read_file(dir / "metrics.json")).get<MetricSeries>();
    }
    bundles.push_back(std::move(b));
  }
  return bundles;
}

std::vector<std::string> verify_report(const fs::path& output_dir,
                                       const fs::path& report_dir) {
  std::vector<std::string> problems;
  Json manifest;
  try {
    manifest = Json::parse(read_file(report_dir / "manifest.json"));
  } catch (const std::exception& e) {
    return {std::string("cannot read manifest: ") + e.what()};
  }
  const auto settings = manifest.value("settings", Json::object()).get<ReportSettings>();
  std::set<ReportFormat> formats;
  for (const auto& f : manifest.value("formats", Json::array())) {
    auto parsed = parse_formats(f.get<std::string>());
    formats.insert(parsed.begin(), parsed.end());
  }

  const auto bundles = load_bundles(output_dir);
  const auto expected = render_report(build_aggregates(bundles, settings), formats);

  std::map<std::string, std::string> listed;
  for (const auto& e : manifest.value("files", Json::array())) {
    listed[e.at("file").get<std::string>()] = e.at("sha256").get<std::string>();
  }
  for (const auto& [name, contents] : expected) {
    const std::string hash = sha256_hex(contents);
    auto it = listed.find(name);
    if (it == listed.end()) {
      problems.push_back(name + ": missing from manifest");
    } else if (it->second != hash) {
      problems.push_back(name + ": manifest hash differs from recomputation");
    }
    std::error_code ec;
    if (!fs::exists(report_dir / name, ec)) {
      problems.push_back(name + ": file missing");
    } else if (sha256_hex(read_file(report_dir / name)) != hash) {
      problems.push_back(name + ": file content differs from recomputation");
    }
  }
  for (const auto& [name, hash] : listed) {
    if (!expected.contains(name)) problems.push_back(name + ": not produced by recomputation");
  }
  return problems;
}

}  // namespace iterlab
