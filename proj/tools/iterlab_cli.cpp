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

// iterlab: command-line driver for the refinement harness.
//
//   iterlab [--config FILE] ingest   --input tasks.jsonl [--domain D] ...
//   iterlab [--config FILE] run      --plan plan.json --out DIR [--workers N] [--mock]
//   iterlab [--config FILE] metrics  --out DIR [--mock]
//   iterlab [--config FILE] evaluate --out DIR [--tasks FILE] [--mock]
//   iterlab [--config FILE] report   --out DIR [--report-dir DIR] ...
//   iterlab validate      --out DIR
//   iterlab verify-report --out DIR [--report-dir DIR]

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iterlab/config.hpp"
#include "iterlab/errors.hpp"
#include "iterlab/evaluators.hpp"
#include "iterlab/gateway.hpp"
#include "iterlab/metrics.hpp"
#include "iterlab/mocks.hpp"
#include "iterlab/report.hpp"
#include "iterlab/runner.hpp"
#include "iterlab/tasks.hpp"
#include "iterlab/util.hpp"
#include "iterlab/validate.hpp"

namespace fs = std::filesystem;
using namespace iterlab;

namespace {

void log_line(const std::string& msg) { std::cerr << "iterlab: " << msg << "\n"; }

std::optional<Domain> optional_domain(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_domain(s);
}

fs::path tasks_store(const fs::path& out) { return out / "tasks.jsonl"; }

// Keeps every task a run may later be evaluated against.
void record_tasks(const fs::path& out, const std::vector<TaskSpec>& tasks) {
  std::map<std::string, TaskSpec> merged;
  if (fs::exists(tasks_store(out))) {
    for (auto& t : parse_tasks(read_file(tasks_store(out)))) merged[t.task_id] = t;
  }
  for (const auto& t : tasks) merged[t.task_id] = t;
  std::vector<TaskSpec> all;
  for (auto& [id, t] : merged) all.push_back(std::move(t));
  write_file_atomic(tasks_store(out), tasks_to_jsonl(all));
}

struct Providers {
  std::unique_ptr<HttpTransport> transport = make_http_transport();
  SystemClock clock;
};

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string input;
  std::string domain;
  std::optional<double> min_difficulty;
  std::optional<std::size_t> sample;
  std::uint64_t seed = 0;
  std::string output;
};

int cmd_ingest(const IngestArgs& a) {
  TaskFilter filter;
  filter.min_difficulty = a.min_difficulty;
  filter.sample_n = a.sample;
  filter.seed = a.seed;
  const auto tasks = load_tasks(a.input, optional_domain(a.domain), filter);
  const std::string jsonl = tasks_to_jsonl(tasks);
  if (a.output.empty()) {
    std::cout << jsonl;
  } else {
    write_file_atomic(a.output, jsonl);
  }
  log_line("ingested " + std::to_string(tasks.size()) + " tasks");
  return 0;
}

// ---------------------------------------------------------------- run

struct RunArgs {
  std::string plan;
  std::string out;
  std::optional<int> workers;
  bool mock = false;
};

int cmd_run(const RunArgs& a, const HarnessConfig& config) {
  ExperimentPlan plan = load_plan(a.plan);
  plan.output_dir = a.out;
  validate_plan(plan);

  std::unique_ptr<ChatBackend> backend;
  Providers net;
  if (a.mock) {
    backend = std::make_unique<MockChatBackend>(MockChatBackend::deterministic());
  } else {
    auto router = std::make_unique<ModelRouter>();
    for (const auto& p : config.providers) {
      router->add(std::make_unique<ChatClient>(p, *net.transport, net.clock, config.retry));
    }
    for (const auto& m : plan.model_ids) {
      if (!router->has(m)) throw PlanInvalid("no provider configured for model " + m);
    }
    backend = std::move(router);
  }

  fs::create_directories(plan.output_dir);
  record_tasks(plan.output_dir, plan.tasks);

  RunnerOptions options;
  options.workers = a.workers.value_or(config.workers);
  options.on_run = [](const ConversationRun& run, bool skipped) {
    std::string line = run.run_id + " " + run.task_id + " " + run.model_id + " " +
                       run.technique_id + " " + std::string(to_string(run.status));
    if (skipped) line += " (existing)";
    if (run.failure) line += " failure: " + *run.failure;
    log_line(line);
  };
  const RunSetSummary s = run_experiment(plan, *backend, options);
  std::cout << Json{{"total", s.total},
                    {"completed", s.completed},
                    {"skipped_existing", s.skipped_existing},
                    {"failed", s.failed}}
                   .dump()
            << "\n";
  return s.failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------- metrics

std::map<std::string, TaskSpec> tasks_by_id(const fs::path& file) {
  std::map<std::string, TaskSpec> out;
  if (!fs::exists(file)) return out;
  for (auto& t : parse_tasks(read_file(file))) out[t.task_id] = std::move(t);
  return out;
}

std::optional<Domain> domain_of(const ConversationRun& run,
                                const std::map<std::string, TaskSpec>& tasks) {
  if (run.domain) return run.domain;
  if (auto it = tasks.find(run.task_id); it != tasks.end()) return it->second.domain;
  return std::nullopt;
}

struct StoreArgs {
  std::string out;
  std::string tasks;
  bool mock = false;
};

int cmd_metrics(const StoreArgs& a, const HarnessConfig& config) {
  Providers net;
  std::unique_ptr<Embedder> embedder;
  if (a.mock) {
    embedder = std::make_unique<HashingEmbedder>();
  } else {
    if (!config.embedding) throw PreconditionError("config has no embedding provider");
    embedder = std::make_unique<EmbeddingClient>(*config.embedding, *net.transport,
                                                 net.clock, config.retry);
  }
  const auto tasks = tasks_by_id(tasks_store(a.out));

  std::vector<MetricSeries> all;
  int problems = 0;
  for (const auto& run : load_all_runs(a.out)) {
    const auto domain = domain_of(run, tasks);
    if (!domain) {
      log_line(run.run_id + ": unknown domain, skipped");
      ++problems;
      continue;
    }
    if (run.turns.size() < 2) {
      log_line(run.run_id + ": fewer than two turns, skipped");
      continue;
    }
    std::vector<std::string> texts;
    for (const auto& t : run.turns) texts.push_back(t.response_text);
    try {
      const auto embeddings = embed_all(*embedder, texts);
      MetricSeries m = compute_metrics(run, *domain, embeddings);
      write_file_atomic(run_dir(a.out, run.run_id) / "metrics.json", Json(m).dump(2) + "\n");
      all.push_back(std::move(m));
    } catch (const Error& e) {
      log_line(run.run_id + ": " + e.what());
      ++problems;
    }
  }
  write_file_atomic(fs::path(a.out) / "metrics.csv", metrics_csv(all));
  log_line("metrics written for " + std::to_string(all.size()) + " runs");
  return problems == 0 ? 0 : 1;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const StoreArgs& a, const HarnessConfig& config) {
  Providers net;
  const auto tasks = tasks_by_id(a.tasks.empty() ? tasks_store(a.out) : fs::path(a.tasks));

  std::unique_ptr<Judge> judge;
  if (a.mock) {
    judge = std::make_unique<MockJudge>();
  } else if (config.judge) {
    judge = std::make_unique<JudgeClient>(*config.judge, *net.transport, net.clock,
                                          config.retry);
  }
  std::unique_ptr<SandboxExecutor> sandbox;
  if (!config.sandbox.command.empty()) {
    sandbox = std::make_unique<SubprocessSandbox>(
        config.sandbox.command, std::chrono::seconds(config.sandbox.grace_s));
  }
  CorrectnessCache cache(fs::path(a.out) / "cache" / "sandbox");

  int evaluated = 0;
  int problems = 0;
  for (const auto& run : load_all_runs(a.out)) {
    auto it = tasks.find(run.task_id);
    if (it == tasks.end()) {
      log_line(run.run_id + ": task " + run.task_id + " not found, skipped");
      ++problems;
      continue;
    }
    Archive archive(run_dir(a.out, run.run_id) / "judge");
    EvaluatorDeps deps;
    deps.judge = judge.get();
    deps.sandbox = sandbox.get();
    deps.cache = &cache;
    deps.archive = &archive;
    deps.limits = config.sandbox.limits;
    deps.sandbox_workers = config.sandbox.workers;
    const EvalSeries eval = evaluate_run(run, it->second, deps);
    for (const auto& e : eval.per_turn) {
      if (e.eval_error) {
        ++problems;
        break;
      }
    }
    write_file_atomic(run_dir(a.out, run.run_id) / "eval.json", Json(eval).dump(2) + "\n");
    ++evaluated;
  }
  log_line("evaluated " + std::to_string(evaluated) + " runs, " +
           std::to_string(problems) + " with errors");
  return problems == 0 ? 0 : 1;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string out;
  std::string report_dir;
  std::string formats = "csv,json,svg";
  std::string group_by = "technique";
  std::string domain;
  std::string model;
  int turns = kDefaultTurns;
};

fs::path report_dir_of(const std::string& out, const std::string& report_dir) {
  return report_dir.empty() ? fs::path(out) / "report" : fs::path(report_dir);
}

int cmd_report(const ReportArgs& a) {
  ReportSettings settings;
  settings.group_by = parse_group_by(a.group_by);
  settings.turns = a.turns;
  settings.domain = optional_domain(a.domain);
  if (!a.model.empty()) settings.model_id = a.model;

  const auto bundles = load_bundles(a.out);
  const auto agg = build_aggregates(bundles, settings);
  const auto dir = report_dir_of(a.out, a.report_dir);
  const auto manifest = emit_report(agg, dir, parse_formats(a.formats));
  for (const auto& e : manifest) std::cout << e.sha256 << "  " << e.file << "\n";
  log_line("report for " + std::to_string(bundles.size()) + " runs in " + dir.string());
  return 0;
}

int cmd_verify_report(const std::string& out, const std::string& report_dir) {
  const auto problems = verify_report(out, report_dir_of(out, report_dir));
  for (const auto& p : problems) std::cout << p << "\n";
  if (problems.empty()) std::cout << "report verified\n";
  return problems.empty() ? 0 : 1;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const std::string& out) {
  int bad = 0;
  const auto runs = load_all_runs(out);
  for (const auto& run : runs) {
    auto report = validate_run(run);
    const auto archive = validate_archive(run, run_dir(out, run.run_id) / "raw");
    report.insert(report.end(), archive.begin(), archive.end());
    for (const auto& v : report) std::cout << run.run_id << ": " << describe(v) << "\n";
    if (!report.empty()) ++bad;
  }
  std::cout << runs.size() << " runs checked, " << bad << " with violations\n";
  return bad == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iterlab: iterative-refinement evaluation harness"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "Harness config JSON")->check(CLI::ExistingFile);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Validate, filter and sample a task file");
  c_ingest->add_option("--input", ingest.input, "Task JSONL")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--domain", ingest.domain, "IDEAS, MATH or CODING");
  c_ingest->add_option("--min-difficulty", ingest.min_difficulty, "Keep difficulty > value");
  c_ingest->add_option("--sample", ingest.sample, "Keep N tasks");
  c_ingest->add_option("--seed", ingest.seed, "Sampling seed");
  c_ingest->add_option("--output", ingest.output, "Output JSONL (stdout if omitted)");

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Execute an experiment plan");
  c_run->add_option("--plan", run.plan, "Plan JSON")->required()->check(CLI::ExistingFile);
  c_run->add_option("--out", run.out, "Output directory")->required();
  c_run->add_option("--workers", run.workers, "Concurrent conversations")
      ->check(CLI::PositiveNumber);
  c_run->add_flag("--mock", run.mock, "Use the offline deterministic model");

  StoreArgs metrics;
  auto* c_metrics = app.add_subcommand("metrics", "Compute drift, volatility, novelty, growth");
  c_metrics->add_option("--out", metrics.out, "Output directory")->required();
  c_metrics->add_flag("--mock", metrics.mock, "Use the offline hashing embedder");

  StoreArgs evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "Correctness and judge scores per turn");
  c_eval->add_option("--out", evaluate.out, "Output directory")->required();
  c_eval->add_option("--tasks", evaluate.tasks, "Task JSONL (default <out>/tasks.jsonl)");
  c_eval->add_flag("--mock", evaluate.mock, "Use the offline judge");

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Aggregate into CSV, JSON and SVG");
  c_report->add_option("--out", report.out, "Output directory")->required();
  c_report->add_option("--report-dir", report.report_dir, "Default <out>/report");
  c_report->add_option("--formats", report.formats, "Comma list of csv,json,svg");
  c_report->add_option("--group-by", report.group_by, "technique, model, task, domain, none");
  c_report->add_option("--domain", report.domain, "Only runs of this domain");
  c_report->add_option("--model", report.model, "Only runs of this model");
  c_report->add_option("--turns", report.turns, "Turn columns")->check(CLI::PositiveNumber);

  std::string validate_out;
  auto* c_validate = app.add_subcommand("validate", "Check stored runs and archives");
  c_validate->add_option("--out", validate_out, "Output directory")->required();

  std::string verify_out, verify_dir;
  auto* c_verify = app.add_subcommand("verify-report", "Recompute a report and diff it");
  c_verify->add_option("--out", verify_out, "Output directory")->required();
  c_verify->add_option("--report-dir", verify_dir, "Default <out>/report");

  CLI11_PARSE(app, argc, argv);

  try {
    const HarnessConfig config =
        load_config(config_path.empty() ? std::nullopt
                                        : std::optional<fs::path>(config_path));
    if (*c_ingest) return cmd_ingest(ingest);
    if (*c_run) return cmd_run(run, config);
    if (*c_metrics) return cmd_metrics(metrics, config);
    if (*c_eval) return cmd_evaluate(evaluate, config);
    if (*c_report) return cmd_report(report);
    if (*c_validate) return cmd_validate(validate_out);
    if (*c_verify) return cmd_verify_report(verify_out, verify_dir);
  } catch (const SchemaError& e) {
    log_line(std::string("schema error: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    log_line(std::string("error: ") + e.what());
    return 1;
  }
  return 0;
}
