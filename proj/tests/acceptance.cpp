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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Needs no network and no sandbox shim.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>

#include "iterlab/errors.hpp"
#include "iterlab/evaluators.hpp"
#include "iterlab/metrics.hpp"
#include "iterlab/mocks.hpp"
#include "iterlab/prompts.hpp"
#include "iterlab/report.hpp"
#include "iterlab/runner.hpp"
#include "iterlab/util.hpp"

namespace fs = std::filesystem;
using namespace iterlab;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("iterlab-accept-" + tag + "-" +
                                           std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// ------------------------------------------------------------------ 1

using BigFloat = boost::multiprecision::cpp_bin_float_50;

double oracle_cosine_distance(const std::vector<double>& u, const std::vector<double>& v) {
  BigFloat dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += BigFloat(u[i]) * BigFloat(v[i]);
    nu += BigFloat(u[i]) * BigFloat(u[i]);
    nv += BigFloat(v[i]) * BigFloat(v[i]);
  }
  BigFloat c = dot / (boost::multiprecision::sqrt(nu) * boost::multiprecision::sqrt(nv));
  return static_cast<double>(BigFloat(1) - c);
}

Outcome metric_kernel_oracle() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim_dist(2, 1024);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const int dim = dim_dist(rng);
    std::vector<double> u(dim), v(dim);
    for (auto& x : u) x = val(rng);
    for (auto& x : v) x = val(rng);
    worst = std::max(worst, std::abs(cosine_distance(u, v) - oracle_cosine_distance(u, v)));
    o.check(cosine_distance(u, u) == 0.0, "identity pair not exactly 0 at dim " + std::to_string(dim));
  }
  const double elapsed = seconds_since(start);
  o.check(worst <= 1e-12, "max abs error " + std::to_string(worst));
  o.check(elapsed < 10.0, "took " + std::to_string(elapsed) + "s");
  if (o.pass) o.detail = "10000 pairs, max err " + format_double(worst) + ", " + std::to_string(elapsed) + "s";
  return o;
}

// ------------------------------------------------------------------ 2

using Gram = std::vector<std::string>;

std::set<Gram> naive_grams(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> w{std::istream_iterator<std::string>(in), {}};
  std::set<Gram> out;
  for (std::size_t n = 2; n <= 3; ++n) {
    for (std::size_t i = 0; i + n <= w.size(); ++i) out.insert(Gram(w.begin() + i, w.begin() + i + n));
  }
  return out;
}

double naive_novelty(const std::string& text, const std::vector<std::string>& priors) {
  const auto grams = naive_grams(text);
  if (grams.empty()) return 0.0;
  std::set<Gram> seen;
  for (const auto& p : priors) {
    const auto g = naive_grams(p);
    seen.insert(g.begin(), g.end());
  }
  std::size_t fresh = 0;
  for (const auto& g : grams) fresh += seen.contains(g) ? 0 : 1;
  return static_cast<double>(fresh) / static_cast<double>(grams.size());
}

Outcome lexical_novelty_oracle() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(202);
  auto text = [&] {
    const std::size_t vocab = 1 + rng() % 20;
    const std::size_t len = rng() % 61;
    std::string s;
    for (std::size_t i = 0; i < len; ++i) {
      if (i) s += " ";
      s += "tok" + std::to_string(rng() % vocab);
    }
    return s;
  };
  for (int i = 0; i < 1000; ++i) {
    const std::string t = text();
    std::vector<std::string> priors;
    const std::size_t n = rng() % 6;
    for (std::size_t k = 0; k < n; ++k) priors.push_back(text());
    o.check(lexical_novelty(t, priors) == naive_novelty(t, priors), "mismatch on text " + std::to_string(i));
  }
  const double elapsed = seconds_since(start);
  o.check(elapsed < 30.0, "took " + std::to_string(elapsed) + "s");
  if (o.pass) o.detail = "1000 texts exact, " + std::to_string(elapsed) + "s";
  return o;
}

// ------------------------------------------------------------------ 3

double plain_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

Outcome formula_fixtures() {
  Outcome o;
  const Json doc = Json::parse(read_file(fs::path(ITERLAB_DATA_DIR) / "embeddings12.json"));
  const auto raw = doc.at("embeddings").get<std::vector<std::vector<double>>>();
  std::vector<EmbeddingVector> embs;
  for (const auto& v : raw) embs.push_back(make_embedding(v, "fixture"));
  const auto drift = drift_from_origin(embs);
  const auto vol = turn_to_turn_volatility(embs);
  o.check(drift.size() == 11 && vol.size() == 11, "series lengths");
  if (!o.pass) return o;
  for (std::size_t t = 1; t < 12; ++t) {
    o.check(std::abs(drift[t - 1] - (1.0 - plain_cosine(raw[0], raw[t]))) <= 1e-12,
            "drift at turn " + std::to_string(t + 1));
    o.check(std::abs(vol[t - 1] - (1.0 - plain_cosine(raw[t - 1], raw[t]))) <= 1e-12,
            "volatility at turn " + std::to_string(t + 1));
  }
  o.check(drift[0] == vol[0], "drift and volatility differ at t=2");
  if (o.pass) o.detail = "12 embeddings, drift(2) == volatility(2)";
  return o;
}

// ------------------------------------------------------------------ 4

std::string words(int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += i ? " w" : "w";
  return s;
}

Outcome growth_factor() {
  Outcome o;
  const std::vector<std::string> three = {words(100), words(250), words(400)};
  const auto g = growth_factor_series(three, Domain::kIdeas);
  o.check(g.factors.size() == 3 && g.factors[0] == 1.0 && g.factors[1] == 2.5 && g.factors[2] == 4.0,
          "[100,250,400] did not give [1,2.5,4]");
  std::vector<std::string> twelve;
  for (int t = 1; t <= 12; ++t) twelve.push_back(words(t == 12 ? 16 * 50 : 50 + 60 * (t - 1)));
  const auto g12 = growth_factor_series(twelve, Domain::kIdeas);
  o.check(g12.factors.size() == 12 && g12.factors[11] == 16.0, "16x fixture did not give f[12]=16");
  if (o.pass) o.detail = "[1, 2.5, 4] and f[12]=16";
  return o;
}

// ------------------------------------------------------------------ 5

TaskSpec ideas_task(const std::string& id, const std::string& keywords) {
  TaskSpec t;
  t.task_id = id;
  t.domain = Domain::kIdeas;
  t.keywords = keywords;
  return t;
}

Outcome protocol_conformance() {
  Outcome o;
  const auto start = Clock::now();
  ScratchDir dir("protocol");
  ExperimentPlan plan;
  plan.tasks = {ideas_task("IDEAS-001", "ocean currents"), ideas_task("IDEAS-002", "urban farming")};
  plan.model_ids = {"mock-model"};
  plan.techniques = {"v1_improve", "s1_novel"};
  plan.output_dir = dir.path();
  MockChatBackend backend(MockChatBackend::deterministic());
  const auto first = run_experiment(plan, backend);
  o.check(first.total == 4 && first.completed == 4 && first.failed == 0, "first pass did not complete 4 runs");

  const auto runs = load_all_runs(dir.path());
  o.check(runs.size() == 4, "expected 4 stored runs");
  for (const auto& run : runs) {
    o.check(run.turns.size() == 12 && run.status == RunStatus::kComplete, run.run_id + " is not 12 complete turns");
    const auto raw = run_dir(dir.path(), run.run_id) / "raw";
    for (std::size_t t = 2; t <= run.turns.size(); ++t) {
      const Json req = Json::parse(read_file(raw / (std::to_string(t) + ".request.json")));
      const Json& msgs = req.at("messages");
      const bool ok = msgs.size() == 1 && msgs[0].at("role") == "user" &&
                      msgs[0].at("content").get<std::string>().find(run.turns[t - 2].response_text) !=
                          std::string::npos;
      o.check(ok, run.run_id + " turn " + std::to_string(t) + " request is not memoryless");
    }
  }
  const auto calls = backend.call_count();
  const auto second = run_experiment(plan, backend);
  o.check(second.skipped_existing == 4 && second.completed == 0, "rerun did not skip all 4");
  o.check(backend.call_count() == calls, "rerun called the model");
  const double elapsed = seconds_since(start);
  o.check(elapsed < 5.0, "took " + std::to_string(elapsed) + "s");
  if (o.pass) o.detail = "4 runs x 12 turns, resume skipped 4, " + std::to_string(elapsed) + "s";
  return o;
}

// ------------------------------------------------------------------ 6

std::string golden(const std::string& name) { return read_file(fs::path(ITERLAB_GOLDEN_DIR) / name); }

Outcome template_goldens() {
  Outcome o;
  const std::string previous = "Draft answer.\n  Indented line with {braces} and $x^2$.\n";
  int compared = 0;
  for (const auto& tech : all_techniques()) {
    for (Domain d : {Domain::kIdeas, Domain::kMath, Domain::kCoding}) {
      RenderedPrompt r;
      try {
        r = render_iteration_prompt(previous, tech, d);
      } catch (const TechniqueDomainMismatch&) {
        continue;
      }
      const std::string name = "iter_" + tech.technique_id + "_" + std::string(to_string(d)) + ".txt";
      std::string lower = name;
      for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      o.check(r.text == golden(lower), lower + " differs");
      ++compared;
    }
  }
  o.check(compared == 15, "expected 15 iteration goldens, compared " + std::to_string(compared));

  TaskSpec ideas = ideas_task("IDEAS-004", "ocean currents");
  o.check(render_initial_prompt(ideas).text == golden("turn1_ideas.txt"), "turn1_ideas differs");
  TaskSpec math;
  math.task_id = "MATH-1";
  math.domain = Domain::kMath;
  math.problem = "Find all integers n such that n^2 = 4.";
  math.ground_truth_solution = "n = 2 or n = -2";
  math.ground_truth_answer = "\\pm 2";
  o.check(render_initial_prompt(math).text == golden("turn1_math.txt"), "turn1_math differs");
  TaskSpec code;
  code.task_id = "CODE-1";
  code.domain = Domain::kCoding;
  code.library = "Pandas";
  code.code_context = "import pandas as pd\ndf = pd.DataFrame({\"a\": [1, 2]})\n[insert]\nprint(result)";
  code.prompt = "Sum column a into result.";
  o.check(render_initial_prompt(code).text == golden("turn1_coding.txt"), "turn1_coding differs");
  if (o.pass) o.detail = "9 techniques over 15 domain pairings plus 3 turn-1 prompts";
  return o;
}

// ------------------------------------------------------------------ 7

using Reason = MalformedJudgeOutput::Reason;

std::string grader_payload(int n, int soundness = 4) {
  Json evals = Json::array();
  for (int t = 1; t <= n; ++t) {
    evals.push_back({{"turn", t}, {"answer_correctness", t % 2}, {"reasoning_soundness", soundness}});
  }
  return Json{{"evaluations", evals}}.dump(2);
}

std::optional<Reason> reason_of(const std::string& raw, const std::set<std::string>& keys) {
  try {
    parse_judge_payload(raw, 12, keys);
  } catch (const MalformedJudgeOutput& e) {
    return e.reason();
  }
  return std::nullopt;
}

Outcome judge_parsing() {
  Outcome o;
  const std::set<std::string> keys = {"turn", "answer_correctness", "reasoning_soundness"};
  o.check(!reason_of(grader_payload(12), keys), "well-formed payload rejected");
  o.check(!reason_of("```json\n" + grader_payload(12) + "\n```", keys), "fenced payload rejected");
  o.check(!reason_of("Here are my scores.\n```json\n" + grader_payload(12) + "\n```\nThanks.", keys),
          "prose-wrapped fenced payload rejected");
  o.check(reason_of(grader_payload(11), keys) == Reason::kWrongCount, "11 entries not wrong-count");
  o.check(reason_of(grader_payload(12, 11), keys) == Reason::kOutOfRange, "soundness 11 not out-of-range");
  o.check(reason_of("I think it is fine.", keys) == Reason::kBadJson, "bare prose not bad-json");

  std::mt19937_64 rng(707);
  const std::string alphabet = "{}[]\":,0123456789 abcdeflnrstu`\n\\-.evaluationsturn";
  const std::string seed = grader_payload(12);
  int escaped = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    if (i % 2 == 0) {
      const std::size_t len = rng() % 200;
      for (std::size_t k = 0; k < len; ++k) s += static_cast<char>(rng() % 256);
    } else {
      s = seed;
      const int edits = 1 + static_cast<int>(rng() % 6);
      for (int e = 0; e < edits && !s.empty(); ++e) {
        s[rng() % s.size()] = alphabet[rng() % alphabet.size()];
      }
    }
    try {
      parse_judge_payload(s, 12, keys);
    } catch (const MalformedJudgeOutput&) {
    } catch (...) {
      ++escaped;
    }
  }
  o.check(escaped == 0, std::to_string(escaped) + " fuzz inputs escaped with untyped errors");
  if (o.pass) o.detail = "6 fixtures, 10000 fuzz inputs";
  return o;
}

// ------------------------------------------------------------------ 8

RunBundle correctness_bundle(const std::string& id, const std::string& task,
                             const std::vector<int>& series) {
  RunBundle b{id, task, "m", "v1_improve", Domain::kMath, std::nullopt, std::nullopt};
  EvalSeries e;
  e.run_id = id;
  for (int c : series) {
    TurnEval te;
    te.correctness = c;
    e.per_turn.push_back(te);
  }
  b.eval = e;
  return b;
}

Outcome aggregation_tables() {
  Outcome o;
  const std::vector<int> code013 = {1, 1, 1, 1, 0, 0, 1, 1, 1, 1, 1, 1};
  const auto c = summarize_correctness(code013);
  o.check(c.pass_count == 10 && c.pass_rate == 10.0 / 12.0 && c.first_success_turn == 1 &&
              c.failing_turns == std::vector<int>{5, 6},
          "CODE-013 summary");
  const std::vector<int> math003 = {0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  const auto m = summarize_correctness(math003);
  o.check(m.pass_count == 4 && m.first_success_turn == 3, "MATH-003 summary");

  std::vector<RunBundle> runs;
  for (int i = 0; i < 50; ++i) {
    std::vector<int> s(12, 0);
    if (i < 46) s[static_cast<std::size_t>(i % 12)] = 1;
    runs.push_back(correctness_bundle("r" + std::to_string(i), "MATH-" + std::to_string(i), s));
  }
  const auto cov = cumulative_coverage(runs);
  o.check(cov.n_tasks == 50 && cov.solved.back() == 46 && cov.fraction.back() == 0.92,
          "coverage at T12 is not 0.92");
  if (o.pass) o.detail = "10/12 first 1 failing {5,6}; 4/12 first 3; coverage 0.92";
  return o;
}

// ------------------------------------------------------------------ 9

int cli(const std::string& args) {
  const std::string cmd = std::string(ITERLAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::map<std::string, std::string> file_hashes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) out[e.path().filename().string()] = sha256_hex(read_file(e.path()));
  }
  return out;
}

Outcome deterministic_reports() {
  Outcome o;
  ScratchDir dir("report");
  const auto store = dir.path() / "store";
  TaskSpec math;
  math.task_id = "MATH-003";
  math.domain = Domain::kMath;
  math.problem = "What is 2+2?";
  math.ground_truth_solution = "2+2=4";
  math.ground_truth_answer = "4";
  Json plan = {{"tasks", Json::array({Json(ideas_task("IDEAS-004", "ocean currents")), Json(math)})},
               {"model_ids", {"mock-model"}},
               {"techniques", {"v1_improve", "v3_refine"}},
               {"output_dir", store.string()}};
  write_file_atomic(dir.path() / "plan.json", plan.dump(2));
  const std::string s = store.string();
  const std::string plan_arg = (dir.path() / "plan.json").string();
  o.check(cli("run --plan " + plan_arg + " --out " + s + " --mock --workers 2") == 0, "run failed");
  o.check(cli("metrics --out " + s + " --mock") == 0, "metrics failed");
  o.check(cli("evaluate --out " + s + " --mock") == 0, "evaluate failed");
  const auto a = dir.path() / "report-a";
  const auto b = dir.path() / "report-b";
  o.check(cli("report --out " + s + " --report-dir " + a.string()) == 0, "first report failed");
  o.check(cli("report --out " + s + " --report-dir " + b.string()) == 0, "second report failed");
  if (!o.pass) return o;
  const auto ha = file_hashes(a);
  o.check(ha.size() > 5, "report has too few files");
  o.check(ha == file_hashes(b), "reports differ between runs");
  o.check(cli("verify-report --out " + s + " --report-dir " + a.string()) == 0, "verify-report failed");
  if (o.pass) o.detail = std::to_string(ha.size()) + " files identical across runs, verified";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric-kernel-oracle", metric_kernel_oracle},
      {"lexical-novelty-oracle", lexical_novelty_oracle},
      {"formula-fixtures", formula_fixtures},
      {"growth-factor", growth_factor},
      {"protocol-conformance", protocol_conformance},
      {"template-goldens", template_goldens},
      {"judge-parsing", judge_parsing},
      {"aggregation-tables", aggregation_tables},
      {"deterministic-reports", deterministic_reports},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    failures += o.pass ? 0 : 1;
  }
  std::printf("SKIP code-domain sandbox correctness: covered by unit tests when ITERLAB_SANDBOX_CMD is set\n");
  return failures == 0 ? 0 : 1;
}
