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

#include "iterlab/evaluators.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <thread>

#include "iterlab/errors.hpp"
#include "iterlab/prompts.hpp"
#include "iterlab/util.hpp"

namespace iterlab {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (true) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_fence(std::string_view line) {
  auto t = line;
  while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.remove_prefix(1);
  return t.starts_with("```");
}

bool looks_like_code(std::string_view text) {
  if (trim(text).empty()) return false;
  bool has_code_line = false;
  for (auto line : split_lines(text)) {
    auto t = trim(line);
    if (t.ends_with(':') || t.find('=') != std::string_view::npos) {
      has_code_line = true;
    }
  }
  if (!has_code_line) return false;

  std::size_t run = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool next_is_break =
        i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]));
    if (c == '\n' || ((c == '.' || c == '!' || c == '?') && next_is_break)) {
      run = 0;
    } else if (++run > 200) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::optional<std::string> last_fenced_block(std::string_view text) {
  std::optional<std::string> last;
  std::optional<std::string> open;
  bool first_line = true;
  for (auto line : split_lines(text)) {
    if (is_fence(line)) {
      if (open) {
        last = std::move(*open);
        open.reset();
      } else {
        open.emplace();
        first_line = true;
      }
      continue;
    }
    if (open) {
      if (!first_line) *open += '\n';
      *open += line;
      first_line = false;
    }
  }
  if (open) last = std::move(*open);
  return last;
}

std::optional<std::string> extract_code(std::string_view response_text) {
  if (auto block = last_fenced_block(response_text)) return block;
  if (looks_like_code(response_text)) return std::string(response_text);
  return std::nullopt;
}

std::string_view to_string(ErrorType e) {
  switch (e) {
    case ErrorType::kAssertion: return "assertion";
    case ErrorType::kException: return "exception";
    case ErrorType::kCompile: return "compile";
    case ErrorType::kTimeout: return "timeout";
    case ErrorType::kNoCode: return "no_code";
    case ErrorType::kInfra: return "infra";
  }
  return "infra";
}

std::optional<ErrorType> parse_error_type(std::string_view s) {
  for (auto e : {ErrorType::kAssertion, ErrorType::kException, ErrorType::kCompile,
                 ErrorType::kTimeout, ErrorType::kNoCode, ErrorType::kInfra}) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

Json to_json_value(const SandboxJob& job) {
  return Json{{"code", job.code},
              {"code_context", job.code_context},
              {"timeout_s", job.timeout_s},
              {"mem_limit_mb", job.mem_limit_mb}};
}

SandboxVerdict parse_verdict(const Json& j) {
  if (!j.is_object() || !j.contains("passed")) {
    throw PreconditionError("verdict lacks 'passed'");
  }
  SandboxVerdict v;
  const Json& passed = j["passed"];
  if (passed.is_boolean()) {
    v.passed = passed.get<bool>() ? 1 : 0;
  } else if (passed.is_number_integer() &&
             (passed.get<int>() == 0 || passed.get<int>() == 1)) {
    v.passed = passed.get<int>();
  } else {
    throw PreconditionError("verdict 'passed' must be 0/1");
  }
  if (auto it = j.find("error_type"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw PreconditionError("verdict error_type not a string");
    v.error_type = parse_error_type(it->get<std::string>());
    if (!v.error_type) throw PreconditionError("unknown verdict error_type");
  }
  if (v.passed == 1 && v.error_type) {
    throw PreconditionError("passing verdict carries an error_type");
  }
  if (v.passed == 0 && !v.error_type) {
    throw PreconditionError("failing verdict lacks an error_type");
  }
  if (auto it = j.find("stderr_tail"); it != j.end() && it->is_string()) {
    v.stderr_tail = it->get<std::string>();
  }
  if (auto it = j.find("duration_ms"); it != j.end() && it->is_number()) {
    v.duration_ms = it->get<long long>();
  }
  return v;
}

void to_json(Json& j, const CorrectnessResult& v) {
  j = Json{{"turn_index", v.turn_index},
           {"passed", v.passed},
           {"error_type", v.error_type ? Json(to_string(*v.error_type)) : Json(nullptr)},
           {"stderr_tail", v.stderr_tail ? Json(*v.stderr_tail) : Json(nullptr)},
           {"duration_ms", v.duration_ms}};
}

void from_json(const Json& j, CorrectnessResult& v) {
  v.turn_index = j.at("turn_index").get<int>();
  v.passed = j.at("passed").get<int>();
  v.error_type.reset();
  if (j.contains("error_type") && j["error_type"].is_string()) {
    v.error_type = parse_error_type(j["error_type"].get<std::string>());
  }
  v.stderr_tail.reset();
  if (j.contains("stderr_tail") && j["stderr_tail"].is_string()) {
    v.stderr_tail = j["stderr_tail"].get<std::string>();
  }
  v.duration_ms = j.value("duration_ms", 0LL);
}

std::filesystem::path CorrectnessCache::path_for(std::string_view run_id,
                                                 int turn,
                                                 std::string_view code_hash) const {
  return dir_ / std::string(run_id) /
         (std::to_string(turn) + "-" + std::string(code_hash) + ".json");
}

std::optional<CorrectnessResult> CorrectnessCache::get(
    std::string_view run_id, int turn, std::string_view code_hash) const {
  std::lock_guard lock(mu_);
  auto p = path_for(run_id, turn, code_hash);
  if (!std::filesystem::exists(p)) return std::nullopt;
  auto j = Json::parse(read_file(p), nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j.get<CorrectnessResult>();
}

void CorrectnessCache::put(std::string_view run_id, int turn,
                           std::string_view code_hash,
                           const CorrectnessResult& result) {
  std::lock_guard lock(mu_);
  write_file_atomic(path_for(run_id, turn, code_hash), Json(result).dump());
}

std::vector<CorrectnessResult> eval_code_run(const ConversationRun& run,
                                             const TaskSpec& task,
                                             SandboxExecutor& sandbox,
                                             CorrectnessCache* cache,
                                             SandboxLimits limits, int workers) {
  if (task.domain != Domain::kCoding) {
    throw PreconditionError("eval_code_run needs a CODING task");
  }
  const std::size_t n = run.turns.size();
  std::vector<CorrectnessResult> results(n);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& turn = run.turns[i];
      CorrectnessResult& r = results[i];
      r.turn_index = turn.turn_index;
      auto code = extract_code(turn.response_text);
      if (!code) {
        r.passed = 0;
        r.error_type = ErrorType::kNoCode;
        continue;
      }
      const std::string hash = sha256_hex(*code);
      if (cache) {
        if (auto hit = cache->get(run.run_id, turn.turn_index, hash)) {
          r = *hit;
          continue;
        }
      }
      SandboxJob job{*code, task.code_context.value_or(""), limits.timeout_s,
                     limits.mem_limit_mb};
      SandboxVerdict v;
      try {
        v = sandbox.execute(job);
      } catch (const std::exception& e) {
        v = SandboxVerdict{0, ErrorType::kInfra, e.what(), 0};
      }
      r.passed = v.passed;
      r.error_type = v.error_type;
      if (!v.stderr_tail.empty()) r.stderr_tail = v.stderr_tail;
      r.duration_ms = v.duration_ms;
      if (cache && r.error_type != ErrorType::kInfra) {
        cache->put(run.run_id, turn.turn_index, hash, r);
      }
    }
  };

  const int pool = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  {
    std::vector<std::jthread> threads;
    for (int k = 1; k < pool; ++k) threads.emplace_back(work);
    work();
  }
  return results;
}

namespace {

using Reason = MalformedJudgeOutput::Reason;

std::optional<std::string_view> first_fenced_body(std::string_view raw) {
  auto open = raw.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body_start = raw.find('\n', open);
  if (body_start == std::string_view::npos) return std::nullopt;
  ++body_start;
  auto close = raw.find("```", body_start);
  if (close == std::string_view::npos) return std::nullopt;
  return raw.substr(body_start, close - body_start);
}

bool is_integral(const Json& v) {
  if (v.is_number_integer() || v.is_number_unsigned()) return true;
  if (!v.is_number_float()) return false;
  double d = v.get<double>();
  return std::isfinite(d) && std::floor(d) == d;
}

void check_range(const std::string& key, const Json& v, int turn) {
  auto fail = [&](const std::string& why) {
    throw MalformedJudgeOutput(Reason::kOutOfRange, "turn " + std::to_string(turn) +
                                                        " " + key + " " + why);
  };
  if (!v.is_number()) fail("is not a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail("is not finite");
  if (key == "answer_correctness") {
    if (!is_integral(v) || (d != 0.0 && d != 1.0)) fail("must be 0 or 1");
  } else if (key == "reasoning_soundness") {
    if (!is_integral(v) || d < 1 || d > 10) fail("must be an integer in 1..10");
  } else if (key == "buzzwords") {
    if (!is_integral(v) || d < 0) fail("must be a non-negative integer");
  } else if (key == "turn") {
    if (!is_integral(v)) fail("must be an integer");
  } else if (d < 1 || d > 10) {
    fail("must be in [1,10]");
  }
}

}  // namespace

std::vector<JudgeEvaluation> parse_judge_payload(
    std::string_view raw, int expected_turns,
    const std::set<std::string>& expected_keys) {
  Json doc = Json::parse(trim(raw), nullptr, false);
  if (doc.is_discarded()) {
    if (auto body = first_fenced_body(raw)) {
      doc = Json::parse(trim(*body), nullptr, false);
    }
  }
  if (doc.is_discarded()) {
    throw MalformedJudgeOutput(Reason::kBadJson, "no parseable JSON object");
  }
  if (!doc.is_object() || !doc.contains("evaluations") ||
      !doc["evaluations"].is_array()) {
    throw MalformedJudgeOutput(Reason::kBadJson, "missing \"evaluations\" array");
  }
  const Json& evals = doc["evaluations"];
  if (static_cast<long long>(evals.size()) != expected_turns) {
    throw MalformedJudgeOutput(Reason::kWrongCount,
                               "expected " + std::to_string(expected_turns) +
                                   " entries, got " + std::to_string(evals.size()));
  }

  std::vector<JudgeEvaluation> out;
  std::vector<bool> seen(static_cast<std::size_t>(expected_turns) + 1, false);
  for (std::size_t i = 0; i < evals.size(); ++i) {
    const Json& e = evals[i];
    const int position = static_cast<int>(i) + 1;
    if (!e.is_object()) {
      throw MalformedJudgeOutput(Reason::kBadJson,
                                 "entry " + std::to_string(position) + " is not an object");
    }
    JudgeEvaluation je;
    je.turn = position;
    for (const auto& key : expected_keys) {
      if (!e.contains(key)) {
        throw MalformedJudgeOutput(Reason::kMissingKey,
                                   "entry " + std::to_string(position) + " lacks " + key);
      }
    }
    for (const auto& [key, value] : e.items()) {
      if (!expected_keys.contains(key) && key != "turn") {
        throw MalformedJudgeOutput(Reason::kMissingKey,
                                   "entry " + std::to_string(position) +
                                       " has unexpected key " + key);
      }
      check_range(key, value, position);
      if (key == "turn") {
        const double t = value.get<double>();
        if (t < 1 || t > expected_turns) {
          throw MalformedJudgeOutput(Reason::kOutOfRange,
                                     "turn " + format_double(t) + " outside 1.." +
                                         std::to_string(expected_turns));
        }
        je.turn = static_cast<int>(t);
      } else {
        je.scores[key] = value.get<double>();
      }
    }
    if (seen[static_cast<std::size_t>(je.turn)]) {
      throw MalformedJudgeOutput(Reason::kWrongCount,
                                 "turn " + std::to_string(je.turn) + " appears twice");
    }
    seen[static_cast<std::size_t>(je.turn)] = true;
    if (expected_keys.contains("turn")) je.scores.erase("turn");
    out.push_back(std::move(je));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.turn < b.turn; });
  return out;
}

std::string turns_payload(const ConversationRun& run) {
  Json turns = Json::array();
  for (const auto& t : run.turns) {
    turns.push_back({{"turn", t.turn_index}, {"response", t.response_text}});
  }
  return Json{{"turns", std::move(turns)}}.dump();
}

std::string assemble_grader_prompt(const ConversationRun& run,
                                   const TaskSpec& task) {
  if (!task.ground_truth_answer) throw MissingField("ground_truth_answer");
  return fill_placeholders(
      *template_text("math_autograder"),
      {{"json_str", turns_payload(run)},
       {"ground_truth_solution", task.ground_truth_solution.value_or("")},
       {"ground_truth_answer", *task.ground_truth_answer}});
}

namespace {

// One retry on malformed output.
std::vector<JudgeEvaluation> call_and_parse(Judge& judge, std::string_view prompt,
                                            std::string_view payload, int turns,
                                            const std::set<std::string>& keys,
                                            Archive* archive,
                                            std::string_view kind) {
  for (int attempt = 1;; ++attempt) {
    const std::string stem =
        "judge-" + std::string(kind) + "-" + std::to_string(attempt);
    if (archive) {
      archive->write_request(stem, Json{{"prompt", prompt}, {"payload", payload}});
    }
    std::string raw;
    try {
      raw = judge.judge_call(prompt, payload);
    } catch (const JudgePayloadTooLarge&) {
      throw;
    } catch (const GatewayError& e) {
      throw JudgeUnavailable(e.what());
    }
    if (archive) archive->write_response(stem, Json{{"raw", raw}});
    try {
      return parse_judge_payload(raw, turns, keys);
    } catch (const MalformedJudgeOutput&) {
      if (attempt >= 2) throw;
    }
  }
}

}  // namespace

std::vector<JudgeEvaluation> grade_math_run(const ConversationRun& run,
                                            const TaskSpec& task, Judge& judge,
                                            Archive* archive) {
  if (task.domain != Domain::kMath) {
    throw PreconditionError("grade_math_run needs a MATH task");
  }
  const std::string prompt = assemble_grader_prompt(run, task);
  return call_and_parse(judge, prompt, "", static_cast<int>(run.turns.size()),
                        {"turn", "answer_correctness", "reasoning_soundness"},
                        archive, "grader");
}

std::vector<JudgeEvaluation> judge_quality_run(const ConversationRun& run,
                                               Domain domain, Judge& judge,
                                               Archive* archive) {
  std::string_view id = domain == Domain::kIdeas    ? "judge_ideas"
                        : domain == Domain::kCoding ? "judge_coding"
                                                    : "judge_math";
  const auto& keys = scorecard_keys(domain);
  return call_and_parse(judge, *template_text(id), turns_payload(run),
                        static_cast<int>(run.turns.size()),
                        std::set<std::string>(keys.begin(), keys.end()), archive,
                        "quality");
}

EvalSeries evaluate_run(const ConversationRun& run, const TaskSpec& task,
                        const EvaluatorDeps& deps) {
  EvalSeries series;
  series.run_id = run.run_id;
  series.per_turn.resize(run.turns.size());
  if (run.turns.empty()) return series;

  auto note_error = [&](std::size_t i, const std::string& msg) {
    auto& e = series.per_turn[i].eval_error;
    e = e ? *e + "; " + msg : msg;
  };
  auto note_all = [&](const std::string& msg) {
    for (std::size_t i = 0; i < series.per_turn.size(); ++i) note_error(i, msg);
  };

  if (task.domain == Domain::kCoding) {
    if (deps.sandbox) {
      auto results = eval_code_run(run, task, *deps.sandbox, deps.cache,
                                   deps.limits, deps.sandbox_workers);
      for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].error_type == ErrorType::kInfra) {
          note_error(i, "sandbox infra: " + results[i].stderr_tail.value_or(""));
        } else {
          series.per_turn[i].correctness = results[i].passed;
        }
      }
    } else {
      note_all("sandbox: not configured");
    }
  }

  if (task.domain == Domain::kMath) {
    if (deps.judge) {
      try {
        auto graded = grade_math_run(run, task, *deps.judge, deps.archive);
        for (const auto& g : graded) {
          auto& te = series.per_turn[static_cast<std::size_t>(g.turn - 1)];
          te.correctness = static_cast<int>(g.scores.at("answer_correctness"));
          te.reasoning_soundness =
              static_cast<int>(g.scores.at("reasoning_soundness"));
        }
      } catch (const Error& e) {
        note_all(std::string("grader: ") + e.what());
      }
    } else {
      note_all("grader: judge not configured");
    }
  }

  if (deps.judge) {
    try {
      auto scored = judge_quality_run(run, task.domain, *deps.judge, deps.archive);
      for (const auto& s : scored) {
        series.per_turn[static_cast<std::size_t>(s.turn - 1)].scorecard = s.scores;
      }
    } catch (const Error& e) {
      note_all(std::string("quality: ") + e.what());
    }
  } else {
    note_all("quality: judge not configured");
  }
  return series;
}

}  // namespace iterlab
