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

#include "iterlab/prompts.hpp"

#include <array>
#include <utility>

#include "iterlab/errors.hpp"

namespace iterlab {

namespace {

struct TemplateEntry {
  std::string_view id;
  std::string_view text;
};

// Mirrors the files under templates/ byte for byte; a unit test diffs them.
constexpr TemplateEntry kTemplates[] = {
    {"turn1_ideas",
     R"tmpl(I'll be submitting your next responses to a "Good Scientific Idea" expert review panel. If they consider your idea to be a good one, you'll receive a reward. Your assigned keyword is: "{keywords}". You may provide background information. The idea MUST be concisely expressed within 100–200 words total (including any background information). (Note: good scientific ideas should be original (novel contribution), feasible (technically implementable), clearly articulated, and address meaningful problems in the field.).)tmpl"},
    {"turn1_math",
     R"tmpl({problem}

Please reason step by step, and put your final answer within \boxed{} and give all steps in latex only.)tmpl"},
    {"turn1_coding",
     R"tmpl(Library: {library}
Code context: {code_context}

Problem:
{prompt}

Please provide a complete solution.)tmpl"},
    {"iteration",
     R"tmpl(The following is a previous response:
---
{previous_response}
---

{improvement_instruction})tmpl"},
    {"v1_improve",
     R"tmpl(This {subject} is good, improve it.)tmpl"},
    {"v2_better",
     R"tmpl(This {subject} is good, make it better.)tmpl"},
    {"v3_refine",
     R"tmpl(This {subject} is good, refine it.)tmpl"},
    {"short_v1_improve",
     R"tmpl(This {subject} can be better. Improve it.)tmpl"},
    {"short_v2_better",
     R"tmpl(This {subject} can be better. Make it better.)tmpl"},
    {"short_v3_refine",
     R"tmpl(This {subject} can be better. Refine it.)tmpl"},
    {"s1_novel",
     R"tmpl(Make this idea more novel and surprising.)tmpl"},
    {"s2_practical",
     R"tmpl(Make this idea more practical and feasible.)tmpl"},
    {"s1_perf",
     R"tmpl(Refactor the previous code snippet to maximize execution speed.)tmpl"},
    {"s2_maintainability",
     R"tmpl(Refactor the previous code snippet to maximize readability and clarity.)tmpl"},
    {"s1_elaboration",
     R"tmpl(This is previous response, now elaborate on each step with more detail.)tmpl"},
    {"s2_exploration",
     R"tmpl(Provide an alternative method or a different logical approach to the one used)tmpl"},
    {"judge_ideas",
     R"tmpl(You are an extremely demanding scientific reviewer with the highest critical standards, like those at Nature or Science. You will be given a JSON object containing a sequence of 12 "turns" where a language model has iteratively tried to improve a scientific idea. Your task is to evaluate each turn's response independently of the others.

For each turn, assess on four key dimensions:
- originality: Novel contribution or innovative approaches (1–10 scale).
- feasibility: Technical and practical achievability (1–10 scale).
- clarity: How well-articulated and easy the idea is to understand (1–10 scale).
- buzzwords: The number of buzzwords in the response. Buzzwords are trendy, often technical-sounding words used to make an idea seem more impressive than it is (e.g., "synergy," "paradigm-shifting," "quantum-level").

Output requirement: Your entire output must be a single JSON object with the key "evaluations", containing a list of 12 JSON objects for each turn. Provide no other text or analysis.)tmpl"},
    {"judge_coding",
     R"tmpl(You are an expert senior software engineer performing a qualitative code review. You will be given a JSON object containing 12 iterative solutions to a programming problem. Your task is to evaluate each code snippet independently.

For each turn, assess two dimensions of software quality:
- pragmatism: How appropriately scaled is the solution to the problem's simplicity? (A score of 1 indicates an absurdly over-engineered solution for a simple task, while 10 is perfectly pragmatic).
- readability: How clean, well-structured, and easy is the code for a human to understand? (1–10 scale).

Output requirement: Your entire output must be a single JSON object with the key "evaluations", containing a list of 12 JSON objects for each turn. Provide no other text or analysis.)tmpl"},
    {"judge_math",
     R"tmpl(You are a mathematics professor with the highest standards for rigor, like those of the Annals of Mathematics. You are grading 12 iterative attempts to solve a difficult math problem. Your task is to evaluate each solution's reasoning independently.

For each turn, assess two dimensions of proof quality:
- logical_soundness: How valid and free of errors is the reasoning path? (This is an assessment of the steps, not the final answer).
- clarity_of_explanation: How well-structured and easy is the proof to follow?

Output requirement: Your entire output must be a single JSON object with the key "evaluations", containing a list of 12 JSON objects for each turn. Provide no other text or analysis.)tmpl"},
    {"math_autograder",
     R"tmpl(Task. Evaluate each of the 12 attempts in the provided student_solution JSON independently. For each turn: (1) check mathematical equivalence with the ground_truth_answer; (2) score the reasoning quality.

Inputs embedded in the user message:
- Student Solution: a JSON object with 12 attempts (turns 1–12).
- Ground Truth Solution: authoritative worked solution (for reference).
- Ground Truth Answer: canonical final answer for equivalence checks.

Scoring per turn (include all fields):
- turn (1–12)
- answer_correctness 0/1 — set to 1 iff the attempt’s final answer is mathematically equivalent to ground_truth_answer (allow algebraic simplifications, equivalent forms/units when unambiguously the same); else 0.
- reasoning_soundness (1–10) — rigor, validity, and coherence of the reasoning steps (independent of final correctness).

Output requirement. Return a single JSON object with the key "evaluations" containing a list of 12 JSON objects (one per turn). Provide no other text or analysis.

Expected Output Format (example):
{
   "evaluations": [
     { "turn": 1, "answer_correctness": 0, "reasoning_soundness": 3 },
     { "turn": 2, "answer_correctness": 1, "reasoning_soundness": 9 }
    ]
   }

Student Solution:
{json_str}

Ground Truth Solution:
{ground_truth_solution}

Ground Truth Answer:
{ground_truth_answer})tmpl"},
};

struct CatalogEntry {
  std::string_view id;
  DomainScope scope;
};

constexpr std::array kCatalog = {
    CatalogEntry{"v1_improve", DomainScope::kAllVague},
    CatalogEntry{"v2_better", DomainScope::kAllVague},
    CatalogEntry{"v3_refine", DomainScope::kAllVague},
    CatalogEntry{"s1_novel", DomainScope::kIdeas},
    CatalogEntry{"s2_practical", DomainScope::kIdeas},
    CatalogEntry{"s1_perf", DomainScope::kCoding},
    CatalogEntry{"s2_maintainability", DomainScope::kCoding},
    CatalogEntry{"s1_elaboration", DomainScope::kMath},
    CatalogEntry{"s2_exploration", DomainScope::kMath},
};

std::string_view require_template(std::string_view id) {
  auto t = template_text(id);
  if (!t) throw UnknownTechnique("no template: " + std::string(id));
  return *t;
}

TechniqueSpec make_spec(const CatalogEntry& e, TemplateSet set) {
  std::string id(e.id);
  std::string lookup = id;
  if (set == TemplateSet::kShort && e.scope == DomainScope::kAllVague) {
    lookup = "short_" + id;
  }
  return TechniqueSpec{id, e.scope, std::string(require_template(lookup))};
}

bool is_token_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// Length of a `{name}` token starting at `pos`, or 0.
std::size_t token_length(std::string_view s, std::size_t pos) {
  if (s[pos] != '{') return 0;
  std::size_t end = pos + 1;
  while (end < s.size() && is_token_char(s[end])) ++end;
  if (end == pos + 1 || end >= s.size() || s[end] != '}') return 0;
  return end - pos + 1;
}

// Library / Code context lines are emitted only when the task has them. A
// template line holding an unfilled optional placeholder is dropped, along
// with a blank line left leading the text.
std::string drop_optional_lines(
    std::string_view tmpl, const std::map<std::string, std::string>& values) {
  static constexpr std::array<std::string_view, 2> kOptional = {"library",
                                                                "code_context"};
  std::string out;
  std::size_t pos = 0;
  while (pos <= tmpl.size()) {
    std::size_t nl = tmpl.find('\n', pos);
    std::string_view line = tmpl.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    bool drop = false;
    for (auto name : kOptional) {
      std::string token = "{" + std::string(name) + "}";
      if (line.find(token) != std::string_view::npos &&
          !values.contains(std::string(name))) {
        drop = true;
      }
    }
    if (!drop && !(out.empty() && line.empty())) {
      out += line;
      if (nl != std::string_view::npos) out += '\n';
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(TemplateSet s) {
  return s == TemplateSet::kCanonical ? "canonical" : "short";
}

TemplateSet parse_template_set(std::string_view s) {
  if (s == "canonical") return TemplateSet::kCanonical;
  if (s == "short") return TemplateSet::kShort;
  throw PreconditionError("unknown template set: " + std::string(s));
}

std::string_view subject_for(Domain domain) {
  switch (domain) {
    case Domain::kIdeas: return "idea";
    case Domain::kMath: return "solution";
    case Domain::kCoding: return "code";
  }
  return "idea";
}

std::vector<TechniqueSpec> technique_catalog(Domain domain, TemplateSet set) {
  std::vector<TechniqueSpec> out;
  for (const auto& e : kCatalog) {
    if (scope_allows(e.scope, domain)) out.push_back(make_spec(e, set));
  }
  return out;
}

std::vector<TechniqueSpec> all_techniques(TemplateSet set) {
  std::vector<TechniqueSpec> out;
  for (const auto& e : kCatalog) out.push_back(make_spec(e, set));
  return out;
}

TechniqueSpec find_technique(std::string_view technique_id, TemplateSet set) {
  for (const auto& e : kCatalog) {
    if (e.id == technique_id) return make_spec(e, set);
  }
  throw UnknownTechnique("unknown technique: " + std::string(technique_id));
}

std::optional<std::string_view> template_text(std::string_view template_id) {
  for (const auto& t : kTemplates) {
    if (t.id == template_id) return t.text;
  }
  return std::nullopt;
}

std::vector<std::string> template_ids() {
  std::vector<std::string> ids;
  for (const auto& t : kTemplates) ids.emplace_back(t.id);
  return ids;
}

std::string fill_placeholders(
    std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (std::size_t len = token_length(tmpl, i); len > 0) {
      std::string name(tmpl.substr(i + 1, len - 2));
      auto it = values.find(name);
      if (it == values.end()) throw MissingField(name);
      out += it->second;
      i += len;
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

bool has_placeholder(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (token_length(text, i) > 0) return true;
  }
  return false;
}

std::string resolve_instruction(const TechniqueSpec& technique, Domain domain) {
  if (!scope_allows(technique.domain_scope, domain)) {
    throw TechniqueDomainMismatch(technique.technique_id + " does not apply to " +
                                  std::string(to_string(domain)));
  }
  return fill_placeholders(technique.template_text,
                           {{"subject", std::string(subject_for(domain))}});
}

RenderedPrompt render_initial_prompt(const TaskSpec& task) {
  auto required = [&](const std::optional<std::string>& field,
                      const char* name) -> const std::string& {
    if (!field || field->empty()) throw MissingField(name);
    return *field;
  };

  RenderedPrompt out;
  switch (task.domain) {
    case Domain::kIdeas: {
      out.template_id = "turn1_ideas";
      out.placeholders_filled = {{"keywords", required(task.keywords, "keywords")}};
      out.text = fill_placeholders(require_template(out.template_id),
                                   out.placeholders_filled);
      break;
    }
    case Domain::kMath: {
      out.template_id = "turn1_math";
      out.placeholders_filled = {{"problem", required(task.problem, "problem")}};
      out.text = fill_placeholders(require_template(out.template_id),
                                   out.placeholders_filled);
      break;
    }
    case Domain::kCoding: {
      out.template_id = "turn1_coding";
      out.placeholders_filled = {{"prompt", required(task.prompt, "prompt")}};
      if (task.library && !task.library->empty()) {
        out.placeholders_filled["library"] = *task.library;
      }
      if (task.code_context && !task.code_context->empty()) {
        out.placeholders_filled["code_context"] = *task.code_context;
      }
      out.text = fill_placeholders(
          drop_optional_lines(require_template(out.template_id),
                              out.placeholders_filled),
          out.placeholders_filled);
      break;
    }
  }
  return out;
}

RenderedPrompt render_iteration_prompt(std::string_view previous_response,
                                       const TechniqueSpec& technique,
                                       Domain domain) {
  if (previous_response.empty()) {
    throw PreconditionError("previous response is empty");
  }
  RenderedPrompt out;
  out.template_id = "iteration";
  out.placeholders_filled = {
      {"previous_response", std::string(previous_response)},
      {"improvement_instruction", resolve_instruction(technique, domain)}};
  out.text = fill_placeholders(require_template(out.template_id),
                               out.placeholders_filled);
  return out;
}

}  // namespace iterlab
