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

// Canonical prompt templates and their rendering. Turn 1 uses a per-domain
// task prompt; every later turn embeds only the previous response followed by
// the technique's improvement instruction.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iterlab/types.hpp"

namespace iterlab {

struct RenderedPrompt {
  std::string text;
  std::string template_id;
  std::map<std::string, std::string> placeholders_filled;
};

/// `kCanonical` holds the full instruction strings ("This {subject} is good,
/// improve it."). `kShort` swaps in the shorter vague wording ("This {subject}
/// can be better. Improve it."); steering strings are shared.
enum class TemplateSet { kCanonical, kShort };

std::string_view to_string(TemplateSet s);
TemplateSet parse_template_set(std::string_view s);

/// "idea", "solution" or "code".
std::string_view subject_for(Domain domain);

/// The three vague techniques plus the two steering techniques for `domain`.
std::vector<TechniqueSpec> technique_catalog(
    Domain domain, TemplateSet set = TemplateSet::kCanonical);

/// All nine techniques in catalog order.
std::vector<TechniqueSpec> all_techniques(
    TemplateSet set = TemplateSet::kCanonical);

/// Throws UnknownTechnique.
TechniqueSpec find_technique(std::string_view technique_id,
                             TemplateSet set = TemplateSet::kCanonical);

/// Instruction text with the subject substituted. Throws
/// TechniqueDomainMismatch for steering techniques outside their domain.
std::string resolve_instruction(const TechniqueSpec& technique, Domain domain);

/// Throws MissingField when a required task field is absent.
RenderedPrompt render_initial_prompt(const TaskSpec& task);

/// Throws PreconditionError on an empty previous response and
/// TechniqueDomainMismatch on scope violations. The response is embedded
/// byte-for-byte (no trimming).
RenderedPrompt render_iteration_prompt(std::string_view previous_response,
                                       const TechniqueSpec& technique,
                                       Domain domain);

/// Raw template text by id: "turn1_ideas", "turn1_math", "turn1_coding",
/// "iteration", any technique id, "short_<technique id>" for the alternate
/// vague set, and the judge prompts "judge_ideas", "judge_coding",
/// "judge_math", "math_autograder".
std::optional<std::string_view> template_text(std::string_view template_id);

/// Every id accepted by template_text.
std::vector<std::string> template_ids();

/// Replaces `{name}` tokens (`[a-z0-9_]+`) in a
/// single pass; substituted values are never rescanned. Throws MissingField
/// for a token with no value. Braces that do not form a token, such as
/// `\boxed{}`, are left alone.
std::string fill_placeholders(std::string_view tmpl,
                              const std::map<std::string, std::string>& values);

/// True if `text` still contains a `{name}` token.
bool has_placeholder(std::string_view text);

}  // namespace iterlab
