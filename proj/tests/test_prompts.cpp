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

#include <gtest/gtest.h>

#include "iterlab/errors.hpp"
#include "iterlab/prompts.hpp"
#include "test_support.hpp"

namespace iterlab {
namespace {

using testing::golden;

constexpr char kPrevious[] = "Draft answer.\n  Indented line with {braces} and $x^2$.\n";

TEST(PromptGolden, TurnOneIdeas) {
  TaskSpec t = testing::ideas_task();
  EXPECT_EQ(render_initial_prompt(t).text, golden("turn1_ideas.txt"));
}

TEST(PromptGolden, TurnOneMath) {
  TaskSpec t = testing::math_task();
  t.problem = "Find all integers n such that n^2 = 4.";
  EXPECT_EQ(render_initial_prompt(t).text, golden("turn1_math.txt"));
}

TEST(PromptGolden, TurnOneCoding) {
  TaskSpec t = testing::coding_task();
  t.library = "Pandas";
  t.code_context = "import pandas as pd\ndf = pd.DataFrame({\"a\": [1, 2]})\n[insert]\nprint(result)";
  t.prompt = "Sum column a into result.";
  const auto r = render_initial_prompt(t);
  EXPECT_EQ(r.text, golden("turn1_coding.txt"));
  EXPECT_EQ(r.template_id, "turn1_coding");
}

TEST(PromptGolden, TurnOneCodingWithoutOptionalLines) {
  TaskSpec t;
  t.task_id = "C";
  t.domain = Domain::kCoding;
  t.prompt = "Sum column a into result.";
  t.code_context = "";
  EXPECT_EQ(render_initial_prompt(t).text, golden("turn1_coding_minimal.txt"));
}

struct IterCase {
  const char* technique;
  Domain domain;
};

void PrintTo(const IterCase& c, std::ostream* os) {
  *os << c.technique << "/" << to_string(c.domain);
}

class PromptGoldenIteration : public ::testing::TestWithParam<IterCase> {};

TEST_P(PromptGoldenIteration, MatchesTranscription) {
  const auto& c = GetParam();
  std::string domain(to_string(c.domain));
  for (auto& ch : domain) ch = static_cast<char>(std::tolower(ch));
  const auto rendered =
      render_iteration_prompt(kPrevious, find_technique(c.technique), c.domain);
  EXPECT_EQ(rendered.text,
            golden(std::string("iter_") + c.technique + "_" + domain + ".txt"));
}

INSTANTIATE_TEST_SUITE_P(
    AllTechniques, PromptGoldenIteration,
    ::testing::Values(IterCase{"v1_improve", Domain::kIdeas},
                      IterCase{"v1_improve", Domain::kMath},
                      IterCase{"v1_improve", Domain::kCoding},
                      IterCase{"v2_better", Domain::kIdeas},
                      IterCase{"v2_better", Domain::kMath},
                      IterCase{"v2_better", Domain::kCoding},
                      IterCase{"v3_refine", Domain::kIdeas},
                      IterCase{"v3_refine", Domain::kMath},
                      IterCase{"v3_refine", Domain::kCoding},
                      IterCase{"s1_novel", Domain::kIdeas},
                      IterCase{"s2_practical", Domain::kIdeas},
                      IterCase{"s1_perf", Domain::kCoding},
                      IterCase{"s2_maintainability", Domain::kCoding},
                      IterCase{"s1_elaboration", Domain::kMath},
                      IterCase{"s2_exploration", Domain::kMath}),
    [](const ::testing::TestParamInfo<IterCase>& info) {
      return std::string(info.param.technique) + "_" + std::string(to_string(info.param.domain));
    });

TEST(Prompts, CatalogHasNineTechniquesFivePerDomain) {
  EXPECT_EQ(all_techniques().size(), 9u);
  for (auto d : {Domain::kIdeas, Domain::kMath, Domain::kCoding}) {
    const auto cat = technique_catalog(d);
    ASSERT_EQ(cat.size(), 5u);
    for (const auto& t : cat) EXPECT_TRUE(scope_allows(t.domain_scope, d));
  }
  EXPECT_THROW(find_technique("v9_nope"), UnknownTechnique);
}

TEST(Prompts, BodyTemplateSetSwapsVagueWordingOnly) {
  const auto v1 = find_technique("v1_improve", TemplateSet::kShort);
  EXPECT_EQ(resolve_instruction(v1, Domain::kCoding), "This code can be better. Improve it.");
  const auto s1 = find_technique("s1_novel", TemplateSet::kShort);
  EXPECT_EQ(s1, find_technique("s1_novel"));
}

TEST(Prompts, SteeringOutsideDomainIsRejected) {
  EXPECT_THROW(resolve_instruction(find_technique("s1_perf"), Domain::kIdeas),
               TechniqueDomainMismatch);
  EXPECT_THROW(render_iteration_prompt("x", find_technique("s1_novel"), Domain::kMath),
               TechniqueDomainMismatch);
}

TEST(Prompts, IterationNeedsPreviousResponse) {
  EXPECT_THROW(render_iteration_prompt("", find_technique("v1_improve"), Domain::kIdeas),
               PreconditionError);
}

TEST(Prompts, IterationEmbedsResponseVerbatimAndNothingElse) {
  const std::string prev = "  {problem} with trailing spaces  \n\n";
  const auto r =
      render_iteration_prompt(prev, find_technique("v3_refine"), Domain::kMath);
  EXPECT_NE(r.text.find("---\n" + prev + "\n---"), std::string::npos);
  EXPECT_EQ(r.placeholders_filled.at("previous_response"), prev);
}

TEST(Prompts, MissingRequiredFieldThrows) {
  TaskSpec t = testing::math_task();
  t.problem.reset();
  EXPECT_THROW(render_initial_prompt(t), MissingField);
}

TEST(FillPlaceholders, SinglePassAndLeavesNonTokensAlone) {
  EXPECT_EQ(fill_placeholders("a {x} b {y}", {{"x", "{y}"}, {"y", "2"}}), "a {y} b 2");
  EXPECT_EQ(fill_placeholders("\\boxed{} {A} { x }", {}), "\\boxed{} {A} { x }");
  EXPECT_THROW(fill_placeholders("{missing}", {}), MissingField);
  EXPECT_TRUE(has_placeholder("x {ok_1} y"));
  EXPECT_FALSE(has_placeholder("\\boxed{}"));
}

TEST(Prompts, EveryTemplateIdResolves) {
  for (const auto& id : template_ids()) EXPECT_TRUE(template_text(id).has_value()) << id;
  EXPECT_FALSE(template_text("nope").has_value());
  for (const char* id : {"judge_ideas", "judge_coding", "judge_math", "math_autograder"}) {
    EXPECT_TRUE(template_text(id).has_value()) << id;
  }
}

TEST(Prompts, TemplateFilesMatchEmbeddedTable) {
  const std::filesystem::path dir = std::filesystem::path(ITERLAB_GOLDEN_DIR) / ".." / ".." / "templates";
  for (const auto& id : template_ids()) {
    EXPECT_EQ(read_file(dir / (id + ".txt")), std::string(*template_text(id))) << id;
  }
}

}  // namespace
}  // namespace iterlab
