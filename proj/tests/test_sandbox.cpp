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

#include <chrono>
#include <cstdlib>

#include "iterlab/errors.hpp"
#include "iterlab/evaluators.hpp"

namespace iterlab {
namespace {

using namespace std::chrono_literals;

SandboxJob job(std::string code, int timeout_s = 30) {
  return SandboxJob{std::move(code), "[insert]\nassert result == 4", timeout_s, 1024};
}

SubprocessSandbox fake(std::chrono::seconds grace = 5s) {
  return SubprocessSandbox({ITERLAB_FAKE_SHIM}, grace);
}

TEST(SubprocessSandbox, PassingAndFailingVerdicts) {
  auto sb = fake();
  auto v = sb.execute(job("result = 4  #PASS"));
  EXPECT_EQ(v.passed, 1);
  EXPECT_FALSE(v.error_type.has_value());
  EXPECT_EQ(v.duration_ms, 7);

  v = sb.execute(job("result = 5"));
  EXPECT_EQ(v.passed, 0);
  EXPECT_EQ(v.error_type, ErrorType::kAssertion);
  v = sb.execute(job("plot_solution()  #EXCEPTION"));
  EXPECT_EQ(v.error_type, ErrorType::kException);
  EXPECT_NE(v.stderr_tail.find("NameError"), std::string::npos);
  v = sb.execute(job("x = '''  #COMPILE"));
  EXPECT_EQ(v.error_type, ErrorType::kCompile);
}

TEST(SubprocessSandbox, SendsTheJobProtocol) {
  auto sb = fake();
  const std::string big(200000, 'x');  // larger than a pipe buffer
  const auto v = sb.execute(job("#ECHO\n" + big, 7));
  ASSERT_EQ(v.passed, 1);
  const Json sent = Json::parse(v.stderr_tail);
  EXPECT_EQ(sent["code"], "#ECHO\n" + big);
  EXPECT_EQ(sent["code_context"], "[insert]\nassert result == 4");
  EXPECT_EQ(sent["timeout_s"], 7);
  EXPECT_EQ(sent["mem_limit_mb"], 1024);
}

TEST(SubprocessSandbox, ShimFailuresAreInfra) {
  auto sb = fake();
  EXPECT_EQ(sb.execute(job("#EXIT1")).error_type, ErrorType::kInfra);
  EXPECT_EQ(sb.execute(job("#GARBAGE")).error_type, ErrorType::kInfra);
  SubprocessSandbox missing({"/nonexistent/iterlab-shim"});
  EXPECT_EQ(missing.execute(job("#PASS")).error_type, ErrorType::kInfra);
}

TEST(SubprocessSandbox, HungShimIsKilledAfterGrace) {
  auto sb = fake(1s);
  const auto start = std::chrono::steady_clock::now();
  const auto v = sb.execute(job("#HANG", 1));
  const auto took = std::chrono::steady_clock::now() - start;
  EXPECT_EQ(v.error_type, ErrorType::kInfra);
  EXPECT_GE(took, 2s);
  EXPECT_LT(took, 5s);
}

TEST(Verdict, ParseEnforcesInvariant) {
  EXPECT_EQ(parse_verdict(Json{{"passed", 1}}).passed, 1);
  EXPECT_EQ(parse_verdict(Json{{"passed", 0}, {"error_type", "timeout"}}).error_type,
            ErrorType::kTimeout);
  EXPECT_THROW(parse_verdict(Json{{"passed", 1}, {"error_type", "assertion"}}),
               PreconditionError);
  EXPECT_THROW(parse_verdict(Json{{"passed", 0}}), PreconditionError);
  EXPECT_THROW(parse_verdict(Json{{"passed", 2}}), PreconditionError);
  EXPECT_THROW(parse_verdict(Json{{"passed", 0}, {"error_type", "weird"}}), PreconditionError);
}

// Runs against a real shim when ITERLAB_SANDBOX_CMD names one, e.g.
// ITERLAB_SANDBOX_CMD="python3 -m iterlab_shim".
class RealShim : public ::testing::Test {
 protected:
  void SetUp() override {
    const char* cmd = std::getenv("ITERLAB_SANDBOX_CMD");
    if (cmd == nullptr || *cmd == '\0') {
      GTEST_SKIP() << "ITERLAB_SANDBOX_CMD is not set; sandbox shim absent";
    }
    sandbox_.emplace(std::vector<std::string>{"/bin/sh", "-c", std::string("exec ") + cmd});
  }
  SandboxVerdict run(std::string code, std::string context, int timeout_s = 10) {
    return sandbox_->execute({std::move(code), std::move(context), timeout_s, 1024});
  }
  std::optional<SubprocessSandbox> sandbox_;
};

TEST_F(RealShim, Verdicts) {
  const std::string ctx = "[insert]\nassert result == 4";
  EXPECT_EQ(run("result = 2 + 2", ctx).passed, 1);
  EXPECT_EQ(run("result = 5", ctx).error_type, ErrorType::kAssertion);
  EXPECT_EQ(run("result = plot_solution()", ctx).error_type, ErrorType::kException);
  EXPECT_EQ(run("result = '''unterminated", ctx).error_type, ErrorType::kCompile);
}

TEST_F(RealShim, TimeoutWithinGrace) {
  const auto v = run("while True:\n    pass", "[insert]", 3);
  EXPECT_EQ(v.error_type, ErrorType::kTimeout);
  EXPECT_GE(v.duration_ms, 3000);
  EXPECT_LE(v.duration_ms, 5000);
}

TEST_F(RealShim, DeterministicAcrossRepeats) {
  const std::string ctx = "[insert]\nassert result == 4";
  for (int i = 0; i < 10; ++i) {
    const auto v = run("result = plot_solution()", ctx);
    EXPECT_EQ(v.passed, 0);
    EXPECT_EQ(v.error_type, ErrorType::kException);
  }
}

}  // namespace
}  // namespace iterlab
