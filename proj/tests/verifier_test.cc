// Copyright 2026 The ACV Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "acv/verifier.h"

#include "gtest/gtest.h"
#include "test_util.h"

namespace acv {
namespace {

using testing::FixtureDir;
using testing::LoadTree;
using testing::ParseOrDie;

VerificationResult VerifyMethodText(std::string_view method) {
  return Verify(ParseOrDie(StrCat(".class public LA;\n.super Ljava/lang/Object;\n"
                                  ".field public static s:I\n",
                                  method)));
}

std::string Describe(const VerificationResult& r) {
  std::string out;
  for (const Violation& v : r.violations) StrAppend(&out, FormatViolation(v), "\n");
  return out;
}

TEST(VerifierTest, FixturesAreClean) {
  for (const char* dir : {"listing2", "app/smali"}) {
    VerificationResult r = Verify(LoadTree(FixtureDir() / dir));
    EXPECT_TRUE(r.ok()) << dir << "\n" << Describe(r);
  }
}

TEST(VerifierTest, CorpusIsClean) {
  for (const FaultCorpusProgram& c : GenerateCorpusSerial(11, 25)) {
    VerificationResult r = Verify(c.program);
    EXPECT_TRUE(r.ok()) << c.name << "\n" << Describe(r);
  }
}

struct RuleCase {
  const char* rule;
  const char* method;
};

void PrintTo(const RuleCase& c, std::ostream* os) { *os << c.rule; }

class VerifierRuleTest : public ::testing::TestWithParam<RuleCase> {};

TEST_P(VerifierRuleTest, Flags) {
  VerificationResult r = VerifyMethodText(GetParam().method);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.HasRule(GetParam().rule)) << Describe(r);
}

INSTANTIATE_TEST_SUITE_P(
    Rules, VerifierRuleTest,
    ::testing::Values(
        RuleCase{rule::kFrameSize, ".method public static f()V\n.locals 300\nreturn-void\n.end method\n"},
        RuleCase{rule::kRegisterBounds,
                 ".method public static f()V\n.locals 1\nconst/4 v3, 0x0\nreturn-void\n.end method\n"},
        RuleCase{rule::kRegisterRange,
                 ".method public static f()V\n.locals 20\nconst/4 v17, 0x0\nreturn-void\n.end method\n"},
        RuleCase{rule::kLiteralRange,
                 ".method public static f()V\n.locals 1\nconst/4 v0, 0x10\nreturn-void\n.end method\n"},
        RuleCase{rule::kFallOffEnd, ".method public static f()V\n.locals 1\nconst/4 v0, 0x0\n.end method\n"},
        RuleCase{rule::kUnresolvedMethod,
                 ".method public static f()V\n.locals 0\ninvoke-static {}, LA;->g()V\nreturn-void\n"
                 ".end method\n"},
        RuleCase{rule::kUnresolvedField,
                 ".method public static f()V\n.locals 1\nsget v0, LA;->nope:I\nreturn-void\n.end method\n"},
        RuleCase{rule::kUnresolvedClass,
                 ".method public static f()V\n.locals 1\nnew-instance v0, Lx/Missing;\nreturn-void\n"
                 ".end method\n"},
        RuleCase{rule::kPairedAdjacency,
                 ".method public static f()I\n.locals 1\nconst/4 v0, 0x0\nmove-result v0\nreturn v0\n"
                 ".end method\n"},
        RuleCase{rule::kMoveException,
                 ".method public static f()V\n.locals 1\nmove-exception v0\nreturn-void\n.end method\n"},
        RuleCase{rule::kMonitorBalance,
                 ".method public static f()V\n.locals 1\nconst/4 v0, 0x0\nmonitor-exit v0\nreturn-void\n"
                 ".end method\n"},
        RuleCase{rule::kInvokeArgs,
                 ".method public static f()V\n.locals 1\nconst/4 v0, 0x0\ninvoke-static {v0}, LA;->f()V\n"
                 "return-void\n.end method\n"},
        RuleCase{rule::kDuplicateMethod,
                 ".method public static f()V\n.locals 0\nreturn-void\n.end method\n"
                 ".method public static f()V\n.locals 0\nreturn-void\n.end method\n"}),
    [](const ::testing::TestParamInfo<RuleCase>& info) {
      std::string name;
      for (char c : std::string_view(info.param.rule)) {
        if (c != '-') name.push_back(c);
      }
      return name;
    });

TEST(VerifierTest, ViolationLocatesInstruction) {
  VerificationResult r =
      VerifyMethodText(".method public static f()V\n.locals 1\nconst/4 v0, 0x0\nconst/4 v5, 0x0\n"
                       "return-void\n.end method\n");
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].class_name, "LA;");
  EXPECT_EQ(r.violations[0].method, "f()V");
  EXPECT_EQ(r.violations[0].body_index, 1);
  EXPECT_EQ(r.violations[0].rule, rule::kRegisterBounds);
}

TEST(VerifierTest, WideParamsCountTwoRegisters) {
  VerificationResult r = VerifyMethodText(
      ".method public static f(JI)V\n.locals 253\nreturn-void\n.end method\n");
  EXPECT_TRUE(r.ok()) << Describe(r);  // 253 + 2 + 1 = 256
  r = VerifyMethodText(".method public f(JI)V\n.locals 253\nreturn-void\n.end method\n");
  EXPECT_TRUE(r.HasRule(rule::kFrameSize));  // the receiver pushes it to 257
}

TEST(VerifierTest, BalancedMonitorsPass) {
  VerificationResult r = VerifyMethodText(
      ".method public static f()V\n.locals 1\nnew-instance v0, Ljava/lang/Object;\nmonitor-enter v0\n"
      "monitor-exit v0\nreturn-void\n.end method\n");
  EXPECT_TRUE(r.ok()) << Describe(r);
}

TEST(VerifierTest, InstrumentedOutputsVerify) {
  for (const char* dir : {"listing2", "app/smali"}) {
    SmaliProgram p = LoadTree(FixtureDir() / dir);
    for (Granularity g : {Granularity::kInstruction, Granularity::kMethod, Granularity::kClass}) {
      auto inst = Instrument(p, g);
      ASSERT_TRUE(inst.ok()) << inst.status();
      VerificationResult r = Verify(inst->program);
      EXPECT_TRUE(r.ok()) << dir << " " << GranularityName(g) << "\n" << Describe(r);
    }
  }
}

}  // namespace
}  // namespace acv
