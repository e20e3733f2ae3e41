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

#include "acv/smali_parser.h"

#include "gtest/gtest.h"
#include "test_util.h"

namespace acv {
namespace {

using testing::FixtureDir;
using testing::LoadTree;
using testing::ParseOrDie;

constexpr char kHeader[] = ".class public LA;\n.super Ljava/lang/Object;\n";

std::vector<std::string> Errors(const ParseResult& r) {
  std::vector<std::string> out;
  for (const auto& d : r.diagnostics) {
    if (d.severity == ParseDiagnostic::Severity::kError) out.push_back(FormatDiagnostic(d));
  }
  return out;
}

TEST(SmaliParserTest, ParsesListingTwo) {
  SmaliProgram p = LoadTree(FixtureDir() / "listing2");
  const SmaliMethod* m = p.FindMethod("Lcom/demo/Activity;", "updateElements()V");
  ASSERT_NE(m, nullptr);
  EXPECT_EQ(m->locals, 1);
  EXPECT_EQ(CountInstructions(*m), 6);
  EXPECT_EQ(m->body.size(), 8u);  // six instructions, two labels
  EXPECT_EQ(p.entry_points.size(), 1u);
  EXPECT_EQ(p.entry_points[0].method, "main()V");
}

TEST(SmaliParserTest, PrintThenParseIsIdentity) {
  for (const char* dir : {"listing2", "listing3", "app/smali"}) {
    SmaliProgram p = LoadTree(FixtureDir() / dir);
    ParseResult again = Parse(Print(p));
    ASSERT_TRUE(again.ok()) << dir;
    EXPECT_EQ(*again.program, p) << dir;
  }
  for (const FaultCorpusProgram& c : GenerateCorpusSerial(3, 20)) {
    ParseResult again = Parse(Print(c.program));
    ASSERT_TRUE(again.ok()) << c.name;
    EXPECT_EQ(*again.program, c.program) << c.name;
  }
}

TEST(SmaliParserTest, PrintIsCanonical) {
  SmaliProgram p = ParseOrDie(std::string(kHeader) +
                              ".method public static f()V\n.registers 3\n"
                              "const/16 v0, 255\nconst-wide/16 v1, -16\nreturn-void\n.end method\n");
  std::string text = PrintClass(p.classes[0]);
  EXPECT_NE(text.find("    .locals 3\n"), std::string::npos) << text;
  EXPECT_NE(text.find("    const/16 v0, 0xff\n"), std::string::npos) << text;
  EXPECT_NE(text.find("    const-wide/16 v1, -0x10L\n"), std::string::npos) << text;
}

TEST(SmaliParserTest, RegistersDirectiveBecomesLocals) {
  SmaliProgram p = ParseOrDie(std::string(kHeader) +
                              ".method public static f(IJ)V\n.registers 5\nreturn-void\n.end method\n");
  EXPECT_EQ(p.classes[0].methods[0].locals, 2);
}

TEST(SmaliParserTest, UnsupportedOpcodeHasSpan) {
  ParseResult r = ParseText(std::string(kHeader) +
                                ".method public static f()V\n.locals 1\n  fill-new-array {v0}, [I\n"
                                "return-void\n.end method\n",
                            "x.smali");
  EXPECT_FALSE(r.ok());
  auto errors = Errors(r);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0], "x.smali:5:3: error: UnsupportedOpcode: fill-new-array");
}

TEST(SmaliParserTest, UnresolvedLabelIsError) {
  ParseResult r = ParseText(std::string(kHeader) +
                            ".method public static f()V\n.locals 0\ngoto :nowhere\n.end method\n");
  EXPECT_FALSE(r.ok());
  ASSERT_FALSE(Errors(r).empty());
  EXPECT_NE(Errors(r)[0].find("nowhere"), std::string::npos);
}

TEST(SmaliParserTest, MissingSuperIsError) {
  ParseResult r = ParseText(".class public LA;\n");
  EXPECT_FALSE(r.ok());
}

TEST(SmaliParserTest, AnnotationsAndDebugInfoAreSkipped) {
  ParseResult r = ParseText(std::string(kHeader) +
                            ".source \"A.java\"\n"
                            ".annotation runtime Lx/Y;\n  value = 1\n.end annotation\n"
                            ".method public static f()V\n.locals 1\n.line 3\n"
                            "const/4 v0, 0\n.local v0, \"x\":I\n.end local v0\nreturn-void\n"
                            ".end method\n");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(CountInstructions(r.program->classes[0].methods[0]), 2);
  int warnings = 0;
  for (const auto& d : r.diagnostics) warnings += d.severity == ParseDiagnostic::Severity::kWarning;
  EXPECT_EQ(warnings, 1);  // the annotation block only
}

TEST(SmaliParserTest, TryCatchAndSwitchPayloads) {
  SmaliProgram p = ParseOrDie(std::string(kHeader) +
                              ".method public static f(I)I\n.locals 1\n"
                              ":a\n  div-int v0, p0, p0\n:b\n"
                              ".catchall {:a .. :b} :h\n"
                              "  packed-switch p0, :t\n  return v0\n"
                              ":h\n  move-exception v0\n  const/4 v0, 0\n  return v0\n"
                              ":t\n.packed-switch 0x1\n  :h\n  :a\n.end packed-switch\n"
                              ".end method\n");
  const SmaliMethod& m = p.classes[0].methods[0];
  int tries = 0, payloads = 0;
  for (const BodyItem& item : m.body) {
    if (const auto* t = std::get_if<TryDirective>(&item)) {
      ++tries;
      EXPECT_FALSE(t->exception_type.has_value());
    }
    if (const auto* s = std::get_if<SwitchPayload>(&item)) {
      ++payloads;
      EXPECT_EQ(s->first_key, 1);
      EXPECT_EQ(s->targets, (std::vector<std::string>{"h", "a"}));
    }
  }
  EXPECT_EQ(tries, 1);
  EXPECT_EQ(payloads, 1);
}

TEST(SmaliParserTest, ClassFilePath) {
  EXPECT_EQ(ClassFilePath("Lcom/demo/Activity;"), "com/demo/Activity.smali");
  EXPECT_EQ(ClassFilePath("LTop;"), "Top.smali");
}

TEST(SmaliParserTest, TreeRoundTripOnDisk) {
  SmaliProgram p = LoadTree(FixtureDir() / "app" / "smali");
  auto dir = testing::TempDir("parser_tree");
  ASSERT_TRUE(WriteSmaliTree(p, dir).ok());
  EXPECT_EQ(LoadTree(dir), p);
}

}  // namespace
}  // namespace acv
