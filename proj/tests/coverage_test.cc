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

#include "acv/coverage.h"

#include "gtest/gtest.h"
#include "test_util.h"

namespace acv {
namespace {

using testing::FixtureDir;
using testing::LoadTree;

struct AppRun {
  Instrumented inst;
  RuntimeReport runtime;
};

AppRun RunApp(Granularity g) {
  SmaliProgram p = LoadTree(FixtureDir() / "app" / "smali");
  auto inst = Instrument(p, g);
  if (!inst.ok()) throw std::runtime_error(std::string(inst.status().message()));
  auto vm = Vm::Create(*Link(inst->program));
  if (!vm.ok()) throw std::runtime_error(std::string(vm.status().message()));
  auto script = ParseScript(testing::ReadText(FixtureDir() / "app" / "run.script"));
  ScriptOutcome out = RunScript(**vm, *script);
  if (!out.status.ok()) throw std::runtime_error(std::string(out.status.message()));
  auto runtime = CollectRuntime(**vm, inst->probe_map);
  if (!runtime.ok()) throw std::runtime_error(std::string(runtime.status().message()));
  return {*std::move(inst), *std::move(runtime)};
}

RuntimeReport Sample() {
  return {{{"La/B;", {true, false, true}}, {"Lc;", {}}, {"Ld;", std::vector<bool>(17, true)}}};
}

Counter At(const Counters& c, CounterType t) { return c[static_cast<int>(t)]; }

TEST(AcvrTest, RoundTrip) {
  RuntimeReport r = Sample();
  std::string bytes = EncodeRuntime(r);
  EXPECT_EQ(bytes.substr(0, 4), "ACVR");
  auto back = DecodeRuntime(bytes);
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(*back, r);
}

TEST(AcvrTest, HeaderLayout) {
  std::string bytes = EncodeRuntime({});
  ASSERT_EQ(bytes.size(), kAcvrHeaderSize);
  EXPECT_EQ(static_cast<uint8_t>(bytes[4]), kAcvrVersion);  // little endian
  EXPECT_EQ(bytes[5], 0);
}

TEST(AcvrTest, BitsArePackedLsbFirst) {
  std::string bytes = EncodeRuntime({{{"X", {true, false, false, true, false, false, false, false, true}}}});
  // header, u16 name length, name, u32 bit count, two bytes of bits
  ASSERT_EQ(bytes.size(), kAcvrHeaderSize + 2 + 1 + 4 + 2);
  EXPECT_EQ(static_cast<uint8_t>(bytes[bytes.size() - 2]), 0x09);
  EXPECT_EQ(static_cast<uint8_t>(bytes[bytes.size() - 1]), 0x01);
}

TEST(AcvrTest, RejectsDamage) {
  std::string good = EncodeRuntime(Sample());
  auto expect_format_error = [](std::string bytes, const char* what) {
    auto r = DecodeRuntime(bytes);
    ASSERT_FALSE(r.ok()) << what;
    EXPECT_EQ(r.status().code(), absl::StatusCode::kDataLoss) << what;
    EXPECT_NE(std::string(r.status().message()).find("FormatError"), std::string::npos) << what;
  };
  std::string bad = good;
  bad[0] = 'X';
  expect_format_error(bad, "magic");
  bad = good;
  bad[4] = 9;
  expect_format_error(bad, "version");
  expect_format_error(good.substr(0, good.size() - 1), "truncated");
  expect_format_error(good + "x", "trailing");
  expect_format_error("", "empty");
}

TEST(AcvrTest, FileRoundTrip) {
  auto dir = testing::TempDir("acvr");
  ASSERT_TRUE(WriteRuntime(Sample(), dir / "r.acvr").ok());
  auto back = ReadRuntime(dir / "r.acvr");
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back, Sample());
  EXPECT_FALSE(ReadRuntime(dir / "missing.acvr").ok());
}

TEST(MergeTest, IsBitwiseOr) {
  RuntimeReport a = {{{"A", {true, false, false}}}};
  RuntimeReport b = {{{"A", {false, false, true}}}};
  std::vector<RuntimeReport> both = {a, b};
  auto m = Merge(both);
  ASSERT_TRUE(m.ok());
  EXPECT_EQ(m->classes[0].bits, (std::vector<bool>{true, false, true}));
}

TEST(MergeTest, ShapeMismatchIsReportMismatch) {
  std::vector<RuntimeReport> reports = {{{{"A", {true}}}}, {{{"A", {true, false}}}}};
  auto m = Merge(reports);
  ASSERT_FALSE(m.ok());
  EXPECT_EQ(m.status().code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_NE(std::string(m.status().message()).find("ReportMismatch"), std::string::npos);
  reports = {{{{"A", {true}}}}, {{{"B", {true}}}}};
  EXPECT_FALSE(Merge(reports).ok());
}

TEST(MergeTest, CoverageIsMonotone) {
  AppRun run = RunApp(Granularity::kInstruction);
  RuntimeReport empty = EmptyRuntime(run.inst.probe_map);
  std::vector<RuntimeReport> both = {empty, run.runtime};
  auto merged = Merge(both);
  ASSERT_TRUE(merged.ok());
  EXPECT_EQ(*merged, run.runtime);
  auto before = Compute(run.inst.probe_map, empty);
  auto after = Compute(run.inst.probe_map, *merged);
  ASSERT_TRUE(before.ok() && after.ok());
  for (CounterType t : kCounterTypes) {
    EXPECT_LE(At(before->counters, t).covered, At(after->counters, t).covered);
    EXPECT_EQ(At(before->counters, t).total(), At(after->counters, t).total());
  }
}

TEST(ComputeTest, ShapeIsChecked) {
  AppRun run = RunApp(Granularity::kMethod);
  RuntimeReport wrong = run.runtime;
  wrong.classes[0].bits.push_back(false);
  EXPECT_FALSE(CheckShape(wrong, run.inst.probe_map).ok());
  EXPECT_FALSE(Compute(run.inst.probe_map, wrong).ok());
}

TEST(ComputeTest, EmptyRuntimeIsZeroCoverage) {
  for (Granularity g : {Granularity::kInstruction, Granularity::kMethod, Granularity::kClass}) {
    AppRun run = RunApp(g);
    auto report = Compute(run.inst.probe_map, EmptyRuntime(run.inst.probe_map));
    ASSERT_TRUE(report.ok());
    for (CounterType t : kCounterTypes) {
      if (!report->Has(t)) continue;
      EXPECT_EQ(At(report->counters, t).covered, 0);
      EXPECT_GT(At(report->counters, t).missed, 0);
    }
    EXPECT_TRUE(CheckConservation(*report).ok());
  }
}

TEST(ComputeTest, HandCountedFixture) {
  AppRun run = RunApp(Granularity::kInstruction);
  auto report = Compute(run.inst.probe_map, run.runtime);
  ASSERT_TRUE(report.ok());
  EXPECT_EQ(At(report->counters, CounterType::kInstruction), (Counter{6, 4}));
  EXPECT_EQ(At(report->counters, CounterType::kMethod), (Counter{2, 2}));
  EXPECT_EQ(At(report->counters, CounterType::kClass), (Counter{1, 1}));
  ASSERT_EQ(report->classes.size(), 2u);
  const ClassCoverage& calc = report->classes[0];
  EXPECT_EQ(calc.name, "Lcom/demo/Calc;");
  EXPECT_TRUE(calc.covered);
  ASSERT_EQ(calc.methods.size(), 3u);
  EXPECT_EQ(calc.methods[1].id, "safeDiv(II)I");
  // div-int raised, so only the handler is covered.
  std::vector<InstructionCoverage> want = {{1, false}, {6, true}, {7, true}};
  EXPECT_EQ(calc.methods[1].instructions, want);
  EXPECT_FALSE(report->classes[1].covered);
  EXPECT_TRUE(CheckConservation(*report).ok());
}

TEST(ComputeTest, GranularityDecidesMeasuredCounters) {
  AppRun method_run = RunApp(Granularity::kMethod);
  auto method = Compute(method_run.inst.probe_map, method_run.runtime);
  ASSERT_TRUE(method.ok());
  EXPECT_FALSE(method->Has(CounterType::kInstruction));
  EXPECT_TRUE(method->Has(CounterType::kMethod));
  EXPECT_EQ(At(method->counters, CounterType::kMethod), (Counter{2, 2}));
  EXPECT_EQ(At(method->counters, CounterType::kClass), (Counter{1, 1}));

  AppRun cls_run = RunApp(Granularity::kClass);
  auto cls = Compute(cls_run.inst.probe_map, cls_run.runtime);
  ASSERT_TRUE(cls.ok());
  EXPECT_FALSE(cls->Has(CounterType::kMethod));
  EXPECT_EQ(At(cls->counters, CounterType::kClass), (Counter{1, 1}));
}

TEST(ComputeTest, ConservationCatchesTampering) {
  AppRun run = RunApp(Granularity::kInstruction);
  auto report = Compute(run.inst.probe_map, run.runtime);
  ASSERT_TRUE(report.ok());
  report->counters[0].covered += 1;
  EXPECT_FALSE(CheckConservation(*report).ok());
}

TEST(ReportTest, SummaryText) {
  AppRun run = RunApp(Granularity::kInstruction);
  auto report = Compute(run.inst.probe_map, run.runtime);
  std::string text = FormatSummary(*report);
  EXPECT_NE(text.find("INSTRUCTION   60.00% (6/10)"), std::string::npos) << text;
  EXPECT_NE(text.find("METHOD        50.00% (2/4)"), std::string::npos) << text;
  EXPECT_NE(text.find("CLASS         50.00% (1/2)"), std::string::npos) << text;
}

TEST(ReportTest, XmlRoundTrip) {
  for (Granularity g : {Granularity::kInstruction, Granularity::kMethod, Granularity::kClass}) {
    AppRun run = RunApp(g);
    auto report = Compute(run.inst.probe_map, run.runtime);
    ASSERT_TRUE(report.ok());
    std::string xml = EmitXml(*report, "a&b");
    auto tree = ReadXmlCounters(xml);
    ASSERT_TRUE(tree.ok()) << tree.status();
    EXPECT_EQ(*tree, CounterTree(*report, "a&b"));
    EXPECT_EQ(tree->name, "a&b");
  }
}

TEST(ReportTest, XmlMatchesGolden) {
  AppRun run = RunApp(Granularity::kInstruction);
  auto report = Compute(run.inst.probe_map, run.runtime);
  EXPECT_EQ(EmitXml(*report), testing::ReadText(FixtureDir() / "app" / "golden.xml"));
}

TEST(ReportTest, MalformedXmlIsRejected) {
  EXPECT_FALSE(ReadXmlCounters("<report>").ok());
  EXPECT_FALSE(ReadXmlCounters("<other/>").ok());
  EXPECT_FALSE(ReadXmlCounters("<report><method name=\"x\"/></report>").ok());
  EXPECT_FALSE(ReadXmlCounters("<report><counter type=\"CLASS\"/></report>").ok());
}

TEST(ReportTest, HtmlPages) {
  AppRun run = RunApp(Granularity::kInstruction);
  auto report = Compute(run.inst.probe_map, run.runtime);
  SmaliProgram p = LoadTree(FixtureDir() / "app" / "smali");
  auto dir = testing::TempDir("html");
  ASSERT_TRUE(EmitHtml(*report, &p, dir).ok());
  std::string index = testing::ReadText(dir / "index.html");
  size_t calc = index.find("Lcom/demo/Calc;");
  size_t idle = index.find("Lcom/demo/Idle;");
  ASSERT_NE(calc, std::string::npos);
  ASSERT_NE(idle, std::string::npos);
  EXPECT_LT(calc, idle);  // probe map order
  EXPECT_EQ(index.find("<script"), std::string::npos);

  std::string page = testing::ReadText(dir / HtmlPageName("Lcom/demo/Calc;"));
  EXPECT_NE(page.find("<pre class=\"missed\">    div-int v0, p0, p1</pre>"), std::string::npos);
  EXPECT_NE(page.find("<pre class=\"covered\">    move-exception v0</pre>"), std::string::npos);
  EXPECT_NE(page.find("<pre class=\"untraceable\">    return v0</pre>"), std::string::npos);
  size_t add = page.find("<h2>add(I)I");
  size_t div = page.find("<h2>safeDiv(II)I");
  size_t unused = page.find("<h2>unused()V");
  EXPECT_LT(add, div);
  EXPECT_LT(div, unused);
}

}  // namespace
}  // namespace acv
