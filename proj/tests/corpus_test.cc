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

#include "acv/corpus.h"

#include "acv/builtins.h"
#include "acv/verifier.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace acv {
namespace {

void ExpectSame(const FaultCorpusProgram& a, const FaultCorpusProgram& b) {
  EXPECT_EQ(a.name, b.name);
  EXPECT_EQ(a.program, b.program);
  ASSERT_EQ(a.sources.size(), b.sources.size());
  for (size_t i = 0; i < a.sources.size(); ++i) EXPECT_EQ(a.sources[i].text, b.sources[i].text);
  EXPECT_EQ(FaultsToJson(a), FaultsToJson(b));
}

TEST(CorpusTest, Deterministic) {
  for (int i : {0, 7, 123}) ExpectSame(GenerateProgram(42, i), GenerateProgram(42, i));
  EXPECT_NE(GenerateProgram(42, 3).program, GenerateProgram(43, 3).program);
  EXPECT_NE(GenerateProgram(42, 3).program, GenerateProgram(42, 4).program);
}

TEST(CorpusTest, ParallelMatchesSerial) {
  auto par = GenerateCorpus(17, 40);
  auto ser = GenerateCorpusSerial(17, 40);
  ASSERT_EQ(par.size(), 40u);
  ASSERT_EQ(ser.size(), 40u);
  for (size_t i = 0; i < par.size(); ++i) ExpectSame(par[i], ser[i]);
  // Independent of the corpus size.
  ExpectSame(GenerateProgram(17, 39), ser[39]);
}

TEST(CorpusTest, EmptyCorpus) {
  EXPECT_TRUE(GenerateCorpus(1, 0).empty());
  EXPECT_TRUE(GenerateCorpusSerial(1, 0).empty());
}

TEST(CorpusTest, ProgramsAreWellFormed) {
  for (const FaultCorpusProgram& c : GenerateCorpusSerial(2026, 30)) {
    EXPECT_EQ(c.name, fmt::format("p{:03d}", c.index));
    EXPECT_TRUE(Verify(c.program).ok()) << c.name;
    EXPECT_GE(c.faults.size(), 1u);
    EXPECT_LE(c.faults.size(), 5u);
    EXPECT_FALSE(c.program.entry_points.empty());
    ParseResult again = Parse(c.sources);
    ASSERT_TRUE(again.ok()) << c.name;
    EXPECT_EQ(*again.program, c.program);
  }
}

TEST(CorpusTest, EveryWitnessTriggersItsFault) {
  std::map<FaultKind, int> kinds;
  for (const FaultCorpusProgram& c : GenerateCorpusSerial(99, 60)) {
    auto linked = Link(c.program);
    ASSERT_TRUE(linked.ok()) << c.name << ": " << linked.status();
    for (const PlantedFault& f : c.faults) {
      ++kinds[f.kind];
      auto vm = Vm::Create(*linked);
      ASSERT_TRUE(vm.ok());
      ScriptOutcome out = RunScript(**vm, f.witness);
      ASSERT_TRUE(out.status.ok()) << c.name << ": " << out.status;
      ASSERT_FALSE(out.crashes.empty()) << c.name << " " << f.location.method;
      EXPECT_EQ(out.crashes.back().Key(), f.location) << c.name;
      EXPECT_EQ(out.crashes.back().seq, static_cast<int64_t>(out.calls.size()) - 1);
      // The location names the instruction that raises.
      const SmaliMethod* m = c.program.FindMethod(f.location.class_name, f.location.method);
      ASSERT_NE(m, nullptr);
      const Instruction* in = AsInstruction(m->body.at(f.location.body_index));
      ASSERT_NE(in, nullptr);
      switch (f.kind) {
        case FaultKind::kDivByZero:
          EXPECT_EQ(f.location.exception_type, kArithmeticException);
          break;
        case FaultKind::kNullDeref:
          EXPECT_EQ(f.location.exception_type, kNullPointerException);
          break;
        case FaultKind::kThrow:
          EXPECT_EQ(in->opcode, Opcode::kThrow);
          break;
      }
    }
  }
  EXPECT_GT(kinds[FaultKind::kDivByZero], 0);
  EXPECT_GT(kinds[FaultKind::kNullDeref], 0);
  EXPECT_GT(kinds[FaultKind::kThrow], 0);
}

TEST(CorpusTest, FaultsJsonNamesLocations) {
  FaultCorpusProgram c = GenerateProgram(5, 0);
  std::string json = FaultsToJson(c);
  for (const PlantedFault& f : c.faults) {
    EXPECT_NE(json.find(f.location.method), std::string::npos);
    EXPECT_NE(json.find(std::string(FaultKindName(f.kind))), std::string::npos);
  }
}

}  // namespace
}  // namespace acv
