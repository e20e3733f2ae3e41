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

#include "acv/instrumenter.h"

#include "acv/verifier.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace acv {
namespace {

using testing::FixtureDir;
using testing::LoadTree;
using testing::ParseOrDie;

constexpr Granularity kAll[] = {Granularity::kInstruction, Granularity::kMethod,
                                Granularity::kClass};

Instrumented InstrumentOrDie(const SmaliProgram& p, Granularity g) {
  auto out = Instrument(p, g);
  if (!out.ok()) throw std::runtime_error(std::string(out.status().message()));
  return *std::move(out);
}

int CountKind(const ClassProbes& c, ProbeKind kind) {
  int n = 0;
  for (const ProbeTarget& p : c.probes) n += p.kind == kind;
  return n;
}

TEST(InstrumenterTest, MatchesListingThree) {
  SmaliProgram original = LoadTree(FixtureDir() / "listing2");
  SmaliProgram reference = LoadTree(FixtureDir() / "listing3");
  Instrumented inst = InstrumentOrDie(original, Granularity::kInstruction);
  const SmaliMethod* got = inst.program.FindMethod("Lcom/demo/Activity;", "updateElements()V");
  const SmaliMethod* want = reference.FindMethod("Lcom/demo/Activity;", "updateElements()V");
  ASSERT_NE(got, nullptr);
  ASSERT_NE(want, nullptr);
  testing::ListingMatch m = testing::CompareModuloProbes(*got, *want);
  EXPECT_TRUE(m.equal) << m.reason;
}

TEST(InstrumenterTest, ProbeIndicesAreDense) {
  SmaliProgram p = LoadTree(FixtureDir() / "app" / "smali");
  for (Granularity g : kAll) {
    Instrumented inst = InstrumentOrDie(p, g);
    EXPECT_EQ(inst.probe_map.granularity, g);
    ASSERT_EQ(inst.probe_map.classes.size(), p.classes.size());
    for (const ClassProbes& c : inst.probe_map.classes) {
      for (size_t i = 0; i < c.probes.size(); ++i) EXPECT_EQ(c.probes[i].index, static_cast<int>(i));
    }
  }
}

TEST(InstrumenterTest, ProbeKindsFollowGranularity) {
  SmaliProgram p = LoadTree(FixtureDir() / "app" / "smali");
  const ClassProbes* calc;

  Instrumented ins = InstrumentOrDie(p, Granularity::kInstruction);
  calc = ins.probe_map.Find("Lcom/demo/Calc;");
  ASSERT_NE(calc, nullptr);
  EXPECT_EQ(CountKind(*calc, ProbeKind::kEntry), 3);
  // add: if-lez sget add-int sput const; safeDiv: div-int move-exception
  // const; unused: const. Returns and the invoke are untraceable.
  EXPECT_EQ(CountKind(*calc, ProbeKind::kInstruction), 9);
  EXPECT_EQ(calc->traceable_count, 9);
  EXPECT_EQ(calc->untraceable_count, 6);
  EXPECT_EQ(CountKind(*calc, ProbeKind::kClass), 0);

  Instrumented met = InstrumentOrDie(p, Granularity::kMethod);
  calc = met.probe_map.Find("Lcom/demo/Calc;");
  EXPECT_EQ(calc->probes.size(), 3u);
  EXPECT_EQ(CountKind(*calc, ProbeKind::kEntry), 3);

  Instrumented cls = InstrumentOrDie(p, Granularity::kClass);
  calc = cls.probe_map.Find("Lcom/demo/Calc;");
  ASSERT_EQ(calc->probes.size(), 1u);
  EXPECT_EQ(calc->probes[0].kind, ProbeKind::kClass);
}

TEST(InstrumenterTest, EveryTraceableInstructionHasOneProbe) {
  for (const FaultCorpusProgram& c : GenerateCorpusSerial(5, 10)) {
    Instrumented inst = InstrumentOrDie(c.program, Granularity::kInstruction);
    for (const SmaliClass& cls : c.program.classes) {
      const ClassProbes* probes = inst.probe_map.Find(cls.name);
      ASSERT_NE(probes, nullptr);
      std::set<std::pair<std::string, int>> seen;
      for (const ProbeTarget& t : probes->probes) {
        if (t.kind != ProbeKind::kInstruction) continue;
        EXPECT_TRUE(seen.emplace(t.method, t.body_index).second);
      }
      std::set<std::pair<std::string, int>> want;
      for (const SmaliMethod& m : cls.methods) {
        for (size_t k = 0; k < m.body.size(); ++k) {
          const Instruction* in = AsInstruction(m.body[k]);
          if (in != nullptr && Traceable(*in)) want.emplace(m.Id(), static_cast<int>(k));
        }
      }
      EXPECT_EQ(seen, want) << c.name << " " << cls.name;
    }
  }
}

TEST(InstrumenterTest, OutputVerifiesAndIsMarked) {
  SmaliProgram p = LoadTree(FixtureDir() / "listing2");
  EXPECT_FALSE(IsInstrumented(p));
  for (Granularity g : kAll) {
    Instrumented inst = InstrumentOrDie(p, g);
    EXPECT_TRUE(IsInstrumented(inst.program));
    EXPECT_NE(inst.program.FindClass(kStorageClass), nullptr);
    EXPECT_TRUE(Verify(inst.program).ok());
  }
}

TEST(InstrumenterTest, RejectsInstrumentedInput) {
  SmaliProgram p = LoadTree(FixtureDir() / "listing2");
  Instrumented once = InstrumentOrDie(p, Granularity::kMethod);
  auto twice = Instrument(once.program, Granularity::kMethod);
  EXPECT_EQ(twice.status().code(), absl::StatusCode::kInvalidArgument);
}

TEST(InstrumenterTest, RejectsReservedLabels) {
  SmaliProgram p = ParseOrDie(
      ".class public LA;\n.super Ljava/lang/Object;\n"
      ".method public static f()V\n.locals 0\n:goto_hack_1\nreturn-void\n.end method\n");
  EXPECT_EQ(Instrument(p, Granularity::kInstruction).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(InstrumenterTest, FrameOverflowNamesMethod) {
  SmaliProgram p = LoadTree(FixtureDir() / "frame_overflow" / "instance");
  ASSERT_TRUE(Verify(p).ok());
  for (Granularity g : kAll) {
    auto inst = Instrument(p, g);
    ASSERT_EQ(inst.status().code(), absl::StatusCode::kResourceExhausted);
    std::string msg(inst.status().message());
    EXPECT_NE(msg.find("FrameOverflow"), std::string::npos) << msg;
    EXPECT_NE(msg.find("sum(IJ)I"), std::string::npos) << msg;
  }
}

TEST(InstrumenterTest, ThreeFreeRegistersAreEnough) {
  SmaliProgram p = ParseOrDie(
      ".class public LA;\n.super Ljava/lang/Object;\n"
      ".method public static f(I)V\n.locals 252\nreturn-void\n.end method\n");
  auto inst = Instrument(p, Granularity::kInstruction);
  ASSERT_TRUE(inst.ok()) << inst.status();
  EXPECT_TRUE(Verify(inst->program).ok());
}

TEST(InstrumenterTest, ProbeMapJsonRoundTrip) {
  SmaliProgram p = LoadTree(FixtureDir() / "app" / "smali");
  for (Granularity g : kAll) {
    Instrumented inst = InstrumentOrDie(p, g);
    auto back = ProbeMapFromJson(ProbeMapToJson(inst.probe_map));
    ASSERT_TRUE(back.ok()) << back.status();
    EXPECT_EQ(*back, inst.probe_map);
  }
  EXPECT_FALSE(ProbeMapFromJson("{").ok());
  EXPECT_FALSE(ProbeMapFromJson(R"({"version": 9, "granularity": "method", "classes": []})").ok());
}

// Instrumented bodies address parameters through the locals they are copied
// into on entry.
BodyItem ParamsAsLocals(const SmaliMethod& m, int k) {
  BodyItem item = m.body[k];
  if (auto* in = std::get_if<Instruction>(&item)) {
    for (Reg& r : in->regs) {
      if (r.space == Reg::Space::kParam) r = {Reg::Space::kLocal, r.index + m.locals};
    }
  }
  return item;
}

TEST(InstrumenterTest, OriginMapRecoversOriginalBody) {
  for (const FaultCorpusProgram& c : GenerateCorpusSerial(9, 10)) {
    for (Granularity g : kAll) {
      Instrumented inst = InstrumentOrDie(c.program, g);
      for (const SmaliClass& cls : c.program.classes) {
        for (const SmaliMethod& m : cls.methods) {
          const SmaliMethod* im = inst.program.FindMethod(cls.name, m.Id());
          ASSERT_NE(im, nullptr);
          std::vector<int> origin = RecoverOriginMap(*im);
          ASSERT_EQ(origin.size(), im->body.size());
          std::vector<int> seen;
          for (size_t k = 0; k < origin.size(); ++k) {
            if (origin[k] < 0) continue;
            seen.push_back(origin[k]);
            EXPECT_EQ(FormatBodyItem(im->body[k]), FormatBodyItem(ParamsAsLocals(m, origin[k])))
                << c.name << " " << m.Id();
          }
          std::vector<int> all(m.body.size());
          for (size_t k = 0; k < all.size(); ++k) all[k] = static_cast<int>(k);
          EXPECT_EQ(seen, all) << c.name << " " << m.Id();
        }
      }
    }
  }
}

TEST(InstrumenterTest, InflationOrdering) {
  SmaliProgram p = LoadTree(FixtureDir() / "app" / "smali");
  double by[3];
  for (Granularity g : kAll) {
    Instrumented inst = InstrumentOrDie(p, g);
    InflationStats s = Inflation(p, inst.program);
    EXPECT_EQ(s.original_instructions, CountInstructions(p));
    EXPECT_GT(s.ratio, 1.0);
    by[static_cast<int>(g)] = s.ratio;
  }
  EXPECT_GT(by[0], by[1]);
  EXPECT_GE(by[1], by[2]);
}

TEST(InstrumenterTest, GranularityNames) {
  for (Granularity g : kAll) EXPECT_EQ(ParseGranularity(GranularityName(g)), g);
  EXPECT_FALSE(ParseGranularity("line").has_value());
}

}  // namespace
}  // namespace acv
