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

#include <random>
#include <stdexcept>

#include "json.hpp"
#include "acv/builtins.h"
#include "acv/strings.h"

namespace acv {
namespace {

enum class Guard { kGreater, kResidue, kEquals, kHelper, kVirtual, kCounter };

class Rng {
 public:
  Rng(uint64_t seed, int index) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                      static_cast<uint32_t>(index)};
    gen_.seed(seq);
  }
  int Uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  bool Chance(double p) { return std::bernoulli_distribution(p)(gen_); }

 private:
  std::mt19937_64 gen_;
};

// Lines of one method body with a private label counter.
class Body {
 public:
  void Op(std::string line) { lines_.push_back("    " + std::move(line)); }
  void Label(std::string_view name) { lines_.push_back(StrCat(":", name)); }
  std::string NewLabel(std::string_view stem) { return StrCat(stem, "_", next_++); }
  std::string Text() const { return StrCat(StrJoin(lines_, "\n"), "\n"); }

 private:
  std::vector<std::string> lines_;
  int next_ = 0;
};

std::string Method(std::string_view decl, int locals, const Body& body) {
  return StrCat(".method ", decl, "\n    .locals ", locals, "\n", body.Text(), ".end method\n\n");
}

std::string Constructor(std::string_view super_name) {
  Body b;
  b.Op(StrCat("invoke-direct {p0}, ", super_name, "-><init>()V"));
  b.Op("return-void");
  return Method("public constructor <init>()V", 0, b);
}

class Generator {
 public:
  Generator(uint64_t seed, int index) : rng_(seed, index), seed_(seed), index_(index) {
    pkg_ = fmt::format("Lcorpus/p{:03d}/", index);
    main_ = StrCat(pkg_, "Main;");
    base_ = StrCat(pkg_, "Base;");
    derived_ = StrCat(pkg_, "Derived;");
    boom_ = StrCat(pkg_, "Boom;");
  }

  FaultCorpusProgram Run() {
    FaultCorpusProgram out;
    out.seed = seed_;
    out.index = index_;
    out.name = fmt::format("p{:03d}", index_);

    tick_threshold_ = rng_.Uniform(-20, 60);
    derived_offset_ = rng_.Uniform(-5, 5);

    std::string methods;
    int fault_count = rng_.Uniform(1, 5);
    for (int k = 0; k < fault_count; ++k) methods += FaultMethod(k);
    methods += TickMethod();
    methods += LoopMethod();
    methods += SwitchMethod();
    methods += SafeDivMethod();
    methods += PolyMethod();

    std::string main_text = StrCat(".class public ", main_, "\n.super ", kObjectClass, "\n\n",
                                   ".field public static state:I\n",
                                   ".field public static lock:Ljava/lang/Object;\n\n",
                                   ClinitMethod(), methods, helpers_);
    auto path = [&](std::string_view cls) { return StrCat(out.name, "/", cls, ".smali"); };
    out.sources = {
        {path("Base"), BaseClass()},
        {path("Boom"), BoomClass()},
        {path("Derived"), DerivedClass()},
        {path("Main"), main_text},
    };
    ParseResult parsed = Parse(out.sources);
    if (!parsed.ok()) {
      std::string msg;
      for (const auto& d : parsed.diagnostics) StrAppend(&msg, FormatDiagnostic(d), "\n");
      throw std::logic_error(StrCat("corpus generator produced invalid smali:\n", msg));
    }
    out.program = *std::move(parsed.program);
    const SmaliClass* main = out.program.FindClass(main_);
    for (Pending& p : pending_) {
      const SmaliMethod* m = main->FindMethod(p.method);
      int label = FindLabel(m->body, p.label);
      p.fault.location = {main_, p.method, label + 1, p.exception};
      out.faults.push_back(std::move(p.fault));
    }
    return out;
  }

 private:
  struct Pending {
    PlantedFault fault;
    std::string method;
    std::string label;
    std::string exception;
  };

  static ScriptEvent Event(std::string_view cls, std::string_view method, std::vector<int> args) {
    ScriptEvent e;
    e.class_name = std::string(cls);
    e.method = std::string(method);
    for (int a : args) e.args.push_back(std::to_string(a));
    return e;
  }

  std::string ClinitMethod() const {
    Body b;
    b.Op("const/4 v0, 0");
    b.Op(StrCat("sput v0, ", main_, "->state:I"));
    b.Op(StrCat("new-instance v0, ", kObjectClass));
    b.Op(StrCat("invoke-direct {v0}, ", kObjectClass, "-><init>()V"));
    b.Op(StrCat("sput-object v0, ", main_, "->lock:Ljava/lang/Object;"));
    b.Op("return-void");
    return Method("static constructor <clinit>()V", 1, b);
  }

  // check<k>(I)Z: sums 0..(x % 16)-1 under the lock and compares.
  std::string HelperFor(int k, int witness) {
    int n = witness % 16;
    int target = n > 0 ? n * (n - 1) / 2 : 0;
    Body b;
    std::string loop = b.NewLabel("loop"), done = b.NewLabel("done"), no = b.NewLabel("no");
    b.Op("rem-int/lit8 v0, p0, 16");
    b.Op("const/4 v1, 0");
    b.Op("const/4 v2, 0");
    b.Op(StrCat("sget-object v3, ", main_, "->lock:Ljava/lang/Object;"));
    b.Op("monitor-enter v3");
    b.Label(loop);
    b.Op(StrCat("if-ge v1, v0, :", done));
    b.Op("add-int/2addr v2, v1");
    b.Op("add-int/lit8 v1, v1, 1");
    b.Op(StrCat("goto :", loop));
    b.Label(done);
    b.Op("monitor-exit v3");
    b.Op(StrCat("const/16 v0, ", target));
    b.Op(StrCat("if-ne v2, v0, :", no));
    b.Op("const/4 v0, 1");
    b.Op("return v0");
    b.Label(no);
    b.Op("const/4 v0, 0");
    b.Op("return v0");
    std::string name = StrCat("check", k);
    helpers_ += Method(StrCat("public static ", name, "(I)Z"), 4, b);
    return StrCat(name, "(I)Z");
  }

  std::string FaultMethod(int k) {
    const int a = rng_.Uniform(kArgMin, kArgMax);
    const int b_arg = rng_.Uniform(kArgMin, kArgMax);
    const std::string id = StrCat("f", k, "(II)V");
    Body b;
    std::string skip = b.NewLabel("skip");
    int ticks = 0;
    int guards = rng_.Uniform(1, 3);
    for (int g = 0; g < guards; ++g) {
      // p0 is a, p1 is b.
      const bool on_a = rng_.Chance(0.5);
      const std::string reg = on_a ? "p0" : "p1";
      const int w = on_a ? a : b_arg;
      switch (static_cast<Guard>(rng_.Uniform(0, 5))) {
        case Guard::kGreater:
          b.Op(StrCat("const/16 v0, ", w - rng_.Uniform(1, 60)));
          b.Op(StrCat("if-le ", reg, ", v0, :", skip));
          break;
        case Guard::kResidue: {
          int m = rng_.Uniform(3, 9);
          b.Op(StrCat("rem-int/lit8 v0, ", reg, ", ", m));
          b.Op(StrCat("const/16 v1, ", w % m));
          b.Op(StrCat("if-ne v0, v1, :", skip));
          break;
        }
        case Guard::kEquals:
          b.Op(StrCat("const/16 v0, ", w));
          b.Op(StrCat("if-ne ", reg, ", v0, :", skip));
          break;
        case Guard::kHelper:
          b.Op(StrCat("invoke-static {", reg, "}, ", main_, "->", HelperFor(helper_count_++, w)));
          b.Op("move-result v0");
          b.Op(StrCat("if-eqz v0, :", skip));
          break;
        case Guard::kVirtual:
          b.Op(StrCat("new-instance v2, ", derived_));
          b.Op(StrCat("invoke-direct {v2}, ", derived_, "-><init>()V"));
          b.Op(StrCat("invoke-virtual {v2, ", reg, "}, ", base_, "->calc(I)I"));
          b.Op("move-result v0");
          b.Op(StrCat("const/16 v1, ", 2 * w + derived_offset_));
          b.Op(StrCat("if-ne v0, v1, :", skip));
          break;
        case Guard::kCounter:
          ticks = std::max(ticks, rng_.Uniform(2, 3));
          b.Op(StrCat("sget v0, ", main_, "->state:I"));
          b.Op(StrCat("const/4 v1, ", ticks));
          b.Op(StrCat("if-lt v0, v1, :", skip));
          break;
      }
      if (rng_.Chance(0.5)) b.Op(StrCat("invoke-static {", reg, "}, ", kRuntimeClass, "->emit(I)V"));
      if (rng_.Chance(0.3)) b.Op("add-int v5, p0, p1");
    }

    Pending p;
    p.method = id;
    p.label = StrCat("fault_", k);
    p.fault.kind = static_cast<FaultKind>(rng_.Uniform(0, 2));
    const bool wrap = rng_.Chance(0.3);
    std::string try_start = b.NewLabel("try_start"), try_end = b.NewLabel("try_end");
    std::string handler = b.NewLabel("handler");
    if (wrap) b.Label(try_start);
    std::string unrelated;
    switch (p.fault.kind) {
      case FaultKind::kDivByZero:
        p.exception = std::string(kArithmeticException);
        unrelated = std::string(kNullPointerException);
        b.Op("const/4 v3, 0");
        b.Label(p.label);
        b.Op("div-int v4, p0, v3");
        break;
      case FaultKind::kNullDeref:
        p.exception = std::string(kNullPointerException);
        unrelated = std::string(kArithmeticException);
        b.Op("const/4 v3, 0");
        b.Label(p.label);
        b.Op(StrCat("iget v4, v3, ", base_, "->f:I"));
        break;
      case FaultKind::kThrow:
        p.exception = boom_;
        unrelated = std::string(kArithmeticException);
        b.Op(StrCat("new-instance v3, ", boom_));
        b.Op(StrCat("invoke-direct {v3}, ", boom_, "-><init>()V"));
        b.Label(p.label);
        b.Op("throw v3");
        break;
    }
    if (wrap) {
      b.Label(try_end);
      b.Op(StrCat(".catch ", unrelated, " {:", try_start, " .. :", try_end, "} :", handler));
    }
    if (p.fault.kind != FaultKind::kThrow) {
      b.Op(StrCat("invoke-static {v4}, ", kRuntimeClass, "->emit(I)V"));
    }
    b.Label(skip);
    b.Op("return-void");
    if (wrap) {
      b.Label(handler);
      b.Op("move-exception v3");
      b.Op("return-void");
    }

    for (int t = 0; t < ticks; ++t) {
      p.fault.witness.push_back(Event(main_, "tick(I)V", {rng_.Uniform(tick_threshold_ + 1, kArgMax)}));
    }
    p.fault.witness.push_back(Event(main_, id, {a, b_arg}));
    pending_.push_back(std::move(p));
    return Method(StrCat("public static ", id), 6, b);
  }

  std::string TickMethod() const {
    Body b;
    b.Op(StrCat("const/16 v0, ", tick_threshold_));
    b.Op("if-le p0, v0, :end");
    b.Op(StrCat("sget v0, ", main_, "->state:I"));
    b.Op("add-int/lit8 v0, v0, 1");
    b.Op(StrCat("sput v0, ", main_, "->state:I"));
    b.Label("end");
    b.Op("return-void");
    return Method("public static tick(I)V", 1, b);
  }

  std::string LoopMethod() const {
    Body b;
    b.Op("rem-int/lit8 v0, p0, 20");
    b.Op("const/4 v1, 0");
    b.Op("const/4 v2, 0");
    b.Label("head");
    b.Op("if-ge v1, v0, :exit");
    b.Op("mul-int v3, v1, v1");
    b.Op("add-int/2addr v2, v3");
    b.Op("add-int/lit8 v1, v1, 1");
    b.Op("goto :head");
    b.Label("exit");
    b.Op("return v2");
    return Method("public static loop(I)I", 4, b);
  }

  std::string SwitchMethod() const {
    Body b;
    b.Op("rem-int/lit8 v0, p0, 4");
    b.Op("packed-switch v0, :table");
    b.Op("const/4 v1, -1");
    b.Op("return v1");
    for (int c = 0; c < 4; ++c) {
      b.Label(StrCat("case_", c));
      b.Op(StrCat("mul-int/lit8 v1, p0, ", c + 2));
      b.Op("return v1");
    }
    b.Label("table");
    b.Op(".packed-switch 0x0");
    for (int c = 0; c < 4; ++c) b.Op(StrCat("    :case_", c));
    b.Op(".end packed-switch");
    return Method("public static sw(I)I", 2, b);
  }

  std::string SafeDivMethod() const {
    Body b;
    b.Label("try_start");
    b.Op("div-int v0, p0, p1");
    b.Label("try_end");
    b.Op(StrCat(".catch ", kArithmeticException, " {:try_start .. :try_end} :handler"));
    b.Op("return v0");
    b.Label("handler");
    b.Op("move-exception v1");
    b.Op("const/4 v0, -1");
    b.Op("return v0");
    return Method("public static safeDiv(II)I", 2, b);
  }

  std::string PolyMethod() const {
    Body b;
    b.Op(StrCat("new-instance v0, ", base_));
    b.Op(StrCat("invoke-direct {v0}, ", base_, "-><init>()V"));
    b.Op("if-gez p0, :call");
    b.Op(StrCat("new-instance v0, ", derived_));
    b.Op(StrCat("invoke-direct {v0}, ", derived_, "-><init>()V"));
    b.Label("call");
    b.Op(StrCat("invoke-virtual {v0, p0}, ", base_, "->calc(I)I"));
    b.Op("move-result v1");
    b.Op(StrCat("iput v1, v0, ", base_, "->f:I"));
    b.Op(StrCat("iget v1, v0, ", base_, "->f:I"));
    b.Op("return v1");
    return Method("public static poly(I)I", 2, b);
  }

  std::string BaseClass() const {
    Body calc;
    calc.Op("add-int/lit8 v0, p1, 1");
    calc.Op("return v0");
    return StrCat(".class public ", base_, "\n.super ", kObjectClass, "\n\n.field public f:I\n\n",
                  Constructor(kObjectClass), Method("public calc(I)I", 1, calc));
  }

  std::string DerivedClass() const {
    Body calc;
    calc.Op("mul-int/lit8 v0, p1, 2");
    calc.Op(StrCat("add-int/lit8 v0, v0, ", derived_offset_));
    calc.Op("return v0");
    return StrCat(".class public ", derived_, "\n.super ", base_, "\n\n", Constructor(base_),
                  Method("public calc(I)I", 1, calc));
  }

  std::string BoomClass() const {
    return StrCat(".class public ", boom_, "\n.super Ljava/lang/RuntimeException;\n\n",
                  Constructor("Ljava/lang/RuntimeException;"));
  }

  Rng rng_;
  uint64_t seed_;
  int index_;
  std::string pkg_, main_, base_, derived_, boom_;
  int tick_threshold_ = 0;
  int derived_offset_ = 0;
  int helper_count_ = 0;
  std::string helpers_;
  std::vector<Pending> pending_;
};

}  // namespace

std::string_view FaultKindName(FaultKind kind) {
  switch (kind) {
    case FaultKind::kDivByZero: return "div-by-zero";
    case FaultKind::kNullDeref: return "null-deref";
    case FaultKind::kThrow: return "throw";
  }
  return "?";
}

FaultCorpusProgram GenerateProgram(uint64_t seed, int index) {
  return Generator(seed, index).Run();
}

std::vector<FaultCorpusProgram> GenerateCorpusSerial(uint64_t seed, int n) {
  std::vector<FaultCorpusProgram> out;
  for (int i = 0; i < n; ++i) out.push_back(GenerateProgram(seed, i));
  return out;
}

std::vector<FaultCorpusProgram> GenerateCorpus(uint64_t seed, int n) {
  std::vector<FaultCorpusProgram> out(std::max(n, 0));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) out[i] = GenerateProgram(seed, i);
  return out;
}

std::string FaultsToJson(const FaultCorpusProgram& program) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const PlantedFault& f : program.faults) {
    j.push_back({{"kind", FaultKindName(f.kind)},
                 {"class", f.location.class_name},
                 {"method", f.location.method},
                 {"body_index", f.location.body_index},
                 {"exception", f.location.exception_type},
                 {"witness", FormatScript(f.witness)}});
  }
  return j.dump(2);
}

}  // namespace acv
