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

#include "acv/interpreter.h"

#include <climits>

#include "acv/builtins.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace acv {
namespace {

using testing::FixtureDir;
using testing::LoadTree;
using testing::ParseOrDie;

constexpr char kProgram[] = R"(.class public LT;
.super Ljava/lang/Object;
.field public static counter:I
.field public static lock:Ljava/lang/Object;

.method static constructor <clinit>()V
    .locals 1
    const/16 v0, 0x64
    sput v0, LT;->counter:I
    return-void
.end method

.method public static div(II)I
    .locals 1
    div-int v0, p0, p1
    return v0
.end method

.method public static outer(II)I
    .locals 1
    invoke-static {p0, p1}, LT;->div(II)I
    move-result v0
    return v0
.end method

.method public static guarded(II)I
    .locals 1
    :a
    invoke-static {p0, p1}, LT;->div(II)I
    move-result v0
    :b
    .catch Ljava/lang/RuntimeException; {:a .. :b} :h
    return v0
    :h
    move-exception v0
    const/4 v0, -0x1
    return v0
.end method

.method public static wrongCatch(II)I
    .locals 1
    :a
    div-int v0, p0, p1
    :b
    .catch Ljava/lang/NullPointerException; {:a .. :b} :h
    return v0
    :h
    const/4 v0, 0x0
    return v0
.end method

.method public static bump()I
    .locals 1
    sget v0, LT;->counter:I
    add-int/lit8 v0, v0, 0x1
    sput v0, LT;->counter:I
    return v0
.end method

.method public static wide(J)J
    .locals 2
    move-wide v0, p0
    return-wide v0
.end method

.method public static spin()V
    .locals 0
    :top
    goto :top
.end method

.method public static badExit()V
    .locals 2
    new-instance v0, Ljava/lang/Object;
    new-instance v1, Ljava/lang/Object;
    monitor-enter v0
    monitor-exit v1
    return-void
.end method

.method public static nullCall()I
    .locals 1
    const/4 v0, 0x0
    invoke-virtual {v0}, LBase;->calc()I
    move-result v0
    return v0
.end method

.method public static dispatch(Z)I
    .locals 1
    if-eqz p0, :base
    new-instance v0, LDerived;
    invoke-direct {v0}, LDerived;-><init>()V
    goto :call
    :base
    new-instance v0, LBase;
    invoke-direct {v0}, LBase;-><init>()V
    :call
    invoke-virtual {v0}, LBase;->calc()I
    move-result v0
    return v0
.end method

.method public static say(I)V
    .locals 0
    invoke-static {p0}, Lacv/Runtime;->emit(I)V
    return-void
.end method

.method public static raise()V
    .locals 1
    new-instance v0, LBoom;
    invoke-direct {v0}, LBoom;-><init>()V
    throw v0
.end method
)"
                          R"(
.class public LBase;
.super Ljava/lang/Object;

.method public constructor <init>()V
    .locals 0
    invoke-direct {p0}, Ljava/lang/Object;-><init>()V
    return-void
.end method

.method public calc()I
    .locals 1
    const/4 v0, 0x1
    return v0
.end method

.class public LDerived;
.super LBase;

.method public constructor <init>()V
    .locals 0
    invoke-direct {p0}, LBase;-><init>()V
    return-void
.end method

.method public calc()I
    .locals 1
    const/4 v0, 0x2
    return v0
.end method

.class public LBoom;
.super Ljava/lang/RuntimeException;

.method public constructor <init>()V
    .locals 0
    invoke-direct {p0}, Ljava/lang/RuntimeException;-><init>()V
    return-void
.end method
)";

class InterpreterTest : public ::testing::Test {
 protected:
  void SetUp() override {
    program_ = ParseTextWithClasses();
    auto linked = Link(program_);
    ASSERT_TRUE(linked.ok()) << linked.status();
    auto vm = Vm::Create(*linked, Limits{10'000, 1'000});
    ASSERT_TRUE(vm.ok()) << vm.status();
    vm_ = *std::move(vm);
  }

  // Splits the text at each .class directive into separate sources.
  static SmaliProgram ParseTextWithClasses() {
    std::vector<SourceFile> files;
    std::string_view text = kProgram;
    size_t pos = 0;
    while (pos < text.size()) {
      size_t next = text.find("\n.class ", pos + 1);
      size_t end = next == std::string_view::npos ? text.size() : next + 1;
      files.push_back({StrCat("t", files.size(), ".smali"), std::string(text.substr(pos, end - pos))});
      pos = end;
    }
    ParseResult r = Parse(files);
    if (!r.ok()) {
      std::string msg;
      for (const auto& d : r.diagnostics) msg += FormatDiagnostic(d) + "\n";
      throw std::runtime_error(msg);
    }
    return *std::move(r.program);
  }

  CallOutcome Call(std::string_view method, std::vector<Value> args = {}) {
    auto out = vm_->Call("LT;", method, args);
    if (!out.ok()) throw std::runtime_error(std::string(out.status().message()));
    return *std::move(out);
  }

  SmaliProgram program_;
  std::unique_ptr<Vm> vm_;
};

TEST_F(InterpreterTest, ReturnsValues) {
  EXPECT_EQ(Call("div(II)I", {Value::Int(17), Value::Int(5)}).value, Value::Int(3));
  EXPECT_EQ(Call("div(II)I", {Value::Int(-17), Value::Int(5)}).value, Value::Int(-3));
  EXPECT_EQ(Call("div(II)I", {Value::Int(INT_MIN), Value::Int(-1)}).value, Value::Int(INT_MIN));
  EXPECT_EQ(Call("wide(J)J", {Value::Wide(int64_t{1} << 40)}).value, Value::Wide(int64_t{1} << 40));
}

TEST_F(InterpreterTest, StaticInitializerRunsOnceAndStatePersists) {
  EXPECT_EQ(Call("bump()I").value, Value::Int(101));
  EXPECT_EQ(Call("bump()I").value, Value::Int(102));
  EXPECT_EQ(vm_->calls(), 2);
}

TEST_F(InterpreterTest, UncaughtExceptionIsACrash) {
  CallOutcome out = Call("outer(II)I", {Value::Int(1), Value::Int(0)});
  EXPECT_FALSE(out.value.has_value());
  ASSERT_TRUE(out.crash.has_value());
  const CrashRecord& c = *out.crash;
  EXPECT_EQ(c.exception_type, kArithmeticException);
  EXPECT_EQ(c.class_name, "LT;");
  EXPECT_EQ(c.method, "div(II)I");
  EXPECT_EQ(c.body_index, 0);
  ASSERT_EQ(c.stack.size(), 2u);
  EXPECT_EQ(c.stack[0], (StackFrame{"LT;", "div(II)I", 0}));
  EXPECT_EQ(c.stack[1], (StackFrame{"LT;", "outer(II)I", 0}));
}

TEST_F(InterpreterTest, HandlerCatchesSubclass) {
  CallOutcome out = Call("guarded(II)I", {Value::Int(1), Value::Int(0)});
  EXPECT_FALSE(out.crash.has_value());
  EXPECT_EQ(out.value, Value::Int(-1));
  EXPECT_EQ(Call("guarded(II)I", {Value::Int(8), Value::Int(2)}).value, Value::Int(4));
}

TEST_F(InterpreterTest, HandlerOfOtherTypeDoesNotCatch) {
  CallOutcome out = Call("wrongCatch(II)I", {Value::Int(1), Value::Int(0)});
  ASSERT_TRUE(out.crash.has_value());
  EXPECT_EQ(out.crash->exception_type, kArithmeticException);
}

TEST_F(InterpreterTest, UserExceptionCrash) {
  CallOutcome out = Call("raise()V");
  ASSERT_TRUE(out.crash.has_value());
  EXPECT_EQ(out.crash->exception_type, "LBoom;");
  EXPECT_EQ(out.crash->body_index, 2);
}

TEST_F(InterpreterTest, NullReceiver) {
  CallOutcome out = Call("nullCall()I");
  ASSERT_TRUE(out.crash.has_value());
  EXPECT_EQ(out.crash->exception_type, kNullPointerException);
}

TEST_F(InterpreterTest, UnbalancedMonitor) {
  CallOutcome out = Call("badExit()V");
  ASSERT_TRUE(out.crash.has_value());
  EXPECT_EQ(out.crash->exception_type, kIllegalMonitorStateException);
}

TEST_F(InterpreterTest, VirtualDispatch) {
  EXPECT_EQ(Call("dispatch(Z)I", {Value::Bool(false)}).value, Value::Int(1));
  EXPECT_EQ(Call("dispatch(Z)I", {Value::Bool(true)}).value, Value::Int(2));
}

TEST_F(InterpreterTest, StepLimit) {
  auto out = vm_->Call("LT;", "spin()V", {});
  ASSERT_FALSE(out.ok());
  EXPECT_TRUE(IsLimitError(out.status()));
}

TEST_F(InterpreterTest, EmitsAreRecorded) {
  Call("say(I)V", {Value::Int(7)});
  Call("say(I)V", {Value::Int(-2)});
  EXPECT_EQ(vm_->trace().emits, (std::vector<Value>{Value::Int(7), Value::Int(-2)}));
}

TEST_F(InterpreterTest, ThrowingInstructionExecutesButDoesNotComplete) {
  Call("div(II)I", {Value::Int(1), Value::Int(0)});
  InstrKey div{"LT;", "div(II)I", 0};
  EXPECT_TRUE(vm_->trace().executed.count(div));
  EXPECT_FALSE(vm_->trace().completed.count(div));
  EXPECT_TRUE(vm_->trace().Entered("LT;", "div(II)I"));
  vm_->ClearTrace();
  Call("div(II)I", {Value::Int(4), Value::Int(2)});
  EXPECT_TRUE(vm_->trace().completed.count(div));
}

TEST_F(InterpreterTest, WrongArgumentsAreRejected) {
  EXPECT_FALSE(vm_->Call("LT;", "div(II)I", {Value::Int(1)}).ok());
  EXPECT_FALSE(vm_->Call("LT;", "nope()V", {}).ok());
}

TEST(ScriptTest, ParsesAndFormats) {
  auto script = ParseScript("# comment\ncall LT; div(II)I 4 -2\n\nstop\ncall LT; bump()I\n");
  ASSERT_TRUE(script.ok()) << script.status();
  ASSERT_EQ(script->size(), 3u);
  EXPECT_EQ((*script)[0].kind, ScriptEvent::Kind::kCall);
  EXPECT_EQ((*script)[0].args, (std::vector<std::string>{"4", "-2"}));
  EXPECT_EQ((*script)[0].line, 2);
  EXPECT_EQ((*script)[1].kind, ScriptEvent::Kind::kStop);
  auto again = ParseScript(FormatScript(*script));
  ASSERT_TRUE(again.ok());
  ASSERT_EQ(again->size(), 3u);
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ((*again)[i].kind, (*script)[i].kind);
    EXPECT_EQ((*again)[i].args, (*script)[i].args);
  }
}

TEST(ScriptTest, RejectsGarbage) {
  EXPECT_FALSE(ParseScript("jump LT; f()V\n").ok());
  EXPECT_FALSE(ParseScript("call LT;\n").ok());
}

TEST(ScriptTest, RunsFixtureScript) {
  SmaliProgram p = LoadTree(FixtureDir() / "app" / "smali");
  auto script = ParseScript(testing::ReadText(FixtureDir() / "app" / "run.script"));
  ASSERT_TRUE(script.ok());
  auto linked = Link(p);
  ASSERT_TRUE(linked.ok());
  auto vm = Vm::Create(*linked);
  ASSERT_TRUE(vm.ok());
  int stops = 0;
  ScriptOutcome out = RunScript(**vm, *script, [&] { ++stops; });
  EXPECT_TRUE(out.status.ok()) << out.status;
  EXPECT_EQ(stops, 1);
  ASSERT_EQ(out.calls.size(), 2u);
  EXPECT_EQ(out.calls[0].value, Value::Int(5));
  EXPECT_EQ(out.calls[1].value, Value::Int(0));
  EXPECT_TRUE(out.crashes.empty());
}

TEST(ScriptTest, TypedArgsCheckArity) {
  SmaliProgram p = LoadTree(FixtureDir() / "app" / "smali");
  ScriptEvent ev{ScriptEvent::Kind::kCall, "Lcom/demo/Calc;", "add(I)I", {"1", "2"}, 1};
  EXPECT_FALSE(TypedArgs(p, ev).ok());
  ev.args = {"x"};
  EXPECT_FALSE(TypedArgs(p, ev).ok());
  ev.args = {"-9"};
  auto args = TypedArgs(p, ev);
  ASSERT_TRUE(args.ok());
  EXPECT_EQ(*args, (std::vector<Value>{Value::Int(-9)}));
}

TEST(ScriptTest, LimitErrorStopsScript) {
  SmaliProgram p = ParseOrDie(
      ".class public LS;\n.super Ljava/lang/Object;\n"
      ".method public static spin()V\n.locals 0\n:top\ngoto :top\n.end method\n");
  auto script = ParseScript("call LS; spin()V\ncall LS; spin()V\n");
  ASSERT_TRUE(script.ok());
  auto vm = Vm::Create(*Link(p), Limits{1000, 100});
  ASSERT_TRUE(vm.ok());
  ScriptOutcome out = RunScript(**vm, *script);
  EXPECT_TRUE(IsLimitError(out.status));
  EXPECT_LE(out.calls.size(), 1u);
}

}  // namespace
}  // namespace acv
