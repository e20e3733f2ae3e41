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

// Register-machine interpreter for the supported smali subset.
//
// A LinkedProgram is the verified, resolved, immutable form of a program and
// may be shared between threads. A Vm holds the mutable state of one "app
// process" (heap, statics, monitors) and executes calls one after another.
//
// Instrumented programs are recognized by their storage class. Code the
// instrumenter inserted is invisible to the trace, the step budget and crash
// locations, which are all expressed in original body indices; this makes
// original and instrumented runs directly comparable.

#ifndef ACV_INTERPRETER_H_
#define ACV_INTERPRETER_H_

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "acv/smali_model.h"

namespace acv {

// An observable value: call arguments, return values and emit() events.
// References compare by runtime class only, since heap identities differ
// between an original and an instrumented run.
struct Value {
  enum class Kind : uint8_t { kVoid, kInt, kWide, kBool, kRef, kNull };
  Kind kind = Kind::kVoid;
  int64_t bits = 0;
  std::string type;  // runtime class for kRef

  static Value Void() { return {}; }
  static Value Int(int32_t v) { return {Kind::kInt, v, ""}; }
  static Value Wide(int64_t v) { return {Kind::kWide, v, ""}; }
  static Value Bool(bool v) { return {Kind::kBool, v ? 1 : 0, ""}; }
  static Value Null() { return {Kind::kNull, 0, ""}; }
  static Value Ref(std::string type) { return {Kind::kRef, 0, std::move(type)}; }

  std::string ToString() const;
  bool operator==(const Value&) const = default;
};

struct Limits {
  int64_t max_steps = 1'000'000;      // per call
  int64_t max_heap_objects = 100'000;  // per Vm
};

struct StackFrame {
  std::string class_name;
  std::string method;
  int body_index = -1;
  bool operator==(const StackFrame&) const = default;
};

struct CrashKey {
  std::string class_name;
  std::string method;
  int body_index = -1;
  std::string exception_type;
  auto operator<=>(const CrashKey&) const = default;
};

struct CrashRecord {
  int64_t seq = 0;  // index of the call in the session
  std::string class_name;
  std::string method;
  int body_index = -1;
  std::string exception_type;
  std::vector<StackFrame> stack;  // innermost first; stack[0] is the location

  CrashKey Key() const { return {class_name, method, body_index, exception_type}; }
  bool operator==(const CrashRecord&) const = default;
};

std::string CrashToJson(const CrashRecord& crash);

struct InstrKey {
  std::string class_name;
  std::string method;
  int body_index = -1;
  auto operator<=>(const InstrKey&) const = default;
};

struct ExecutionTrace {
  // Instructions that started executing, and those that finished without
  // raising. An invoke finishes when its callee returns normally.
  std::set<InstrKey> executed;
  std::set<InstrKey> completed;
  std::vector<Value> emits;

  // (class, method id) pairs with at least one executed instruction.
  std::set<std::pair<std::string, std::string>> EnteredMethods() const;
  bool Entered(std::string_view class_name, std::string_view method) const;
};

class LinkedProgram;

// Outcome of one call: exactly one of value and crash is set.
struct CallOutcome {
  std::optional<Value> value;
  std::optional<CrashRecord> crash;
};

// Error statuses returned by Link / Vm::Call:
//   kFailedPrecondition "VerifyFailed: ..."      program does not verify
//   kNotFound           "EntryNotFound: ..."
//   kResourceExhausted  "StepLimitExceeded" / "HeapLimitExceeded"
//   kInternal           "VmFault: ..."           ill-typed register use
absl::StatusOr<std::shared_ptr<const LinkedProgram>> Link(const SmaliProgram& program);

bool IsLimitError(const absl::Status& status);

class Vm {
 public:
  // Runs every static initializer, the storage class first.
  static absl::StatusOr<std::unique_ptr<Vm>> Create(std::shared_ptr<const LinkedProgram> program,
                                                    Limits limits = {});
  ~Vm();

  absl::StatusOr<CallOutcome> Call(std::string_view class_name, std::string_view method_id,
                                   const std::vector<Value>& args);

  const ExecutionTrace& trace() const;
  void ClearTrace();
  int64_t calls() const;

  // Contents of a static boolean-array field, nullopt when the field is
  // unset or not a boolean array.
  std::optional<std::vector<bool>> ReadBoolArray(std::string_view class_name,
                                                 std::string_view field) const;

  const SmaliProgram& program() const;

 private:
  class Impl;
  explicit Vm(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

struct RunResult {
  CallOutcome outcome;
  ExecutionTrace trace;
  // Storage-class arrays by field name; empty for uninstrumented programs.
  std::map<std::string, std::vector<bool>> storage;
};

// One-shot convenience: link, create a Vm, make one call.
absl::StatusOr<RunResult> Interpret(const SmaliProgram& program, const EntryPoint& entry,
                                    const std::vector<Value>& args, Limits limits = {});

// ---------------------------------------------------------------------------
// Call scripts: one event per line,
//
//   call Lcom/demo/Main; run(IZ)V 3 true
//   stop
//
// '#' starts a comment. Arguments are typed by the method's parameters:
// integers (decimal or 0x hex), true/false, null.

struct ScriptEvent {
  enum class Kind { kCall, kStop };
  Kind kind = Kind::kCall;
  std::string class_name;
  std::string method;
  std::vector<std::string> args;  // raw tokens
  int line = 0;

  bool operator==(const ScriptEvent&) const = default;
};

using Script = std::vector<ScriptEvent>;

absl::StatusOr<Script> ParseScript(std::string_view text);
std::string FormatScript(const Script& script);

// Converts raw tokens using the parameter types of `method_id`.
absl::StatusOr<std::vector<Value>> TypedArgs(const SmaliProgram& program,
                                             const ScriptEvent& event);

struct ScriptOutcome {
  std::vector<CallOutcome> calls;  // one per call event
  std::vector<CrashRecord> crashes;
  // First limit or fault error; the script stops there.
  absl::Status status;
};

// Runs `script` against `vm`. `on_stop` is invoked for each stop line.
ScriptOutcome RunScript(Vm& vm, const Script& script,
                        const std::function<void()>& on_stop = nullptr);

}  // namespace acv

#endif  // ACV_INTERPRETER_H_
