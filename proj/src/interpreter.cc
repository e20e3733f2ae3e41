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

#include <algorithm>
#include <climits>
#include <unordered_map>

#include "acv/builtins.h"
#include "acv/instrumenter.h"
#include "acv/method_index.h"
#include "acv/strings.h"
#include "acv/verifier.h"
#include "json.hpp"

namespace acv {

// ---------------------------------------------------------------------------
// Linked form.

namespace {

enum class CallKind : uint8_t {
  kNone,
  kMethod,   // resolved program method
  kVirtual,  // dispatched on the receiver's class
  kNop,      // builtin constructor
  kEmitInt,
  kEmitWide,
  kEmitBool,
  kEmitObject,
};

struct Handler {
  std::string type;  // empty for catch-all
  int pc;
};

struct LinkedInstr {
  bool valid = false;  // false for labels and directives
  Opcode op = Opcode::kNop;
  FlowKind flow = FlowKind::kNext;
  uint32_t r[3] = {0, 0, 0};
  std::vector<uint32_t> args;  // invoke registers, absolute
  int64_t literal = 0;
  int target = -1;  // branch target pc
  int next = -1;    // fallthrough pc
  std::vector<std::pair<int32_t, int>> cases;
  const ArrayDataBlock* array = nullptr;
  CallKind call = CallKind::kNone;
  int callee = -1;
  std::string method_id;  // virtual calls
  std::string key;        // static field key, instance field name
  std::string type;       // type operand, or field type
  std::vector<Handler> handlers;
  int origin = -1;  // body index in the original program, -1 if inserted
};

struct LinkedMethod {
  const SmaliClass* cls = nullptr;
  const SmaliMethod* method = nullptr;
  std::string id;
  int locals = 0;
  int frame = 0;
  int entry_pc = -1;
  bool synthetic = false;
  int origin_size = 0;
  std::vector<LinkedInstr> code;
};

std::string_view SuperOf(const SmaliProgram& p, std::string_view name) {
  if (const SmaliClass* c = p.FindClass(name)) return c->super_name;
  if (const BuiltinClass* b = FindBuiltinClass(name)) return b->super_name;
  return {};
}

}  // namespace

class LinkedProgram {
 public:
  explicit LinkedProgram(SmaliProgram program) : program_(std::move(program)) {}

  absl::Status Build();

  const SmaliProgram& program() const { return program_; }
  const LinkedMethod& method(int i) const { return methods_[i]; }
  int method_count() const { return static_cast<int>(methods_.size()); }

  int Find(std::string_view cls, std::string_view id) const {
    auto c = by_class_.find(std::string(cls));
    if (c == by_class_.end()) return -1;
    auto m = c->second.find(std::string(id));
    return m == c->second.end() ? -1 : m->second;
  }

  // Program method `id` as seen from class `cls`, following super links.
  int Dispatch(std::string_view cls, std::string_view id) const {
    for (int depth = 0; !cls.empty() && depth < 256; ++depth) {
      int m = Find(cls, id);
      if (m >= 0) return m;
      cls = SuperOf(program_, cls);
    }
    return -1;
  }

  bool IsSubtype(std::string_view type, std::string_view target) const {
    if (type == target || target == kObjectClass) return true;
    if (type.starts_with("[")) return false;
    for (int depth = 0; !type.empty() && depth < 256; ++depth) {
      if (type == target) return true;
      type = SuperOf(program_, type);
    }
    return false;
  }

  // Declaring class of a static field reached through `owner`.
  std::string StaticKey(std::string_view owner, std::string_view name) const {
    std::string_view cls = owner;
    for (int depth = 0; !cls.empty() && depth < 256; ++depth) {
      const SmaliClass* c = program_.FindClass(cls);
      if (c == nullptr) break;
      if (c->FindField(name) != nullptr) return StrCat(cls, "->", name);
      cls = c->super_name;
    }
    return StrCat(owner, "->", name);
  }

  const std::vector<int>& clinits() const { return clinits_; }

 private:
  void LinkMethod(LinkedMethod& lm, bool instrumented);

  SmaliProgram program_;
  std::vector<LinkedMethod> methods_;
  std::unordered_map<std::string, std::unordered_map<std::string, int>> by_class_;
  std::vector<int> clinits_;
};

absl::Status LinkedProgram::Build() {
  VerificationResult v = Verify(program_);
  if (!v.ok()) {
    std::vector<std::string> lines;
    for (size_t i = 0; i < v.violations.size() && i < 5; ++i) {
      lines.push_back(FormatViolation(v.violations[i]));
    }
    if (v.violations.size() > 5) lines.push_back(StrCat("... ", v.violations.size() - 5, " more"));
    return absl::FailedPreconditionError(StrCat("VerifyFailed: ", StrJoin(lines, "; ")));
  }
  const bool instrumented = IsInstrumented(program_);
  for (const SmaliClass& c : program_.classes) {
    for (const SmaliMethod& m : c.methods) {
      if (CountInstructions(m) == 0) continue;
      LinkedMethod lm;
      lm.cls = &c;
      lm.method = &m;
      lm.id = m.Id();
      lm.locals = m.locals;
      lm.frame = m.FrameSize();
      lm.synthetic = c.name == kStorageClass;
      by_class_[c.name][lm.id] = static_cast<int>(methods_.size());
      methods_.push_back(std::move(lm));
    }
  }
  for (LinkedMethod& lm : methods_) LinkMethod(lm, instrumented);
  // Static initializers: the storage class first, then declaration order.
  if (int s = Find(kStorageClass, "<clinit>()V"); s >= 0) clinits_.push_back(s);
  for (const SmaliClass& c : program_.classes) {
    if (c.name == kStorageClass) continue;
    if (int m = Find(c.name, "<clinit>()V"); m >= 0) clinits_.push_back(m);
  }
  return absl::OkStatus();
}

void LinkedProgram::LinkMethod(LinkedMethod& lm, bool instrumented) {
  const SmaliMethod& m = *lm.method;
  MethodIndex index(m);
  std::vector<int> origin;
  if (instrumented && !lm.synthetic) {
    origin = RecoverOriginMap(m);
  } else {
    origin.resize(m.body.size());
    for (size_t i = 0; i < origin.size(); ++i) origin[i] = static_cast<int>(i);
  }
  for (int o : origin) lm.origin_size = std::max(lm.origin_size, o + 1);
  lm.code.resize(m.body.size());
  lm.entry_pc = index.InstructionAtOrAfter(0);
  const uint32_t locals = static_cast<uint32_t>(m.locals);
  for (int pos : index.instructions()) {
    const auto& ins = std::get<Instruction>(m.body[pos]);
    const OpcodeInfo& info = Info(ins.opcode);
    LinkedInstr& li = lm.code[pos];
    li.valid = true;
    li.op = ins.opcode;
    li.flow = info.flow;
    li.origin = lm.synthetic ? -1 : origin[pos];
    li.literal = ins.literal.value_or(0);
    li.next = index.NextInstruction(pos);
    if (info.has_operand(OperandKind::kRegList)) {
      for (const Reg& r : ins.regs) li.args.push_back(r.Absolute(locals));
    } else {
      for (size_t i = 0; i < ins.regs.size() && i < 3; ++i) li.r[i] = ins.regs[i].Absolute(locals);
    }
    if (info.flow == FlowKind::kGoto || info.flow == FlowKind::kIf) {
      li.target = index.LabelTarget(ins.label);
    }
    if (info.flow == FlowKind::kSwitch) {
      if (const SwitchPayload* s = index.SwitchAt(ins.label)) {
        for (size_t i = 0; i < s->targets.size(); ++i) {
          li.cases.emplace_back(s->KeyAt(i), index.LabelTarget(s->targets[i]));
        }
      }
    }
    if (ins.opcode == Opcode::kFillArrayData) li.array = index.ArrayAt(ins.label);
    if (ins.ref.has_value()) {
      const MemberRef& ref = *ins.ref;
      if (info.has_operand(OperandKind::kType)) {
        li.type = ref.owner;
      } else if (info.has_operand(OperandKind::kField)) {
        li.type = ref.type;
        bool is_static = ins.opcode == Opcode::kSget || ins.opcode == Opcode::kSgetObject ||
                         ins.opcode == Opcode::kSput || ins.opcode == Opcode::kSputObject;
        li.key = is_static ? StaticKey(ref.owner, ref.name) : ref.name;
      } else if (info.has_operand(OperandKind::kMethod)) {
        std::string id = StrCat(ref.name, ref.type);
        if (IsBuiltinStatic(ref.owner, id)) {
          li.call = id == "emit(I)V"   ? CallKind::kEmitInt
                    : id == "emit(J)V" ? CallKind::kEmitWide
                    : id == "emit(Z)V" ? CallKind::kEmitBool
                                       : CallKind::kEmitObject;
        } else if (ins.opcode == Opcode::kInvokeVirtual) {
          li.call = CallKind::kVirtual;
          li.method_id = id;
        } else if (int callee = Dispatch(ref.owner, id); callee >= 0) {
          li.call = CallKind::kMethod;
          li.callee = callee;
        } else {
          li.call = CallKind::kNop;  // builtin <init>()V, checked by the verifier
        }
      }
    }
    for (int t : index.CoveringTries(pos)) {
      const auto& dir = std::get<TryDirective>(m.body[t]);
      li.handlers.push_back({dir.exception_type.value_or(""), index.LabelTarget(dir.handler)});
    }
  }
}

absl::StatusOr<std::shared_ptr<const LinkedProgram>> Link(const SmaliProgram& program) {
  auto linked = std::make_shared<LinkedProgram>(program);
  absl::Status s = linked->Build();
  if (!s.ok()) return s;
  return std::shared_ptr<const LinkedProgram>(std::move(linked));
}

bool IsLimitError(const absl::Status& status) {
  return status.code() == absl::StatusCode::kResourceExhausted;
}

// ---------------------------------------------------------------------------
// Values and traces.

std::string Value::ToString() const {
  switch (kind) {
    case Kind::kVoid: return "void";
    case Kind::kInt: return StrCat("int:", bits);
    case Kind::kWide: return StrCat("wide:", bits);
    case Kind::kBool: return bits ? "bool:true" : "bool:false";
    case Kind::kRef: return StrCat("ref:", type);
    case Kind::kNull: return "null";
  }
  return "?";
}

std::string CrashToJson(const CrashRecord& crash) {
  nlohmann::ordered_json j;
  j["seq"] = crash.seq;
  j["class"] = crash.class_name;
  j["method"] = crash.method;
  j["body_index"] = crash.body_index;
  j["exception"] = crash.exception_type;
  nlohmann::ordered_json stack = nlohmann::ordered_json::array();
  for (const auto& f : crash.stack) {
    stack.push_back({{"class", f.class_name}, {"method", f.method}, {"body_index", f.body_index}});
  }
  j["stack"] = std::move(stack);
  return j.dump();
}

std::set<std::pair<std::string, std::string>> ExecutionTrace::EnteredMethods() const {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& k : executed) out.emplace(k.class_name, k.method);
  return out;
}

bool ExecutionTrace::Entered(std::string_view class_name, std::string_view method) const {
  auto it = executed.lower_bound(InstrKey{std::string(class_name), std::string(method), INT_MIN});
  return it != executed.end() && it->class_name == class_name && it->method == method;
}

// ---------------------------------------------------------------------------
// The machine.

namespace {

enum class Tag : uint8_t { kUninit, kInt, kWideLo, kWideHi, kRef };

struct Slot {
  Tag tag = Tag::kUninit;
  int64_t v = 0;  // int32 value for kInt and wide halves, heap id for kRef
};

struct Object {
  std::string type;
  bool array = false;
  std::vector<int64_t> elems;
  std::unordered_map<std::string, Slot> fields;
  int monitor = 0;
  std::vector<StackFrame> throw_stack;  // set when first thrown
};

struct Frame {
  int method;
  size_t base;  // first register in the register stack
  int pc;
  Slot result[2];
  int64_t exception = 0;
};

// Internal control signals of the interpreter loop.
struct Fault {
  absl::Status status;
};

enum Mark : uint8_t { kExecuted = 1, kCompleted = 2 };

}  // namespace

class Vm::Impl {
 public:
  Impl(std::shared_ptr<const LinkedProgram> program, Limits limits)
      : p_(std::move(program)), limits_(limits), marks_(p_->method_count()) {
    for (int i = 0; i < p_->method_count(); ++i) marks_[i].resize(p_->method(i).origin_size);
  }

  absl::Status Init() {
    for (int m : p_->clinits()) {
      absl::StatusOr<CallOutcome> r = Invoke(m, {});
      if (!r.ok()) return r.status();
      if (r->crash.has_value()) {
        return absl::FailedPreconditionError(
            StrCat("ClassInitFailed: ", r->crash->class_name, " threw ", r->crash->exception_type));
      }
    }
    return absl::OkStatus();
  }

  absl::StatusOr<CallOutcome> Call(std::string_view cls, std::string_view id,
                                   const std::vector<Value>& args) {
    int m = p_->Find(cls, id);
    if (m < 0 || !p_->method(m).method->is_static()) {
      return absl::NotFoundError(StrCat("EntryNotFound: ", cls, "->", id));
    }
    const SmaliMethod& method = *p_->method(m).method;
    if (args.size() != method.param_types.size()) {
      return absl::InvalidArgumentError(StrCat(cls, "->", id, " takes ", method.param_types.size(),
                                               " argument(s), got ", args.size()));
    }
    std::vector<Slot> slots;
    for (size_t i = 0; i < args.size(); ++i) {
      const std::string& t = method.param_types[i];
      const Value& a = args[i];
      if (TypeWidth(t) == 2) {
        int64_t v = a.bits;
        slots.push_back({Tag::kWideLo, static_cast<int32_t>(v & 0xffffffff)});
        slots.push_back({Tag::kWideHi, static_cast<int32_t>(static_cast<uint64_t>(v) >> 32)});
      } else if (IsReferenceType(t)) {
        if (a.kind != Value::Kind::kNull) {
          return absl::InvalidArgumentError("only null can be passed for reference parameters");
        }
        slots.push_back({Tag::kRef, 0});
      } else {
        slots.push_back({Tag::kInt, static_cast<int32_t>(a.bits)});
      }
    }
    absl::StatusOr<CallOutcome> r = Invoke(m, slots);
    ++calls_;
    return r;
  }

  const ExecutionTrace& trace() {
    if (trace_dirty_) {
      trace_.executed.clear();
      trace_.completed.clear();
      for (int m = 0; m < p_->method_count(); ++m) {
        const LinkedMethod& lm = p_->method(m);
        for (size_t i = 0; i < marks_[m].size(); ++i) {
          if (marks_[m][i] == 0) continue;
          InstrKey k{lm.cls->name, lm.id, static_cast<int>(i)};
          if (marks_[m][i] & kExecuted) trace_.executed.insert(k);
          if (marks_[m][i] & kCompleted) trace_.completed.insert(k);
        }
      }
      trace_dirty_ = false;
    }
    return trace_;
  }

  void ClearTrace() {
    for (auto& v : marks_) std::fill(v.begin(), v.end(), 0);
    trace_.emits.clear();
    trace_dirty_ = true;
  }

  int64_t calls() const { return calls_; }

  std::optional<std::vector<bool>> ReadBoolArray(std::string_view cls,
                                                 std::string_view field) const {
    auto it = statics_.find(StrCat(cls, "->", field));
    if (it == statics_.end() || it->second.tag != Tag::kRef || it->second.v == 0) {
      return std::nullopt;
    }
    const Object& o = heap_[it->second.v - 1];
    if (o.type != "[Z") return std::nullopt;
    std::vector<bool> out(o.elems.size());
    for (size_t i = 0; i < o.elems.size(); ++i) out[i] = o.elems[i] != 0;
    return out;
  }

  const SmaliProgram& program() const { return p_->program(); }

 private:
  // --- register access ----------------------------------------------------

  Slot& R(const Frame& f, uint32_t r) { return regs_[f.base + r]; }

  [[noreturn]] void Die(const Frame& f, std::string msg) {
    const LinkedMethod& lm = p_->method(f.method);
    throw Fault{absl::InternalError(
        StrCat("VmFault: ", lm.cls->name, "->", lm.id, " @", f.pc, ": ", msg))};
  }

  int32_t GetInt(const Frame& f, uint32_t r) {
    const Slot& s = R(f, r);
    if (s.tag != Tag::kInt) Die(f, StrCat("v", r, " does not hold an int"));
    return static_cast<int32_t>(s.v);
  }

  // Integer or reference, for comparisons.
  int64_t GetCmp(const Frame& f, uint32_t r) {
    const Slot& s = R(f, r);
    if (s.tag != Tag::kInt && s.tag != Tag::kRef) Die(f, StrCat("v", r, " is not comparable"));
    return s.v;
  }

  int64_t GetRef(const Frame& f, uint32_t r) {
    const Slot& s = R(f, r);
    if (s.tag == Tag::kRef || (s.tag == Tag::kInt && s.v == 0)) return s.v;
    Die(f, StrCat("v", r, " does not hold a reference"));
  }

  int64_t GetWide(const Frame& f, uint32_t r) {
    const Slot& lo = R(f, r);
    const Slot& hi = R(f, r + 1);
    if (lo.tag != Tag::kWideLo || hi.tag != Tag::kWideHi) {
      Die(f, StrCat("v", r, " does not hold a wide value"));
    }
    return static_cast<int64_t>((static_cast<uint64_t>(static_cast<uint32_t>(hi.v)) << 32) |
                                static_cast<uint32_t>(lo.v));
  }

  void Invalidate(const Frame& f, uint32_t r) {
    Slot& s = R(f, r);
    if (s.tag == Tag::kWideLo) R(f, r + 1) = {};
    if (s.tag == Tag::kWideHi && r > 0) R(f, r - 1) = {};
  }

  void Set(const Frame& f, uint32_t r, Slot v) {
    Invalidate(f, r);
    R(f, r) = v;
  }
  void SetInt(const Frame& f, uint32_t r, int32_t v) { Set(f, r, {Tag::kInt, v}); }
  void SetRef(const Frame& f, uint32_t r, int64_t id) { Set(f, r, {Tag::kRef, id}); }
  void SetWide(const Frame& f, uint32_t r, int64_t v) {
    Invalidate(f, r);
    Invalidate(f, r + 1);
    R(f, r) = {Tag::kWideLo, static_cast<int32_t>(static_cast<uint64_t>(v) & 0xffffffff)};
    R(f, r + 1) = {Tag::kWideHi, static_cast<int32_t>(static_cast<uint64_t>(v) >> 32)};
  }

  // --- heap ---------------------------------------------------------------

  Object& Obj(int64_t id) { return heap_[id - 1]; }

  int64_t Alloc(std::string type, bool synthetic, bool check = true) {
    if (!synthetic) {
      if (check && counted_objects_ >= limits_.max_heap_objects) {
        throw Fault{absl::ResourceExhaustedError("HeapLimitExceeded")};
      }
      ++counted_objects_;
    }
    heap_.push_back(Object{});
    heap_.back().type = std::move(type);
    return static_cast<int64_t>(heap_.size());
  }

  static Slot DefaultFor(std::string_view type) {
    return IsReferenceType(type) ? Slot{Tag::kRef, 0} : Slot{Tag::kInt, 0};
  }

  // --- exceptions ---------------------------------------------------------

  std::vector<StackFrame> CaptureStack() const {
    std::vector<StackFrame> out;
    for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
      const LinkedMethod& lm = p_->method(it->method);
      if (lm.synthetic) continue;
      out.push_back({lm.cls->name, lm.id, lm.code[it->pc].origin});
    }
    return out;
  }

  // Creates and raises a VM exception of class `type`.
  void RaiseNew(std::string_view type) {
    int64_t id = Alloc(std::string(type), false, /*check=*/false);
    Raise(id);
  }

  // Unwinds to the innermost matching handler. Returns false when the
  // exception escapes the outermost frame; `crash_` is then set.
  bool Raise(int64_t id) {
    Object& ex = Obj(id);
    if (ex.throw_stack.empty()) ex.throw_stack = CaptureStack();
    while (!frames_.empty()) {
      Frame& f = frames_.back();
      const LinkedInstr& li = p_->method(f.method).code[f.pc];
      for (const Handler& h : li.handlers) {
        if (h.type.empty() || p_->IsSubtype(ex.type, h.type)) {
          f.pc = h.pc;
          f.exception = id;
          return true;
        }
      }
      regs_.resize(f.base);
      frames_.pop_back();
    }
    CrashRecord c;
    c.seq = calls_;
    c.exception_type = ex.type;
    c.stack = ex.throw_stack;
    if (!c.stack.empty()) {
      c.class_name = c.stack[0].class_name;
      c.method = c.stack[0].method;
      c.body_index = c.stack[0].body_index;
    }
    crash_ = std::move(c);
    return false;
  }

  // --- frames -------------------------------------------------------------

  void Push(int m, const Slot* args, size_t n) {
    const LinkedMethod& lm = p_->method(m);
    if (frames_.size() > 4096) throw Fault{absl::ResourceExhaustedError("StepLimitExceeded: stack depth")};
    Frame f;
    f.method = m;
    f.base = regs_.size();
    f.pc = lm.entry_pc;
    regs_.resize(f.base + lm.frame);
    for (size_t i = 0; i < n; ++i) regs_[f.base + lm.locals + i] = args[i];
    frames_.push_back(f);
  }

  Value ToValue(const std::string& type, const Slot* s) {
    if (type == "V") return Value::Void();
    if (type == "Z") return Value::Bool(s[0].v != 0);
    if (TypeWidth(type) == 2) {
      return Value::Wide(static_cast<int64_t>(
          (static_cast<uint64_t>(static_cast<uint32_t>(s[1].v)) << 32) |
          static_cast<uint32_t>(s[0].v)));
    }
    if (IsReferenceType(type)) {
      if (s[0].v == 0) return Value::Null();
      return Value::Ref(Obj(s[0].v).type);
    }
    return Value::Int(static_cast<int32_t>(s[0].v));
  }

  absl::StatusOr<CallOutcome> Invoke(int m, const std::vector<Slot>& args) {
    crash_.reset();
    frames_.clear();
    regs_.clear();
    steps_ = 0;
    try {
      Push(m, args.data(), args.size());
      return Loop();
    } catch (const Fault& fault) {
      frames_.clear();
      regs_.clear();
      return fault.status;
    }
  }

  CallOutcome Loop();
  void Step();

  std::shared_ptr<const LinkedProgram> p_;
  Limits limits_;
  std::vector<Object> heap_;
  int64_t counted_objects_ = 0;
  std::unordered_map<std::string, Slot> statics_;
  std::vector<Frame> frames_;
  std::vector<Slot> regs_;
  std::optional<CrashRecord> crash_;
  std::optional<Value> returned_;
  int64_t steps_ = 0;
  int64_t calls_ = 0;
  std::vector<std::vector<uint8_t>> marks_;
  ExecutionTrace trace_;
  bool trace_dirty_ = true;
};

CallOutcome Vm::Impl::Loop() {
  returned_.reset();
  while (!frames_.empty()) Step();
  CallOutcome out;
  if (crash_.has_value()) {
    out.crash = std::move(crash_);
  } else {
    out.value = std::move(returned_);
  }
  return out;
}

void Vm::Impl::Step() {
  Frame& f = frames_.back();
  const int mi = f.method;
  const LinkedMethod& lm = p_->method(mi);
  const LinkedInstr& li = lm.code[f.pc];
  if (li.origin >= 0) {
    if (++steps_ > limits_.max_steps) throw Fault{absl::ResourceExhaustedError("StepLimitExceeded")};
    marks_[mi][li.origin] |= kExecuted;
    trace_dirty_ = true;
  }
  const uint32_t a = li.r[0], b = li.r[1], c = li.r[2];

  // Normal completion: mark and fall through.
  auto done = [&](int pc) {
    if (li.origin >= 0) marks_[mi][li.origin] |= kCompleted;
    frames_.back().pc = pc;
  };
  auto raise = [&](std::string_view type) { RaiseNew(type); };
  auto null_check = [&](int64_t ref) {
    if (ref == 0) {
      raise(kNullPointerException);
      return false;
    }
    return true;
  };

  switch (li.op) {
    case Opcode::kNop:
      done(li.next);
      return;
    case Opcode::kMove:
    case Opcode::kMoveFrom16:
    case Opcode::kMove16:
    case Opcode::kMoveObject:
    case Opcode::kMoveObjectFrom16:
    case Opcode::kMoveObject16:
      Set(f, a, R(f, b));
      done(li.next);
      return;
    case Opcode::kMoveWide:
    case Opcode::kMoveWideFrom16:
    case Opcode::kMoveWide16: {
      Slot lo = R(f, b), hi = R(f, b + 1);
      if (lo.tag != Tag::kWideLo || hi.tag != Tag::kWideHi) Die(f, "move-wide of a non-wide pair");
      Invalidate(f, a);
      Invalidate(f, a + 1);
      R(f, a) = lo;
      R(f, a + 1) = hi;
      done(li.next);
      return;
    }
    case Opcode::kMoveResult:
    case Opcode::kMoveResultObject:
      Set(f, a, f.result[0]);
      done(li.next);
      return;
    case Opcode::kMoveResultWide:
      Invalidate(f, a);
      Invalidate(f, a + 1);
      R(f, a) = f.result[0];
      R(f, a + 1) = f.result[1];
      done(li.next);
      return;
    case Opcode::kMoveException:
      SetRef(f, a, f.exception);
      f.exception = 0;
      done(li.next);
      return;

    case Opcode::kReturnVoid:
    case Opcode::kReturn:
    case Opcode::kReturnWide:
    case Opcode::kReturnObject: {
      Slot ret[2];
      if (li.op == Opcode::kReturnWide) {
        GetWide(f, a);
        ret[0] = R(f, a);
        ret[1] = R(f, a + 1);
      } else if (li.op != Opcode::kReturnVoid) {
        ret[0] = R(f, a);
        if (ret[0].tag == Tag::kUninit) Die(f, "return of an uninitialized register");
      }
      if (li.origin >= 0) marks_[mi][li.origin] |= kCompleted;
      regs_.resize(f.base);
      frames_.pop_back();
      if (frames_.empty()) {
        returned_ = ToValue(lm.method->return_type, ret);
        return;
      }
      Frame& caller = frames_.back();
      const LinkedMethod& cm = p_->method(caller.method);
      const LinkedInstr& inv = cm.code[caller.pc];
      if (inv.origin >= 0) marks_[caller.method][inv.origin] |= kCompleted;
      caller.result[0] = ret[0];
      caller.result[1] = ret[1];
      caller.pc = inv.next;
      return;
    }

    case Opcode::kConst4:
    case Opcode::kConst16:
    case Opcode::kConst:
    case Opcode::kConstHigh16:
      SetInt(f, a, static_cast<int32_t>(li.literal));
      done(li.next);
      return;
    case Opcode::kConstWide16:
    case Opcode::kConstWide32:
    case Opcode::kConstWide:
    case Opcode::kConstWideHigh16:
      SetWide(f, a, li.literal);
      done(li.next);
      return;

    case Opcode::kMonitorEnter: {
      int64_t ref = GetRef(f, a);
      if (!null_check(ref)) return;
      ++Obj(ref).monitor;
      done(li.next);
      return;
    }
    case Opcode::kMonitorExit: {
      int64_t ref = GetRef(f, a);
      if (!null_check(ref)) return;
      if (Obj(ref).monitor == 0) {
        raise(kIllegalMonitorStateException);
        return;
      }
      --Obj(ref).monitor;
      done(li.next);
      return;
    }
    case Opcode::kCheckCast: {
      int64_t ref = GetRef(f, a);
      if (ref != 0 && !p_->IsSubtype(Obj(ref).type, li.type)) {
        raise(kClassCastException);
        return;
      }
      done(li.next);
      return;
    }
    case Opcode::kInstanceOf: {
      int64_t ref = GetRef(f, b);
      SetInt(f, a, ref != 0 && p_->IsSubtype(Obj(ref).type, li.type) ? 1 : 0);
      done(li.next);
      return;
    }
    case Opcode::kArrayLength: {
      int64_t ref = GetRef(f, b);
      if (!null_check(ref)) return;
      SetInt(f, a, static_cast<int32_t>(Obj(ref).elems.size()));
      done(li.next);
      return;
    }
    case Opcode::kNewInstance: {
      int64_t id = Alloc(li.type, lm.synthetic);
      SetRef(f, a, id);
      done(li.next);
      return;
    }
    case Opcode::kNewArray: {
      int32_t n = GetInt(f, b);
      if (n < 0) {
        raise(kNegativeArraySizeException);
        return;
      }
      if (n > 1'000'000) throw Fault{absl::ResourceExhaustedError("HeapLimitExceeded: array size")};
      int64_t id = Alloc(li.type, lm.synthetic);
      Obj(id).array = true;
      Obj(id).elems.assign(n, 0);
      SetRef(frames_.back(), a, id);
      done(li.next);
      return;
    }
    case Opcode::kFillArrayData: {
      int64_t ref = GetRef(f, a);
      if (!null_check(ref)) return;
      Object& o = Obj(ref);
      if (!o.array || li.array == nullptr) Die(f, "fill-array-data on a non-array");
      if (li.array->values.size() > o.elems.size()) {
        raise(kArrayIndexOutOfBoundsException);
        return;
      }
      std::copy(li.array->values.begin(), li.array->values.end(), o.elems.begin());
      done(li.next);
      return;
    }
    case Opcode::kThrow: {
      int64_t ref = GetRef(f, a);
      if (!null_check(ref)) return;
      if (!p_->IsSubtype(Obj(ref).type, kThrowableClass)) Die(f, "throw of a non-throwable");
      Raise(ref);
      return;
    }
    case Opcode::kGoto:
    case Opcode::kGoto16:
    case Opcode::kGoto32:
      done(li.target);
      return;
    case Opcode::kPackedSwitch:
    case Opcode::kSparseSwitch: {
      int32_t key = GetInt(f, a);
      int pc = li.next;
      for (const auto& [k, target] : li.cases) {
        if (k == key) {
          pc = target;
          break;
        }
      }
      done(pc);
      return;
    }

    case Opcode::kIfEq:
    case Opcode::kIfNe:
    case Opcode::kIfLt:
    case Opcode::kIfGe:
    case Opcode::kIfGt:
    case Opcode::kIfLe:
    case Opcode::kIfEqz:
    case Opcode::kIfNez:
    case Opcode::kIfLtz:
    case Opcode::kIfGez:
    case Opcode::kIfGtz:
    case Opcode::kIfLez: {
      bool two = li.op <= Opcode::kIfLe;
      int64_t x = GetCmp(f, a);
      int64_t y = two ? GetCmp(f, b) : 0;
      bool take = false;
      switch (li.op) {
        case Opcode::kIfEq: case Opcode::kIfEqz: take = x == y; break;
        case Opcode::kIfNe: case Opcode::kIfNez: take = x != y; break;
        case Opcode::kIfLt: case Opcode::kIfLtz: take = x < y; break;
        case Opcode::kIfGe: case Opcode::kIfGez: take = x >= y; break;
        case Opcode::kIfGt: case Opcode::kIfGtz: take = x > y; break;
        default: take = x <= y; break;
      }
      done(take ? li.target : li.next);
      return;
    }

    case Opcode::kAget:
    case Opcode::kAgetObject:
    case Opcode::kAgetBoolean:
    case Opcode::kAput:
    case Opcode::kAputObject:
    case Opcode::kAputBoolean: {
      int64_t ref = GetRef(f, b);
      int32_t idx = GetInt(f, c);
      if (!null_check(ref)) return;
      Object& o = Obj(ref);
      if (!o.array) Die(f, "array access on a non-array");
      if (idx < 0 || static_cast<size_t>(idx) >= o.elems.size()) {
        raise(kArrayIndexOutOfBoundsException);
        return;
      }
      switch (li.op) {
        case Opcode::kAget: SetInt(f, a, static_cast<int32_t>(o.elems[idx])); break;
        case Opcode::kAgetBoolean: SetInt(f, a, o.elems[idx] != 0 ? 1 : 0); break;
        case Opcode::kAgetObject: SetRef(f, a, o.elems[idx]); break;
        case Opcode::kAput: o.elems[idx] = GetInt(f, a); break;
        case Opcode::kAputBoolean: o.elems[idx] = GetInt(f, a) != 0 ? 1 : 0; break;
        default: o.elems[idx] = GetRef(f, a); break;
      }
      done(li.next);
      return;
    }

    case Opcode::kIget:
    case Opcode::kIgetObject:
    case Opcode::kIput:
    case Opcode::kIputObject: {
      int64_t ref = GetRef(f, b);
      if (!null_check(ref)) return;
      Object& o = Obj(ref);
      if (li.op == Opcode::kIget || li.op == Opcode::kIgetObject) {
        auto it = o.fields.find(li.key);
        Set(f, a, it == o.fields.end() ? DefaultFor(li.type) : it->second);
      } else {
        Slot v = R(f, a);
        if (li.op == Opcode::kIput) {
          v = {Tag::kInt, GetInt(f, a)};
        } else {
          v = {Tag::kRef, GetRef(f, a)};
        }
        o.fields[li.key] = v;
      }
      done(li.next);
      return;
    }
    case Opcode::kSget:
    case Opcode::kSgetObject: {
      auto it = statics_.find(li.key);
      Set(f, a, it == statics_.end() ? DefaultFor(li.type) : it->second);
      done(li.next);
      return;
    }
    case Opcode::kSput:
      statics_[li.key] = {Tag::kInt, GetInt(f, a)};
      done(li.next);
      return;
    case Opcode::kSputObject:
      statics_[li.key] = {Tag::kRef, GetRef(f, a)};
      done(li.next);
      return;

    case Opcode::kInvokeVirtual:
    case Opcode::kInvokeDirect:
    case Opcode::kInvokeStatic: {
      switch (li.call) {
        case CallKind::kEmitInt:
          trace_.emits.push_back(Value::Int(GetInt(f, li.args[0])));
          done(li.next);
          return;
        case CallKind::kEmitBool:
          trace_.emits.push_back(Value::Bool(GetInt(f, li.args[0]) != 0));
          done(li.next);
          return;
        case CallKind::kEmitWide:
          trace_.emits.push_back(Value::Wide(GetWide(f, li.args[0])));
          done(li.next);
          return;
        case CallKind::kEmitObject: {
          int64_t ref = GetRef(f, li.args[0]);
          trace_.emits.push_back(ref == 0 ? Value::Null() : Value::Ref(Obj(ref).type));
          done(li.next);
          return;
        }
        default:
          break;
      }
      int callee = li.callee;
      if (li.op != Opcode::kInvokeStatic) {
        int64_t self = GetRef(f, li.args[0]);
        if (!null_check(self)) return;
        if (li.call == CallKind::kVirtual) {
          callee = p_->Dispatch(Obj(self).type, li.method_id);
          if (callee < 0) Die(f, StrCat("no method ", li.method_id, " for ", Obj(self).type));
        }
      }
      if (li.call == CallKind::kNop) {
        done(li.next);
        return;
      }
      Slot args[256];
      size_t n = li.args.size();
      for (size_t i = 0; i < n; ++i) args[i] = R(f, li.args[i]);
      Push(callee, args, n);
      return;
    }

    case Opcode::kAddInt:
    case Opcode::kSubInt:
    case Opcode::kMulInt:
    case Opcode::kDivInt:
    case Opcode::kRemInt:
    case Opcode::kAddInt2addr:
    case Opcode::kSubInt2addr:
    case Opcode::kMulInt2addr:
    case Opcode::kDivInt2addr:
    case Opcode::kRemInt2addr:
    case Opcode::kAddIntLit8:
    case Opcode::kRsubIntLit8:
    case Opcode::kMulIntLit8:
    case Opcode::kDivIntLit8:
    case Opcode::kRemIntLit8: {
      int32_t x, y;
      char op;
      switch (li.op) {
        case Opcode::kAddInt2addr: case Opcode::kSubInt2addr: case Opcode::kMulInt2addr:
        case Opcode::kDivInt2addr: case Opcode::kRemInt2addr:
          x = GetInt(f, a);
          y = GetInt(f, b);
          break;
        case Opcode::kAddIntLit8: case Opcode::kRsubIntLit8: case Opcode::kMulIntLit8:
        case Opcode::kDivIntLit8: case Opcode::kRemIntLit8:
          x = GetInt(f, b);
          y = static_cast<int32_t>(li.literal);
          break;
        default:
          x = GetInt(f, b);
          y = GetInt(f, c);
          break;
      }
      switch (li.op) {
        case Opcode::kAddInt: case Opcode::kAddInt2addr: case Opcode::kAddIntLit8: op = '+'; break;
        case Opcode::kSubInt: case Opcode::kSubInt2addr: op = '-'; break;
        case Opcode::kRsubIntLit8: op = 'r'; break;
        case Opcode::kMulInt: case Opcode::kMulInt2addr: case Opcode::kMulIntLit8: op = '*'; break;
        case Opcode::kDivInt: case Opcode::kDivInt2addr: case Opcode::kDivIntLit8: op = '/'; break;
        default: op = '%'; break;
      }
      uint32_t ux = static_cast<uint32_t>(x), uy = static_cast<uint32_t>(y);
      int32_t r = 0;
      switch (op) {
        case '+': r = static_cast<int32_t>(ux + uy); break;
        case '-': r = static_cast<int32_t>(ux - uy); break;
        case 'r': r = static_cast<int32_t>(uy - ux); break;
        case '*': r = static_cast<int32_t>(ux * uy); break;
        default:
          if (y == 0) {
            raise(kArithmeticException);
            return;
          }
          if (x == INT32_MIN && y == -1) {
            r = op == '/' ? INT32_MIN : 0;
          } else {
            r = op == '/' ? x / y : x % y;
          }
      }
      SetInt(f, a, r);
      done(li.next);
      return;
    }
  }
  Die(f, StrCat("unhandled opcode ", Mnemonic(li.op)));
}

// ---------------------------------------------------------------------------

Vm::Vm(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Vm::~Vm() = default;

absl::StatusOr<std::unique_ptr<Vm>> Vm::Create(std::shared_ptr<const LinkedProgram> program,
                                               Limits limits) {
  auto impl = std::make_unique<Impl>(std::move(program), limits);
  absl::Status s = impl->Init();
  if (!s.ok()) return s;
  return std::unique_ptr<Vm>(new Vm(std::move(impl)));
}

absl::StatusOr<CallOutcome> Vm::Call(std::string_view class_name, std::string_view method_id,
                                     const std::vector<Value>& args) {
  return impl_->Call(class_name, method_id, args);
}

const ExecutionTrace& Vm::trace() const { return impl_->trace(); }
void Vm::ClearTrace() { impl_->ClearTrace(); }
int64_t Vm::calls() const { return impl_->calls(); }

std::optional<std::vector<bool>> Vm::ReadBoolArray(std::string_view class_name,
                                                   std::string_view field) const {
  return impl_->ReadBoolArray(class_name, field);
}

const SmaliProgram& Vm::program() const { return impl_->program(); }

absl::StatusOr<RunResult> Interpret(const SmaliProgram& program, const EntryPoint& entry,
                                    const std::vector<Value>& args, Limits limits) {
  auto linked = Link(program);
  if (!linked.ok()) return linked.status();
  auto vm = Vm::Create(*linked, limits);
  if (!vm.ok()) return vm.status();
  auto outcome = (*vm)->Call(entry.class_name, entry.method, args);
  if (!outcome.ok()) return outcome.status();
  RunResult r;
  r.outcome = *std::move(outcome);
  r.trace = (*vm)->trace();
  if (const SmaliClass* storage = program.FindClass(kStorageClass)) {
    for (const FieldDecl& f : storage->fields) {
      if (auto bits = (*vm)->ReadBoolArray(kStorageClass, f.name)) r.storage[f.name] = *bits;
    }
  }
  return r;
}

}  // namespace acv
