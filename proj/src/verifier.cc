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

#include <algorithm>
#include <deque>
#include <optional>
#include <set>

#include "acv/builtins.h"
#include "acv/method_index.h"
#include "acv/strings.h"

namespace acv {
namespace {

bool ClassExists(const SmaliProgram& program, std::string_view name) {
  return program.FindClass(name) != nullptr || FindBuiltinClass(name) != nullptr;
}

bool TypeResolves(const SmaliProgram& program, std::string_view type) {
  while (!type.empty() && type.front() == '[') type.remove_prefix(1);
  if (IsPrimitiveType(type)) return true;
  return IsClassDescriptor(type) && ClassExists(program, type);
}

std::string_view SuperOf(const SmaliProgram& program, std::string_view name) {
  if (const SmaliClass* c = program.FindClass(name)) return c->super_name;
  if (const BuiltinClass* b = FindBuiltinClass(name)) return b->super_name;
  return {};
}

struct ResolvedMethod {
  bool found = false;
  bool is_static = false;
};

ResolvedMethod ResolveMethod(const SmaliProgram& program, std::string_view owner,
                             std::string_view id) {
  std::string_view cls = owner;
  for (int depth = 0; !cls.empty() && depth < 256; ++depth) {
    if (const SmaliClass* c = program.FindClass(cls)) {
      if (const SmaliMethod* m = c->FindMethod(id)) return {true, m->is_static()};
    } else if (IsBuiltinMethod(cls, id)) {
      return {true, IsBuiltinStatic(cls, id)};
    }
    cls = SuperOf(program, cls);
  }
  return {};
}

const FieldDecl* ResolveField(const SmaliProgram& program, std::string_view owner,
                              std::string_view name) {
  std::string_view cls = owner;
  for (int depth = 0; !cls.empty() && depth < 256; ++depth) {
    const SmaliClass* c = program.FindClass(cls);
    if (c == nullptr) return nullptr;
    if (const FieldDecl* f = c->FindField(name)) return f;
    cls = c->super_name;
  }
  return nullptr;
}

bool LiteralFits(const OperandSpec& spec, int64_t v) {
  if (spec.high16) {
    if (spec.bits == 32) {
      return v >= INT32_MIN && v <= INT32_MAX && (v & 0xFFFF) == 0;
    }
    return (v & 0xFFFFFFFFFFFFLL) == 0;
  }
  if (spec.bits >= 64) return true;
  int64_t lo = -(int64_t{1} << (spec.bits - 1));
  int64_t hi = (int64_t{1} << (spec.bits - 1)) - 1;
  return v >= lo && v <= hi;
}

class MethodVerifier {
 public:
  MethodVerifier(const SmaliProgram& program, const SmaliClass& cls,
                 const SmaliMethod& method, VerificationResult& out)
      : program_(program), cls_(cls), method_(method), index_(method), out_(out) {}

  void Run() {
    if (method_.FrameSize() > kMaxFrameSize) {
      Add(-1, rule::kFrameSize,
          StrCat("frame ", method_.FrameSize(), " exceeds ", kMaxFrameSize));
    }
    CheckLabels();
    for (int pos : index_.instructions()) CheckInstruction(pos);
    CheckTries();
    CheckMonitors();
  }

 private:
  void Add(int pos, const char* rule, std::string msg) {
    out_.violations.push_back({cls_.name, method_.Id(), pos, rule, std::move(msg)});
  }
  void Warn(int pos, const char* rule, std::string msg) {
    out_.warnings.push_back({cls_.name, method_.Id(), pos, rule, std::move(msg)});
  }

  void RequireLabel(int pos, std::string_view label) {
    int n = index_.LabelDefinitions(label);
    if (n == 0) Add(pos, rule::kUnresolvedLabel, StrCat(":", label, " is not defined"));
  }

  void CheckLabels() {
    std::set<std::string> seen;
    for (size_t i = 0; i < method_.body.size(); ++i) {
      const BodyItem& item = method_.body[i];
      if (const auto* l = std::get_if<LabelDef>(&item)) {
        if (!seen.insert(l->name).second) {
          Add(static_cast<int>(i), rule::kDuplicateLabel,
              StrCat(":", l->name, " defined more than once"));
        }
      } else if (const auto* s = std::get_if<SwitchPayload>(&item)) {
        for (const auto& t : s->targets) RequireLabel(static_cast<int>(i), t);
        if (!s->packed && s->keys.size() != s->targets.size()) {
          Add(static_cast<int>(i), rule::kPayload, "sparse-switch key/target count mismatch");
        }
      }
    }
  }

  void CheckRegister(int pos, const OperandSpec& spec, const Reg& r) {
    uint32_t abs = r.Absolute(method_.locals);
    uint32_t limit = spec.bits >= 16 ? 65536u : (1u << spec.bits);
    if (abs >= limit) {
      Add(pos, rule::kRegisterRange,
          StrCat("v", abs, " not addressable by a ", spec.bits, "-bit operand"));
    }
    uint32_t last = abs + (spec.kind == OperandKind::kWideReg ? 1 : 0);
    if (last >= static_cast<uint32_t>(method_.FrameSize())) {
      Add(pos, rule::kRegisterBounds,
          StrCat("v", last, " outside frame of ", method_.FrameSize()));
    }
  }

  void CheckInstruction(int pos) {
    const auto& ins = std::get<Instruction>(method_.body[pos]);
    const OpcodeInfo& info = Info(ins.opcode);

    // Operand shape.
    size_t reg_slot = 0;
    bool shape_ok = true;
    for (const OperandSpec& spec : info.operands) {
      switch (spec.kind) {
        case OperandKind::kReg:
        case OperandKind::kWideReg:
          if (reg_slot >= ins.regs.size()) {
            shape_ok = false;
            break;
          }
          CheckRegister(pos, spec, ins.regs[reg_slot++]);
          break;
        case OperandKind::kRegList:
          if (ins.regs.size() > 5) {
            Add(pos, rule::kRegisterRange, "invoke lists more than 5 registers");
          }
          for (; reg_slot < ins.regs.size(); ++reg_slot) {
            CheckRegister(pos, spec, ins.regs[reg_slot]);
          }
          break;
        case OperandKind::kLiteral:
          if (!ins.literal.has_value()) {
            shape_ok = false;
          } else if (!LiteralFits(spec, *ins.literal)) {
            Add(pos, rule::kLiteralRange,
                StrCat("literal ", *ins.literal, " does not fit ", info.mnemonic));
          }
          break;
        case OperandKind::kLabel:
          if (ins.label.empty()) shape_ok = false;
          else RequireLabel(pos, ins.label);
          break;
        case OperandKind::kPayload:
          if (ins.label.empty()) {
            shape_ok = false;
          } else {
            RequireLabel(pos, ins.label);
            CheckPayload(pos, ins);
          }
          break;
        case OperandKind::kField:
        case OperandKind::kMethod:
        case OperandKind::kType:
          if (!ins.ref.has_value()) shape_ok = false;
          break;
      }
    }
    if (reg_slot != ins.regs.size()) shape_ok = false;
    if (!info.has_operand(OperandKind::kLiteral) && ins.literal.has_value()) shape_ok = false;
    if (!shape_ok) {
      Add(pos, rule::kOperandShape,
          StrCat("operands do not match the format of ", info.mnemonic));
      return;
    }

    if (info.has_operand(OperandKind::kMethod)) CheckInvoke(pos, ins);
    if (info.has_operand(OperandKind::kField)) CheckField(pos, ins);
    if (info.has_operand(OperandKind::kType) && !TypeResolves(program_, ins.ref->owner)) {
      Add(pos, rule::kUnresolvedClass, StrCat(ins.ref->owner, " is not defined"));
    }

    switch (info.kind) {
      case InstructionKind::kPairedSecond:
        if (ins.opcode == Opcode::kMoveException) {
          CheckMoveException(pos);
        } else {
          CheckMoveResult(pos, ins);
        }
        break;
      default:
        break;
    }

    if (info.flow == FlowKind::kNext || info.flow == FlowKind::kIf ||
        info.flow == FlowKind::kSwitch) {
      if (index_.NextInstruction(pos) < 0) {
        Add(pos, rule::kFallOffEnd, "control falls off the end of the code");
      }
    }
  }

  void CheckPayload(int pos, const Instruction& ins) {
    if (ins.opcode == Opcode::kFillArrayData) {
      if (index_.ArrayAt(ins.label) == nullptr) {
        Add(pos, rule::kPayload, StrCat(":", ins.label, " is not an .array-data block"));
      }
      return;
    }
    const SwitchPayload* s = index_.SwitchAt(ins.label);
    bool packed = ins.opcode == Opcode::kPackedSwitch;
    if (s == nullptr || s->packed != packed) {
      Add(pos, rule::kPayload,
          StrCat(":", ins.label, " is not a ", packed ? "packed" : "sparse",
                       "-switch payload"));
    }
  }

  void CheckInvoke(int pos, const Instruction& ins) {
    const MemberRef& ref = *ins.ref;
    if (!ClassExists(program_, ref.owner)) {
      Add(pos, rule::kUnresolvedClass, StrCat(ref.owner, " is not defined"));
      return;
    }
    std::string id = ref.name + ref.type;
    ResolvedMethod m = ResolveMethod(program_, ref.owner, id);
    if (!m.found) {
      Add(pos, rule::kUnresolvedMethod, StrCat(ref.owner, "->", id, " is not defined"));
      return;
    }
    bool want_static = ins.opcode == Opcode::kInvokeStatic;
    if (m.is_static != want_static) {
      Add(pos, rule::kInvokeArgs,
          StrCat(Mnemonic(ins.opcode), " on ", m.is_static ? "static" : "instance",
                       " method ", id));
    }
    auto proto = ParsePrototype(ref.type);
    if (!proto.has_value()) {
      Add(pos, rule::kOperandShape, StrCat("malformed prototype ", ref.type));
      return;
    }
    size_t width = want_static ? 0 : 1;
    for (const auto& p : proto->first) width += TypeWidth(p);
    if (ins.regs.size() != width) {
      Add(pos, rule::kInvokeArgs,
          StrCat(id, " takes ", width, " registers, ", ins.regs.size(), " given"));
      return;
    }
    size_t slot = want_static ? 0 : 1;
    for (const auto& p : proto->first) {
      if (TypeWidth(p) == 2 &&
          ins.regs[slot + 1].Absolute(method_.locals) !=
              ins.regs[slot].Absolute(method_.locals) + 1) {
        Add(pos, rule::kInvokeArgs, "wide argument registers are not consecutive");
      }
      slot += TypeWidth(p);
    }
  }

  void CheckField(int pos, const Instruction& ins) {
    const MemberRef& ref = *ins.ref;
    if (!ClassExists(program_, ref.owner)) {
      Add(pos, rule::kUnresolvedClass, StrCat(ref.owner, " is not defined"));
      return;
    }
    const FieldDecl* f = ResolveField(program_, ref.owner, ref.name);
    if (f == nullptr || f->type != ref.type) {
      Add(pos, rule::kUnresolvedField,
          StrCat(ref.owner, "->", ref.name, ":", ref.type, " is not defined"));
      return;
    }
    bool static_op = ins.opcode == Opcode::kSget || ins.opcode == Opcode::kSput ||
                     ins.opcode == Opcode::kSgetObject ||
                     ins.opcode == Opcode::kSputObject;
    if (f->is_static() != static_op) {
      Add(pos, rule::kUnresolvedField,
          StrCat(Mnemonic(ins.opcode), " on ", f->is_static() ? "static" : "instance",
                       " field ", ref.name));
    }
  }

  // No branch target or handler may sit between the pair.
  bool LabelsAreTransparent(int pos) const {
    for (std::string_view l : index_.LabelsBefore(pos)) {
      if (index_.IsBranchTarget(l) || index_.IsHandlerLabel(l)) return false;
    }
    return true;
  }

  void CheckMoveResult(int pos, const Instruction& ins) {
    int prev = index_.PrevInstruction(pos);
    const Instruction* first =
        prev < 0 ? nullptr : &std::get<Instruction>(method_.body[prev]);
    if (first == nullptr || Classify(*first) != InstructionKind::kPairedFirst ||
        !LabelsAreTransparent(pos)) {
      Add(pos, rule::kPairedAdjacency,
          StrCat(Mnemonic(ins.opcode), " does not immediately follow an invoke"));
      return;
    }
    auto proto = ParsePrototype(first->ref ? first->ref->type : "");
    if (!proto.has_value()) return;
    const std::string& ret = proto->second;
    Opcode want = ret == "V"                ? Opcode::kNop
                  : TypeWidth(ret) == 2     ? Opcode::kMoveResultWide
                  : IsReferenceType(ret)    ? Opcode::kMoveResultObject
                                            : Opcode::kMoveResult;
    if (want != ins.opcode) {
      Add(pos, rule::kPairedAdjacency,
          StrCat(Mnemonic(ins.opcode), " does not match return type ", ret));
    }
  }

  void CheckMoveException(int pos) {
    bool at_handler = false;
    for (std::string_view l : index_.LabelsBefore(pos)) {
      if (index_.IsHandlerLabel(l)) at_handler = true;
    }
    int prev = index_.PrevInstruction(pos);
    bool falls_in = false;
    if (prev >= 0) {
      FlowKind f = Info(std::get<Instruction>(method_.body[prev]).opcode).flow;
      falls_in = f == FlowKind::kNext || f == FlowKind::kIf || f == FlowKind::kSwitch;
    }
    if (!at_handler || falls_in) {
      Add(pos, rule::kMoveException,
          "move-exception must be the first instruction of a catch handler");
    }
  }

  void CheckTries() {
    struct Range {
      int start, end;
    };
    std::vector<Range> ranges;
    for (size_t i = 0; i < method_.body.size(); ++i) {
      const auto* t = std::get_if<TryDirective>(&method_.body[i]);
      if (t == nullptr) continue;
      int pos = static_cast<int>(i);
      RequireLabel(pos, t->start);
      RequireLabel(pos, t->end);
      RequireLabel(pos, t->handler);
      if (t->exception_type.has_value() && !TypeResolves(program_, *t->exception_type)) {
        Add(pos, rule::kUnresolvedClass, StrCat(*t->exception_type, " is not defined"));
      }
      int s = index_.LabelPos(t->start);
      int e = index_.LabelPos(t->end);
      if (s < 0 || e < 0) continue;
      int first = index_.InstructionAtOrAfter(s);
      if (s >= e || first < 0 || first > e) {
        Add(pos, rule::kTryRange,
            StrCat("try range :", t->start, " .. :", t->end, " is empty"));
        continue;
      }
      if (index_.LabelTarget(t->handler) < 0 && index_.LabelPos(t->handler) >= 0) {
        Add(pos, rule::kTryRange, StrCat("handler :", t->handler, " has no code"));
      }
      ranges.push_back({s, e});
    }
    for (size_t a = 0; a < ranges.size(); ++a) {
      for (size_t b = a + 1; b < ranges.size(); ++b) {
        const Range& x = ranges[a];
        const Range& y = ranges[b];
        bool disjoint = x.end <= y.start || y.end <= x.start;
        bool nested = (x.start <= y.start && y.end <= x.end) ||
                      (y.start <= x.start && x.end <= y.end);
        if (!disjoint && !nested) {
          Add(-1, rule::kTryRange, "try ranges overlap without nesting");
        }
      }
    }
  }

  // Depth-counter dataflow. The first depth reaching a point wins; a
  // conflicting later arrival is reported as imprecision and not propagated.
  void CheckMonitors() {
    const auto& instrs = index_.instructions();
    if (instrs.empty()) return;
    bool has_monitor = std::any_of(instrs.begin(), instrs.end(), [&](int p) {
      return Classify(std::get<Instruction>(method_.body[p])) == InstructionKind::kMonitorOp;
    });
    if (!has_monitor) return;

    std::vector<std::optional<int>> depth(method_.body.size());
    std::set<int> conflicted;
    std::deque<int> work;
    auto reach = [&](int pos, int d) {
      if (pos < 0) return;
      if (!depth[pos].has_value()) {
        depth[pos] = d;
        work.push_back(pos);
      } else if (*depth[pos] != d && conflicted.insert(pos).second) {
        Warn(pos, rule::kMonitorImprecise,
             StrCat("monitor depth ", *depth[pos], " vs ", d, " at merge"));
      }
    };
    reach(instrs.front(), 0);
    while (!work.empty()) {
      int pos = work.front();
      work.pop_front();
      const auto& ins = std::get<Instruction>(method_.body[pos]);
      const OpcodeInfo& info = Info(ins.opcode);
      int in = *depth[pos];
      int out = in;
      if (ins.opcode == Opcode::kMonitorEnter) out = in + 1;
      if (ins.opcode == Opcode::kMonitorExit) {
        out = in - 1;
        if (out < 0) {
          Add(pos, rule::kMonitorBalance, "monitor-exit without a matching monitor-enter");
          out = 0;
        }
      }
      if (info.flow == FlowKind::kReturn && in != 0) {
        Add(pos, rule::kMonitorBalance,
            StrCat("return with ", in, " monitor(s) still held"));
      }
      if (info.can_throw) {
        for (int t : index_.CoveringTries(pos)) {
          const auto& dir = std::get<TryDirective>(method_.body[t]);
          reach(index_.LabelTarget(dir.handler), in);
        }
      }
      for (int succ : index_.Successors(pos)) reach(succ, out);
    }
  }

  const SmaliProgram& program_;
  const SmaliClass& cls_;
  const SmaliMethod& method_;
  MethodIndex index_;
  VerificationResult& out_;
};

}  // namespace

bool VerificationResult::HasRule(std::string_view r) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.rule == r; });
}

void VerifyMethod(const SmaliProgram& program, const SmaliClass& cls,
                  const SmaliMethod& method, VerificationResult& out) {
  MethodVerifier(program, cls, method, out).Run();
}

VerificationResult Verify(const SmaliProgram& program) {
  VerificationResult out;
  std::set<std::string> names;
  for (const SmaliClass& cls : program.classes) {
    if (!IsClassDescriptor(cls.name)) {
      out.violations.push_back({cls.name, "", -1, rule::kClassName,
                                "class name is not a type descriptor"});
    }
    if (!names.insert(cls.name).second || FindBuiltinClass(cls.name) != nullptr) {
      out.violations.push_back({cls.name, "", -1, rule::kDuplicateClass,
                                "class declared more than once"});
    }
    if (!ClassExists(program, cls.super_name)) {
      out.violations.push_back({cls.name, "", -1, rule::kUnresolvedClass,
                                StrCat("super ", cls.super_name, " is not defined")});
    }
    std::set<std::string> ids;
    for (const SmaliMethod& m : cls.methods) {
      if (!ids.insert(m.Id()).second) {
        out.violations.push_back({cls.name, m.Id(), -1, rule::kDuplicateMethod,
                                  "method declared more than once"});
      }
    }
  }
  for (const SmaliClass& cls : program.classes) {
    for (const SmaliMethod& m : cls.methods) VerifyMethod(program, cls, m, out);
  }
  for (const EntryPoint& e : program.entry_points) {
    const SmaliMethod* m = program.FindMethod(e.class_name, e.method);
    if (m == nullptr || !m->is_static()) {
      out.violations.push_back({e.class_name, e.method, -1, rule::kEntryPoint,
                                "entry point is missing or not static"});
    }
  }
  return out;
}

std::string FormatViolation(const Violation& v) {
  std::string where = v.class_name;
  if (!v.method.empty()) StrAppend(&where, "->", v.method);
  if (v.body_index >= 0) StrAppend(&where, " @", v.body_index);
  return StrCat(where, ": [", v.rule, "] ", v.message);
}

}  // namespace acv
