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

#include "acv/smali_model.h"
#include "acv/strings.h"

#include <algorithm>

#include "absl/status/status.h"

namespace acv {
namespace {

bool HasFlag(const std::vector<std::string>& flags, std::string_view f) {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

// Length of the single type descriptor at the front of `s`, 0 if malformed.
size_t TypeLength(std::string_view s) {
  size_t i = 0;
  while (i < s.size() && s[i] == '[') ++i;
  if (i >= s.size()) return 0;
  switch (s[i]) {
    case 'Z': case 'B': case 'S': case 'C': case 'I': case 'J': case 'F':
    case 'D':
      return i + 1;
    case 'V':
      return i == 0 ? 1 : 0;
    case 'L': {
      size_t semi = s.find(';', i);
      if (semi == std::string_view::npos || semi == i + 1) return 0;
      return semi + 1;
    }
    default:
      return 0;
  }
}

}  // namespace

bool FieldDecl::is_static() const { return HasFlag(flags, "static"); }

bool SmaliMethod::is_static() const { return HasFlag(flags, "static"); }

std::string SmaliMethod::Descriptor() const {
  std::string d = "(";
  for (const auto& p : param_types) d += p;
  d += ")";
  d += return_type;
  return d;
}

std::string SmaliMethod::Id() const { return name + Descriptor(); }

int SmaliMethod::ParamWidth() const {
  int w = is_static() ? 0 : 1;
  for (const auto& p : param_types) w += TypeWidth(p);
  return w;
}

const SmaliMethod* SmaliClass::FindMethod(std::string_view id) const {
  for (const auto& m : methods) {
    if (m.Id() == id) return &m;
  }
  return nullptr;
}

const FieldDecl* SmaliClass::FindField(std::string_view name) const {
  for (const auto& f : fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const SmaliClass* SmaliProgram::FindClass(std::string_view name) const {
  for (const auto& c : classes) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const SmaliMethod* SmaliProgram::FindMethod(std::string_view class_name,
                                            std::string_view method_id) const {
  const SmaliClass* c = FindClass(class_name);
  return c == nullptr ? nullptr : c->FindMethod(method_id);
}

std::vector<EntryPoint> DeriveEntryPoints(const SmaliProgram& program) {
  std::vector<EntryPoint> out;
  for (const auto& c : program.classes) {
    for (const auto& m : c.methods) {
      if (!m.is_static() || m.name == "<clinit>") continue;
      bool primitive = std::all_of(m.param_types.begin(), m.param_types.end(),
                                   [](const std::string& t) {
                                     return IsPrimitiveType(t);
                                   });
      if (primitive) out.push_back({c.name, m.Id()});
    }
  }
  return out;
}

InstructionKind Classify(const Instruction& instr) {
  return Info(instr.opcode).kind;
}

absl::StatusOr<InstructionKind> ClassifyMnemonic(std::string_view mnemonic) {
  std::optional<Opcode> op = LookupOpcode(mnemonic);
  if (!op.has_value()) {
    return absl::InvalidArgumentError(
        StrCat("UnsupportedOpcode: ", mnemonic));
  }
  return Info(*op).kind;
}

absl::StatusOr<FrameLayout> ComputeFrameLayout(const SmaliMethod& method,
                                               std::string_view class_name) {
  FrameLayout layout;
  layout.frame_size = method.FrameSize();
  if (layout.frame_size > kMaxFrameSize) {
    return absl::OutOfRangeError(StrCat(
        "FrameSize: ", class_name, "->", method.Id(), " needs ",
        layout.frame_size, " registers, limit is ", kMaxFrameSize));
  }
  uint32_t p = 0;
  auto add = [&](const std::string& type) {
    int w = TypeWidth(type);
    layout.params.push_back(
        {p, static_cast<uint32_t>(method.locals) + p, w, type});
    p += w;
  };
  if (!method.is_static()) add(std::string(class_name));
  for (const auto& t : method.param_types) add(t);
  return layout;
}

int TypeWidth(std::string_view type) {
  return (type == "J" || type == "D") ? 2 : 1;
}

bool IsReferenceType(std::string_view type) {
  return !type.empty() && (type[0] == 'L' || type[0] == '[');
}

bool IsPrimitiveType(std::string_view type) {
  return type.size() == 1 && std::string_view("ZBSCIJFD").find(type[0]) !=
                                 std::string_view::npos;
}

bool IsClassDescriptor(std::string_view type) {
  return type.size() >= 3 && type.front() == 'L' && type.back() == ';' &&
         TypeLength(type) == type.size();
}

std::optional<std::pair<std::vector<std::string>, std::string>> ParsePrototype(
    std::string_view proto) {
  if (proto.empty() || proto[0] != '(') return std::nullopt;
  size_t close = proto.find(')');
  if (close == std::string_view::npos) return std::nullopt;
  std::vector<std::string> params;
  std::string_view rest = proto.substr(1, close - 1);
  while (!rest.empty()) {
    size_t n = TypeLength(rest);
    if (n == 0 || rest.substr(0, n) == "V") return std::nullopt;
    params.emplace_back(rest.substr(0, n));
    rest.remove_prefix(n);
  }
  std::string_view ret = proto.substr(close + 1);
  if (ret.empty() || TypeLength(ret) != ret.size()) return std::nullopt;
  return std::make_pair(std::move(params), std::string(ret));
}

std::string FlatClassName(std::string_view descriptor) {
  std::string_view s = descriptor;
  if (!s.empty() && s.front() == 'L') s.remove_prefix(1);
  if (!s.empty() && s.back() == ';') s.remove_suffix(1);
  std::string out(s);
  std::replace(out.begin(), out.end(), '/', '_');
  return out;
}

int FindLabel(const std::vector<BodyItem>& body, std::string_view name) {
  for (size_t i = 0; i < body.size(); ++i) {
    if (const auto* l = std::get_if<LabelDef>(&body[i]); l && l->name == name) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

int CountInstructions(const SmaliMethod& method) {
  return static_cast<int>(
      std::count_if(method.body.begin(), method.body.end(),
                    [](const BodyItem& b) { return AsInstruction(b) != nullptr; }));
}

int CountInstructions(const SmaliProgram& program) {
  int n = 0;
  for (const auto& c : program.classes) {
    for (const auto& m : c.methods) n += CountInstructions(m);
  }
  return n;
}

}  // namespace acv
