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

// In-memory tree of smali code: program -> classes -> methods -> body items.
// All types are plain values; structural equality is operator==.

#ifndef ACV_SMALI_MODEL_H_
#define ACV_SMALI_MODEL_H_

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "acv/opcodes.h"

namespace acv {

inline constexpr int kMaxFrameSize = 256;

// A register operand as written in source: vN (local numbering) or pK
// (parameter numbering, aliasing v(locals + K)).
struct Reg {
  enum class Space : uint8_t { kLocal, kParam };
  Space space = Space::kLocal;
  uint32_t index = 0;

  static Reg V(uint32_t i) { return {Space::kLocal, i}; }
  static Reg P(uint32_t i) { return {Space::kParam, i}; }
  bool is_param() const { return space == Space::kParam; }
  // Absolute frame index given the method's .locals count.
  uint32_t Absolute(uint32_t locals) const {
    return is_param() ? locals + index : index;
  }

  auto operator<=>(const Reg&) const = default;
};

// Symbolic operand. For fields `type` is the field type, for methods it is
// the prototype "(II)V", for type operands only `owner` is set.
struct MemberRef {
  std::string owner;
  std::string name;
  std::string type;

  bool operator==(const MemberRef&) const = default;
};

struct Instruction {
  Opcode opcode = Opcode::kNop;
  // Wide operands list only the first register of the pair; invoke lists
  // every register exactly as written.
  std::vector<Reg> regs;
  std::optional<int64_t> literal;
  std::string label;  // branch or payload target, without the ':'
  std::optional<MemberRef> ref;

  bool operator==(const Instruction&) const = default;
};

struct LabelDef {
  std::string name;
  bool operator==(const LabelDef&) const = default;
};

// .catch / .catchall. A catch-all has no exception type.
struct TryDirective {
  std::string start;
  std::string end;
  std::optional<std::string> exception_type;
  std::string handler;
  bool operator==(const TryDirective&) const = default;
};

struct ArrayDataBlock {
  int element_width = 4;
  std::vector<int64_t> values;
  bool operator==(const ArrayDataBlock&) const = default;
};

// .packed-switch (consecutive keys from first_key) or .sparse-switch.
struct SwitchPayload {
  bool packed = true;
  int32_t first_key = 0;
  std::vector<int32_t> keys;  // sparse only
  std::vector<std::string> targets;
  bool operator==(const SwitchPayload&) const = default;

  int32_t KeyAt(size_t i) const {
    return packed ? first_key + static_cast<int32_t>(i) : keys[i];
  }
};

using BodyItem =
    std::variant<Instruction, LabelDef, TryDirective, ArrayDataBlock, SwitchPayload>;

struct FieldDecl {
  std::string name;
  std::string type;
  std::vector<std::string> flags;
  bool is_static() const;
  bool operator==(const FieldDecl&) const = default;
};

struct SmaliMethod {
  std::string name;
  std::vector<std::string> param_types;
  std::string return_type = "V";
  std::vector<std::string> flags;
  int locals = 0;
  std::vector<BodyItem> body;

  bool is_static() const;
  // "(IJ)V"
  std::string Descriptor() const;
  // "name(IJ)V", unique within a class.
  std::string Id() const;
  // Registers taken by parameters, `this` included.
  int ParamWidth() const;
  int FrameSize() const { return locals + ParamWidth(); }

  bool operator==(const SmaliMethod&) const = default;
};

struct SmaliClass {
  std::string name;        // Lpkg/Name;
  std::string super_name;  // Lpkg/Base;
  std::vector<std::string> flags;
  std::vector<FieldDecl> fields;
  std::vector<SmaliMethod> methods;

  const SmaliMethod* FindMethod(std::string_view id) const;
  const FieldDecl* FindField(std::string_view name) const;
  bool operator==(const SmaliClass&) const = default;
};

struct EntryPoint {
  std::string class_name;
  std::string method;  // name + descriptor
  auto operator<=>(const EntryPoint&) const = default;
};

struct SmaliProgram {
  std::vector<SmaliClass> classes;
  std::vector<EntryPoint> entry_points;

  const SmaliClass* FindClass(std::string_view name) const;
  const SmaliMethod* FindMethod(std::string_view class_name,
                                std::string_view method_id) const;
  bool operator==(const SmaliProgram&) const = default;
};

// Entry points are the static methods with primitive-only parameters,
// static initializers excluded.
std::vector<EntryPoint> DeriveEntryPoints(const SmaliProgram& program);

// Unsupported opcodes cannot be represented in the model; the parser reports
// them as UnsupportedOpcode. This form is total over Opcode.
InstructionKind Classify(const Instruction& instr);
absl::StatusOr<InstructionKind> ClassifyMnemonic(std::string_view mnemonic);

struct ParamSlot {
  uint32_t p_index;  // K in pK
  uint32_t v_index;  // absolute register
  int width;         // 1 or 2
  std::string type;  // descriptor; the declaring class for `this`
};

struct FrameLayout {
  int frame_size = 0;
  std::vector<ParamSlot> params;
};

// Errors with kOutOfRange ("FrameSize") when the frame exceeds 256.
absl::StatusOr<FrameLayout> ComputeFrameLayout(const SmaliMethod& method,
                                               std::string_view class_name);

// Descriptor helpers.
int TypeWidth(std::string_view type);  // 2 for J and D
bool IsReferenceType(std::string_view type);
bool IsPrimitiveType(std::string_view type);
bool IsClassDescriptor(std::string_view type);
// "(IJ)V" -> {"I","J"}, "V". Returns nullopt when malformed.
std::optional<std::pair<std::vector<std::string>, std::string>> ParsePrototype(
    std::string_view proto);
// Lcom/demo/Activity; -> com_demo_Activity
std::string FlatClassName(std::string_view descriptor);

// Index of the label definition in `body`, or -1.
int FindLabel(const std::vector<BodyItem>& body, std::string_view name);

inline const Instruction* AsInstruction(const BodyItem& item) {
  return std::get_if<Instruction>(&item);
}

int CountInstructions(const SmaliMethod& method);
int CountInstructions(const SmaliProgram& program);

}  // namespace acv

#endif  // ACV_SMALI_MODEL_H_
