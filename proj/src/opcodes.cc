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

#include "acv/opcodes.h"
#include "acv/strings.h"

#include <cstdlib>
#include <iostream>
#include <string>
#include <unordered_map>


namespace acv {
namespace {

struct RawRow {
  Opcode opcode;
  std::string_view mnemonic;
  std::string_view operands;
  std::string_view kind;
  std::string_view flow;
  std::string_view throws;
};

constexpr RawRow kRawRows[] = {
#define ACV_OPCODE(id, mnemonic, operands, kind, flow, throws) \
  {Opcode::id, mnemonic, operands, kind, flow, throws},
#include "acv/opcodes.inc"
#undef ACV_OPCODE
};

[[noreturn]] void TableError(std::string_view mnemonic, std::string_view what) {
  std::cerr << "opcode table: " << mnemonic << ": " << what << "\n";
  std::abort();
}

OperandSpec ParseOperand(std::string_view mnemonic, std::string_view tok) {
  if (tok == "r4") return {OperandKind::kReg, 4};
  if (tok == "r8") return {OperandKind::kReg, 8};
  if (tok == "r16") return {OperandKind::kReg, 16};
  if (tok == "w4") return {OperandKind::kWideReg, 4};
  if (tok == "w8") return {OperandKind::kWideReg, 8};
  if (tok == "w16") return {OperandKind::kWideReg, 16};
  if (tok == "rlist") return {OperandKind::kRegList, 4};
  if (tok == "i4") return {OperandKind::kLiteral, 4};
  if (tok == "i8") return {OperandKind::kLiteral, 8};
  if (tok == "i16") return {OperandKind::kLiteral, 16};
  if (tok == "i32") return {OperandKind::kLiteral, 32};
  if (tok == "i64") return {OperandKind::kLiteral, 64};
  if (tok == "ih16") return {OperandKind::kLiteral, 32, true};
  if (tok == "iwh16") return {OperandKind::kLiteral, 64, true};
  if (tok == "label") return {OperandKind::kLabel};
  if (tok == "payload") return {OperandKind::kPayload};
  if (tok == "field") return {OperandKind::kField};
  if (tok == "method") return {OperandKind::kMethod};
  if (tok == "type") return {OperandKind::kType};
  TableError(mnemonic, "unknown operand token");
}

InstructionKind ParseKind(std::string_view mnemonic, std::string_view s) {
  if (s == "terminator") return InstructionKind::kFlowTerminator;
  if (s == "paired-first") return InstructionKind::kPairedFirst;
  if (s == "paired-second") return InstructionKind::kPairedSecond;
  if (s == "monitor") return InstructionKind::kMonitorOp;
  if (s == "plain") return InstructionKind::kPlain;
  TableError(mnemonic, "unknown kind");
}

FlowKind ParseFlow(std::string_view mnemonic, std::string_view s) {
  if (s == "next") return FlowKind::kNext;
  if (s == "goto") return FlowKind::kGoto;
  if (s == "if") return FlowKind::kIf;
  if (s == "switch") return FlowKind::kSwitch;
  if (s == "return") return FlowKind::kReturn;
  if (s == "throw") return FlowKind::kThrow;
  TableError(mnemonic, "unknown flow");
}

struct Table {
  std::vector<OpcodeInfo> rows;
  std::unordered_map<std::string_view, Opcode> by_mnemonic;
};

const Table& GetTable() {
  static const Table* table = [] {
    auto* t = new Table;
    t->rows.reserve(std::size(kRawRows));
    for (const RawRow& raw : kRawRows) {
      OpcodeInfo info{raw.opcode, raw.mnemonic, {}, ParseKind(raw.mnemonic, raw.kind),
                      ParseFlow(raw.mnemonic, raw.flow), raw.throws == "yes"};
      for (std::string_view tok :
           Split(raw.operands, " ", true)) {
        info.operands.push_back(ParseOperand(raw.mnemonic, tok));
      }
      if (static_cast<size_t>(raw.opcode) != t->rows.size()) {
        TableError(raw.mnemonic, "row order does not match enum order");
      }
      t->by_mnemonic.emplace(raw.mnemonic, raw.opcode);
      t->rows.push_back(std::move(info));
    }
    return t;
  }();
  return *table;
}

}  // namespace

int OpcodeInfo::register_operand_count() const {
  int n = 0;
  for (const OperandSpec& s : operands) {
    if (s.kind == OperandKind::kReg || s.kind == OperandKind::kWideReg) ++n;
  }
  return n;
}

bool OpcodeInfo::has_operand(OperandKind k) const {
  for (const OperandSpec& s : operands) {
    if (s.kind == k) return true;
  }
  return false;
}

const OpcodeInfo& Info(Opcode op) {
  return GetTable().rows[static_cast<size_t>(op)];
}

std::optional<Opcode> LookupOpcode(std::string_view mnemonic) {
  const auto& m = GetTable().by_mnemonic;
  auto it = m.find(mnemonic);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

std::span<const OpcodeInfo> OpcodeTable() { return GetTable().rows; }

std::string_view KindName(InstructionKind kind) {
  switch (kind) {
    case InstructionKind::kFlowTerminator:
      return "FlowTerminator";
    case InstructionKind::kPairedFirst:
      return "PairedFirst";
    case InstructionKind::kPairedSecond:
      return "PairedSecond";
    case InstructionKind::kMonitorOp:
      return "MonitorOp";
    case InstructionKind::kPlain:
      return "Plain";
  }
  return "?";
}

}  // namespace acv
