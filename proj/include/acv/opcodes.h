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

// The supported opcode subset. The table itself lives in data/opcodes.tsv and
// is compiled in through an X-macro include generated at configure time, so
// the parser, verifier, instrumenter and interpreter all read the same rows.

#ifndef ACV_OPCODES_H_
#define ACV_OPCODES_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace acv {

enum class Opcode : uint16_t {
#define ACV_OPCODE(id, mnemonic, operands, kind, flow, throws) id,
#include "acv/opcodes.inc"
#undef ACV_OPCODE
};

// Coverage-relevant classification of an opcode. Every opcode has exactly one.
enum class InstructionKind : uint8_t {
  kFlowTerminator,  // return*, goto*, throw
  kPairedFirst,     // invoke-*
  kPairedSecond,    // move-result*, move-exception
  kMonitorOp,       // monitor-enter, monitor-exit
  kPlain,
};

// How control leaves an instruction in the absence of exceptions.
enum class FlowKind : uint8_t { kNext, kGoto, kIf, kSwitch, kReturn, kThrow };

enum class OperandKind : uint8_t {
  kReg,       // single register
  kWideReg,   // register pair, first register named
  kRegList,   // {vA, vB, ...} of an invoke
  kLiteral,
  kLabel,     // branch target
  kPayload,   // label of an .array-data or switch payload
  kField,
  kMethod,
  kType,
};

struct OperandSpec {
  OperandKind kind;
  // Register index width for register operands, literal width otherwise.
  int bits = 0;
  // const/high16 style literal: only the top 16 bits may be set.
  bool high16 = false;
};

struct OpcodeInfo {
  Opcode opcode;
  std::string_view mnemonic;
  std::vector<OperandSpec> operands;
  InstructionKind kind;
  FlowKind flow;
  bool can_throw;

  int register_operand_count() const;
  bool has_operand(OperandKind k) const;
};

// Row of the table for `op`.
const OpcodeInfo& Info(Opcode op);
std::optional<Opcode> LookupOpcode(std::string_view mnemonic);
std::span<const OpcodeInfo> OpcodeTable();

inline std::string_view Mnemonic(Opcode op) { return Info(op).mnemonic; }

std::string_view KindName(InstructionKind kind);

}  // namespace acv

#endif  // ACV_OPCODES_H_
