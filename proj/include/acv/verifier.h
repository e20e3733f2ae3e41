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

// A small static checker for the structural rules a Dalvik verifier would
// reject: frame limits, register ranges per format, paired instructions,
// handler shape, label resolution and monitor balance.

#ifndef ACV_VERIFIER_H_
#define ACV_VERIFIER_H_

#include <string>
#include <vector>

#include "acv/smali_model.h"

namespace acv {

// Rule identifiers carried by violations.
namespace rule {
inline constexpr char kDuplicateClass[] = "duplicate-class";
inline constexpr char kClassName[] = "class-name";
inline constexpr char kDuplicateMethod[] = "duplicate-method";
inline constexpr char kUnresolvedClass[] = "unresolved-class";
inline constexpr char kUnresolvedMethod[] = "unresolved-method";
inline constexpr char kUnresolvedField[] = "unresolved-field";
inline constexpr char kEntryPoint[] = "entry-point";
inline constexpr char kFrameSize[] = "frame-size";
inline constexpr char kOperandShape[] = "operand-shape";
inline constexpr char kRegisterRange[] = "register-range";
inline constexpr char kRegisterBounds[] = "register-bounds";
inline constexpr char kLiteralRange[] = "literal-range";
inline constexpr char kInvokeArgs[] = "invoke-args";
inline constexpr char kPairedAdjacency[] = "paired-adjacency";
inline constexpr char kMoveException[] = "move-exception";
inline constexpr char kUnresolvedLabel[] = "unresolved-label";
inline constexpr char kDuplicateLabel[] = "duplicate-label";
inline constexpr char kTryRange[] = "try-range";
inline constexpr char kPayload[] = "payload";
inline constexpr char kFallOffEnd[] = "fall-off-end";
inline constexpr char kMonitorBalance[] = "monitor-balance";
inline constexpr char kMonitorImprecise[] = "monitor-imprecise";
}  // namespace rule

struct Violation {
  std::string class_name;
  std::string method;  // method id, empty for class-level rules
  int body_index = -1;
  std::string rule;
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct VerificationResult {
  std::vector<Violation> violations;
  // Imprecision of the monitor analysis; never makes a program invalid.
  std::vector<Violation> warnings;

  bool ok() const { return violations.empty(); }
  bool HasRule(std::string_view rule) const;
};

VerificationResult Verify(const SmaliProgram& program);

// Method-local checks only; `program` is used for reference resolution.
void VerifyMethod(const SmaliProgram& program, const SmaliClass& cls,
                  const SmaliMethod& method, VerificationResult& out);

std::string FormatViolation(const Violation& v);

}  // namespace acv

#endif  // ACV_VERIFIER_H_
