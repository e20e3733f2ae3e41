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

#ifndef ACV_METHOD_INDEX_H_
#define ACV_METHOD_INDEX_H_

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "acv/smali_model.h"

namespace acv {

// Positional lookups over one method body. Positions are body indices.
// Holds a reference to the method; the method must outlive the index.
class MethodIndex {
 public:
  explicit MethodIndex(const SmaliMethod& method);

  const SmaliMethod& method() const { return method_; }
  const std::vector<int>& instructions() const { return instructions_; }

  // -1 when undefined. Duplicate definitions resolve to the first.
  int LabelPos(std::string_view label) const;
  int LabelDefinitions(std::string_view label) const;
  // First instruction at or after `pos`, stopping at payload blocks; -1 if
  // none.
  int InstructionAtOrAfter(int pos) const;
  // Instruction a label resolves to for control transfer, -1 if none.
  int LabelTarget(std::string_view label) const;
  int NextInstruction(int pos) const { return InstructionAtOrAfter(pos + 1); }
  int PrevInstruction(int pos) const;

  // Labels referenced by goto/if/switch payload entries.
  bool IsBranchTarget(std::string_view label) const {
    return branch_targets_.contains(std::string(label));
  }
  bool IsHandlerLabel(std::string_view label) const {
    return handler_labels_.contains(std::string(label));
  }
  // Labels defined between the previous instruction and instruction `pos`.
  std::vector<std::string_view> LabelsBefore(int pos) const;

  // Payload block the label names (skipping further labels), else nullptr.
  const SwitchPayload* SwitchAt(std::string_view label) const;
  const ArrayDataBlock* ArrayAt(std::string_view label) const;

  // Normal (non-exceptional) successors of the instruction at `pos`.
  std::vector<int> Successors(int pos) const;

  // Try directives whose range covers `pos`, innermost range first, ties in
  // declaration order. Values are body indices of the TryDirective items.
  std::vector<int> CoveringTries(int pos) const;

 private:
  struct TryRange {
    int directive;
    int start;
    int end;
  };

  const SmaliMethod& method_;
  std::vector<int> instructions_;
  std::unordered_map<std::string, int> labels_;
  std::unordered_map<std::string, int> label_counts_;
  std::unordered_set<std::string> branch_targets_;
  std::unordered_set<std::string> handler_labels_;
  std::vector<TryRange> tries_;
};

}  // namespace acv

#endif  // ACV_METHOD_INDEX_H_
