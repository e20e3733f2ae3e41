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

#include "acv/method_index.h"

#include <algorithm>

namespace acv {

MethodIndex::MethodIndex(const SmaliMethod& method) : method_(method) {
  const auto& body = method.body;
  for (size_t i = 0; i < body.size(); ++i) {
    const BodyItem& item = body[i];
    if (const auto* ins = std::get_if<Instruction>(&item)) {
      instructions_.push_back(static_cast<int>(i));
      FlowKind flow = Info(ins->opcode).flow;
      if (flow == FlowKind::kGoto || flow == FlowKind::kIf) {
        branch_targets_.insert(ins->label);
      }
    } else if (const auto* l = std::get_if<LabelDef>(&item)) {
      labels_.emplace(l->name, static_cast<int>(i));
      ++label_counts_[l->name];
    } else if (const auto* t = std::get_if<TryDirective>(&item)) {
      handler_labels_.insert(t->handler);
    } else if (const auto* s = std::get_if<SwitchPayload>(&item)) {
      for (const auto& target : s->targets) branch_targets_.insert(target);
    }
  }
  for (size_t i = 0; i < body.size(); ++i) {
    if (const auto* t = std::get_if<TryDirective>(&body[i])) {
      tries_.push_back({static_cast<int>(i), LabelPos(t->start), LabelPos(t->end)});
    }
  }
}

int MethodIndex::LabelPos(std::string_view label) const {
  auto it = labels_.find(std::string(label));
  return it == labels_.end() ? -1 : it->second;
}

int MethodIndex::LabelDefinitions(std::string_view label) const {
  auto it = label_counts_.find(std::string(label));
  return it == label_counts_.end() ? 0 : it->second;
}

int MethodIndex::InstructionAtOrAfter(int pos) const {
  const auto& body = method_.body;
  for (int i = std::max(pos, 0); i < static_cast<int>(body.size()); ++i) {
    const BodyItem& item = body[i];
    if (std::holds_alternative<Instruction>(item)) return i;
    if (std::holds_alternative<ArrayDataBlock>(item) ||
        std::holds_alternative<SwitchPayload>(item)) {
      return -1;
    }
  }
  return -1;
}

int MethodIndex::LabelTarget(std::string_view label) const {
  int pos = LabelPos(label);
  return pos < 0 ? -1 : InstructionAtOrAfter(pos);
}

int MethodIndex::PrevInstruction(int pos) const {
  auto it = std::lower_bound(instructions_.begin(), instructions_.end(), pos);
  if (it == instructions_.begin()) return -1;
  return *std::prev(it);
}

std::vector<std::string_view> MethodIndex::LabelsBefore(int pos) const {
  std::vector<std::string_view> out;
  for (int i = pos - 1; i >= 0; --i) {
    const BodyItem& item = method_.body[i];
    if (std::holds_alternative<Instruction>(item)) break;
    if (const auto* l = std::get_if<LabelDef>(&item)) out.push_back(l->name);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

const SwitchPayload* MethodIndex::SwitchAt(std::string_view label) const {
  int pos = LabelPos(label);
  if (pos < 0) return nullptr;
  for (size_t i = pos + 1; i < method_.body.size(); ++i) {
    const BodyItem& item = method_.body[i];
    if (std::holds_alternative<LabelDef>(item)) continue;
    return std::get_if<SwitchPayload>(&item);
  }
  return nullptr;
}

const ArrayDataBlock* MethodIndex::ArrayAt(std::string_view label) const {
  int pos = LabelPos(label);
  if (pos < 0) return nullptr;
  for (size_t i = pos + 1; i < method_.body.size(); ++i) {
    const BodyItem& item = method_.body[i];
    if (std::holds_alternative<LabelDef>(item)) continue;
    return std::get_if<ArrayDataBlock>(&item);
  }
  return nullptr;
}

std::vector<int> MethodIndex::Successors(int pos) const {
  const auto& ins = std::get<Instruction>(method_.body[pos]);
  std::vector<int> out;
  auto push = [&](int target) {
    if (target >= 0 && std::find(out.begin(), out.end(), target) == out.end()) {
      out.push_back(target);
    }
  };
  switch (Info(ins.opcode).flow) {
    case FlowKind::kNext:
      push(NextInstruction(pos));
      break;
    case FlowKind::kGoto:
      push(LabelTarget(ins.label));
      break;
    case FlowKind::kIf:
      push(NextInstruction(pos));
      push(LabelTarget(ins.label));
      break;
    case FlowKind::kSwitch:
      push(NextInstruction(pos));
      if (const SwitchPayload* s = SwitchAt(ins.label)) {
        for (const auto& t : s->targets) push(LabelTarget(t));
      }
      break;
    case FlowKind::kReturn:
    case FlowKind::kThrow:
      break;
  }
  return out;
}

std::vector<int> MethodIndex::CoveringTries(int pos) const {
  std::vector<const TryRange*> hits;
  for (const auto& t : tries_) {
    if (t.start >= 0 && t.end >= 0 && t.start < pos && pos < t.end) {
      hits.push_back(&t);
    }
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [](const TryRange* a, const TryRange* b) {
                     return (a->end - a->start) < (b->end - b->start);
                   });
  std::vector<int> out;
  out.reserve(hits.size());
  for (const auto* t : hits) out.push_back(t->directive);
  return out;
}

}  // namespace acv
