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

#include "acv/instrumenter.h"

#include <algorithm>
#include <map>
#include <set>

#include "absl/status/status.h"
#include "acv/method_index.h"
#include "acv/strings.h"
#include "json.hpp"

namespace acv {
namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kBoolArray = "[Z";

bool IsBranch(const Instruction& ins) {
  FlowKind f = Info(ins.opcode).flow;
  return f == FlowKind::kIf || f == FlowKind::kSwitch;
}

bool HasFlag(const SmaliMethod& m, std::string_view flag) {
  return std::find(m.flags.begin(), m.flags.end(), flag) != m.flags.end();
}

// Methods without code (abstract, native) carry no probes.
bool HasCode(const SmaliMethod& m) {
  return !HasFlag(m, "abstract") && !HasFlag(m, "native") && CountInstructions(m) > 0;
}

int ParamSlots(const SmaliMethod& m) {
  return static_cast<int>(m.param_types.size()) + (m.is_static() ? 0 : 1);
}

Instruction Make(Opcode op, std::vector<Reg> regs) {
  Instruction ins;
  ins.opcode = op;
  ins.regs = std::move(regs);
  return ins;
}

Instruction MakeConst(uint32_t reg, int64_t value) {
  Instruction ins = Make(value >= -32768 && value <= 32767 ? Opcode::kConst16 : Opcode::kConst,
                         {Reg::V(reg)});
  ins.literal = value;
  return ins;
}

Instruction MakeGoto32(std::string label) {
  Instruction ins = Make(Opcode::kGoto32, {});
  ins.label = std::move(label);
  return ins;
}

struct Site {
  int insert_at;  // original body index the probe goes in front of
  ProbeKind kind;
  int body_index;  // instruction the probe belongs to
};

// Probe sites of one method in body order.
std::vector<Site> ProbeSites(const SmaliMethod& m) {
  MethodIndex index(m);
  std::vector<Site> sites;
  const std::vector<int>& instrs = index.instructions();
  std::set<int> fallthroughs;
  for (int pos : instrs) {
    const auto& ins = std::get<Instruction>(m.body[pos]);
    if (IsBranch(ins)) {
      int next = index.NextInstruction(pos);
      if (next >= 0) fallthroughs.insert(next);
    }
  }
  for (int pos : instrs) {
    const auto& ins = std::get<Instruction>(m.body[pos]);
    InstructionKind kind = Info(ins.opcode).kind;
    bool branch_target = false;
    for (std::string_view l : index.LabelsBefore(pos)) {
      branch_target = branch_target || index.IsBranchTarget(l);
    }
    bool leader = branch_target || fallthroughs.contains(pos);
    if (leader && !IsBranch(ins) && kind != InstructionKind::kPairedSecond) {
      sites.push_back({pos, ProbeKind::kBlock, pos});
    }
    if (!Traceable(ins)) continue;
    if (IsBranch(ins)) {
      sites.push_back({pos, ProbeKind::kInstruction, pos});
    } else {
      sites.push_back({pos + 1, ProbeKind::kInstruction, pos});
    }
  }
  return sites;
}

bool UsesReservedLabel(const SmaliMethod& m) {
  for (const auto& item : m.body) {
    if (const auto* l = std::get_if<LabelDef>(&item);
        l != nullptr && l->name.starts_with(kTrampolinePrefix)) {
      return true;
    }
  }
  return false;
}

class ClassInstrumenter {
 public:
  ClassInstrumenter(const SmaliClass& cls, Granularity g, std::string storage_field)
      : cls_(cls), granularity_(g) {
    probes_.name = cls.name;
    probes_.storage_field = std::move(storage_field);
    if (g == Granularity::kClass) {
      probes_.probes.push_back({0, ProbeKind::kClass, "", -1});
    }
  }

  absl::StatusOr<SmaliClass> Run() {
    SmaliClass out = cls_;
    for (size_t i = 0; i < cls_.methods.size(); ++i) {
      const SmaliMethod& m = cls_.methods[i];
      for (const auto& item : m.body) {
        if (const auto* ins = AsInstruction(item)) {
          (Traceable(*ins) ? probes_.traceable_count : probes_.untraceable_count)++;
        }
      }
      if (!HasCode(m)) continue;
      if (m.FrameSize() + 3 > kMaxFrameSize) {
        return absl::ResourceExhaustedError(
            StrCat("FrameOverflow: ", cls_.name, "->", m.Id(), " has frame ", m.FrameSize(),
                   ", no room for 3 probe registers (limit ", kMaxFrameSize, ")"));
      }
      out.methods[i] = Method(m);
    }
    return out;
  }

  ClassProbes& probes() { return probes_; }

 private:
  int AddProbe(ProbeKind kind, const std::string& method, int body_index) {
    int idx = static_cast<int>(probes_.probes.size());
    probes_.probes.push_back({idx, kind, method, body_index});
    return idx;
  }

  // sget-object vA, storage; const/16 vT, 1; const vI, idx; aput-boolean.
  void EmitInlineProbe(std::vector<BodyItem>& body, uint32_t a, int index) const {
    Instruction sget = Make(Opcode::kSgetObject, {Reg::V(a)});
    sget.ref = MemberRef{std::string(kStorageClass), probes_.storage_field, std::string(kBoolArray)};
    body.push_back(std::move(sget));
    body.push_back(MakeConst(a + 1, 1));
    body.push_back(MakeConst(a + 2, index));
    body.push_back(Make(Opcode::kAputBoolean, {Reg::V(a + 1), Reg::V(a), Reg::V(a + 2)}));
  }

  SmaliMethod Method(const SmaliMethod& m) {
    const uint32_t locals = static_cast<uint32_t>(m.locals);
    const uint32_t a = static_cast<uint32_t>(m.FrameSize());  // array register
    SmaliMethod out = m;
    out.locals = m.locals + 3;
    out.body.clear();

    // Parameter copies back to the original absolute positions.
    auto layout = ComputeFrameLayout(m, cls_.name);
    for (const ParamSlot& p : layout->params) {
      Opcode op = p.width == 2            ? Opcode::kMoveWide16
                  : IsReferenceType(p.type) ? Opcode::kMoveObject16
                                            : Opcode::kMove16;
      out.body.push_back(Make(op, {Reg::V(locals + p.p_index), Reg::P(p.p_index)}));
    }

    std::vector<Site> sites;
    if (granularity_ == Granularity::kInstruction) sites = ProbeSites(m);
    std::vector<int> site_probe;
    for (const Site& s : sites) site_probe.push_back(AddProbe(s.kind, m.Id(), s.body_index));
    int entry = granularity_ == Granularity::kClass ? 0 : AddProbe(ProbeKind::kEntry, m.Id(), -1);
    EmitInlineProbe(out.body, a, entry);

    // Trampolines are numbered from the last site backwards, so the first
    // appended block is goto_hack_0.
    const int n = static_cast<int>(sites.size());
    size_t next_site = 0;
    auto emit_sites_at = [&](int pos) {
      for (; next_site < sites.size() && sites[next_site].insert_at == pos; ++next_site) {
        int k = n - 1 - static_cast<int>(next_site);
        out.body.push_back(MakeGoto32(StrCat(kTrampolinePrefix, k)));
        out.body.push_back(LabelDef{StrCat(kTrampolineBackPrefix, k)});
      }
    };
    for (int pos = 0; pos < static_cast<int>(m.body.size()); ++pos) {
      // Probes in front of an instruction go after its labels, i.e. directly
      // before the instruction item itself.
      emit_sites_at(pos);
      BodyItem item = m.body[pos];
      if (auto* ins = std::get_if<Instruction>(&item)) {
        for (Reg& r : ins->regs) {
          if (r.is_param()) r = Reg::V(r.Absolute(locals));
        }
      }
      out.body.push_back(std::move(item));
    }
    emit_sites_at(static_cast<int>(m.body.size()));

    for (int k = 0; k < n; ++k) {
      int s = n - 1 - k;
      out.body.push_back(LabelDef{StrCat(kTrampolinePrefix, k)});
      out.body.push_back(MakeConst(a + 2, site_probe[s]));
      out.body.push_back(Make(Opcode::kAputBoolean, {Reg::V(a + 1), Reg::V(a), Reg::V(a + 2)}));
      out.body.push_back(MakeGoto32(StrCat(kTrampolineBackPrefix, k)));
    }
    return out;
  }

  const SmaliClass& cls_;
  Granularity granularity_;
  ClassProbes probes_;
};

SmaliClass StorageClass(const ProbeMap& map) {
  SmaliClass c;
  c.name = std::string(kStorageClass);
  c.super_name = "Ljava/lang/Object;";
  c.flags = {"public", "final"};
  SmaliMethod clinit;
  clinit.name = "<clinit>";
  clinit.flags = {"static", "constructor"};
  clinit.locals = 1;
  for (const ClassProbes& cp : map.classes) {
    c.fields.push_back({cp.storage_field, std::string(kBoolArray), {"public", "static"}});
    Instruction size = Make(Opcode::kConst, {Reg::V(0)});
    size.literal = static_cast<int64_t>(cp.probes.size());
    clinit.body.push_back(std::move(size));
    Instruction alloc = Make(Opcode::kNewArray, {Reg::V(0), Reg::V(0)});
    alloc.ref = MemberRef{std::string(kBoolArray), "", ""};
    clinit.body.push_back(std::move(alloc));
    Instruction put = Make(Opcode::kSputObject, {Reg::V(0)});
    put.ref = MemberRef{c.name, cp.storage_field, std::string(kBoolArray)};
    clinit.body.push_back(std::move(put));
  }
  clinit.body.push_back(Make(Opcode::kReturnVoid, {}));
  c.methods.push_back(std::move(clinit));
  return c;
}

}  // namespace

std::string_view GranularityName(Granularity g) {
  switch (g) {
    case Granularity::kInstruction: return "instruction";
    case Granularity::kMethod: return "method";
    case Granularity::kClass: return "class";
  }
  return "?";
}

std::optional<Granularity> ParseGranularity(std::string_view name) {
  for (Granularity g : {Granularity::kInstruction, Granularity::kMethod, Granularity::kClass}) {
    if (GranularityName(g) == name) return g;
  }
  return std::nullopt;
}

std::string_view ProbeKindName(ProbeKind k) {
  switch (k) {
    case ProbeKind::kEntry: return "entry";
    case ProbeKind::kInstruction: return "instruction";
    case ProbeKind::kBlock: return "block";
    case ProbeKind::kClass: return "class";
  }
  return "?";
}

bool Traceable(const Instruction& instr) {
  InstructionKind k = Classify(instr);
  return k != InstructionKind::kFlowTerminator && k != InstructionKind::kPairedFirst;
}

const ClassProbes* ProbeMap::Find(std::string_view class_name) const {
  for (const auto& c : classes) {
    if (c.name == class_name) return &c;
  }
  return nullptr;
}

std::string ProbeMapToJson(const ProbeMap& map) {
  json doc;
  doc["version"] = map.version;
  doc["granularity"] = GranularityName(map.granularity);
  json classes = json::array();
  for (const auto& c : map.classes) {
    json jc;
    jc["name"] = c.name;
    jc["storage_field"] = c.storage_field;
    json probes = json::array();
    for (const auto& p : c.probes) {
      json jp;
      jp["index"] = p.index;
      jp["kind"] = ProbeKindName(p.kind);
      jp["method"] = p.method;
      if (p.body_index >= 0) jp["body_index"] = p.body_index;
      probes.push_back(std::move(jp));
    }
    jc["probes"] = std::move(probes);
    jc["traceable_count"] = c.traceable_count;
    jc["untraceable_count"] = c.untraceable_count;
    classes.push_back(std::move(jc));
  }
  doc["classes"] = std::move(classes);
  return doc.dump(2) + "\n";
}

absl::StatusOr<ProbeMap> ProbeMapFromJson(std::string_view text) {
  json doc = json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) return absl::InvalidArgumentError("probe map: malformed JSON");
  try {
    ProbeMap map;
    map.version = doc.at("version").get<int>();
    if (map.version != 1) {
      return absl::InvalidArgumentError(StrCat("probe map: unsupported version ", map.version));
    }
    auto g = ParseGranularity(doc.at("granularity").get<std::string>());
    if (!g.has_value()) return absl::InvalidArgumentError("probe map: bad granularity");
    map.granularity = *g;
    for (const auto& jc : doc.at("classes")) {
      ClassProbes c;
      c.name = jc.at("name").get<std::string>();
      c.storage_field = jc.at("storage_field").get<std::string>();
      for (const auto& jp : jc.at("probes")) {
        ProbeTarget p;
        p.index = jp.at("index").get<int>();
        std::string kind = jp.at("kind").get<std::string>();
        bool known = false;
        for (ProbeKind k : {ProbeKind::kEntry, ProbeKind::kInstruction, ProbeKind::kBlock,
                            ProbeKind::kClass}) {
          if (ProbeKindName(k) == kind) {
            p.kind = k;
            known = true;
          }
        }
        if (!known) return absl::InvalidArgumentError(StrCat("probe map: bad kind ", kind));
        p.method = jp.at("method").get<std::string>();
        p.body_index = jp.value("body_index", -1);
        if (p.index != static_cast<int>(c.probes.size())) {
          return absl::InvalidArgumentError(
              StrCat("probe map: ", c.name, " probe indices are not dense"));
        }
        c.probes.push_back(std::move(p));
      }
      c.traceable_count = jc.at("traceable_count").get<int>();
      c.untraceable_count = jc.at("untraceable_count").get<int>();
      map.classes.push_back(std::move(c));
    }
    return map;
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(StrCat("probe map: ", e.what()));
  }
}

absl::StatusOr<Instrumented> Instrument(const SmaliProgram& program, Granularity g) {
  if (program.FindClass(kStorageClass) != nullptr) {
    return absl::InvalidArgumentError(
        StrCat("program already contains ", kStorageClass, "; refusing to instrument twice"));
  }
  for (const auto& c : program.classes) {
    for (const auto& m : c.methods) {
      if (UsesReservedLabel(m)) {
        return absl::InvalidArgumentError(StrCat(c.name, "->", m.Id(), " uses reserved label prefix :",
                                                 kTrampolinePrefix));
      }
    }
  }
  Instrumented out;
  out.probe_map.granularity = g;
  std::map<std::string, int> seq;
  std::vector<std::string> overflows;
  for (const auto& c : program.classes) {
    std::string flat = FlatClassName(c.name);
    std::string field = StrCat(flat, seq[flat]++);
    ClassInstrumenter ci(c, g, field);
    absl::StatusOr<SmaliClass> cls = ci.Run();
    if (!cls.ok()) {
      if (cls.status().code() != absl::StatusCode::kResourceExhausted) return cls.status();
      overflows.emplace_back(cls.status().message());
      continue;
    }
    out.program.classes.push_back(*std::move(cls));
    out.probe_map.classes.push_back(std::move(ci.probes()));
  }
  if (!overflows.empty()) return absl::ResourceExhaustedError(StrJoin(overflows, "\n"));
  out.program.classes.push_back(StorageClass(out.probe_map));
  out.program.entry_points = program.entry_points;
  return out;
}

InflationStats Inflation(const SmaliProgram& original, const SmaliProgram& instrumented) {
  InflationStats s;
  s.original_instructions = CountInstructions(original);
  s.instrumented_instructions = CountInstructions(instrumented);
  s.ratio = s.original_instructions == 0
                ? 1.0
                : static_cast<double>(s.instrumented_instructions) / s.original_instructions;
  return s;
}

bool IsInstrumented(const SmaliProgram& program) {
  return program.FindClass(kStorageClass) != nullptr;
}

std::vector<int> RecoverOriginMap(const SmaliMethod& m) {
  const int n = static_cast<int>(m.body.size());
  std::vector<int> origin(n, -1);
  auto is_storage_load = [&](int i) {
    const Instruction* ins = i < n ? AsInstruction(m.body[i]) : nullptr;
    return ins != nullptr && ins->opcode == Opcode::kSgetObject && ins->ref &&
           ins->ref->owner == kStorageClass;
  };
  int start = ParamSlots(m);
  if (!is_storage_load(start)) {
    for (int i = 0; i < n; ++i) origin[i] = i;
    return origin;
  }
  int original = 0;
  for (int i = start + 4; i < n; ++i) {
    const BodyItem& item = m.body[i];
    if (const auto* ins = AsInstruction(item);
        ins != nullptr && ins->opcode == Opcode::kGoto32 &&
        ins->label.starts_with(kTrampolinePrefix) && i + 1 < n) {
      const auto* back = std::get_if<LabelDef>(&m.body[i + 1]);
      if (back != nullptr && back->name.starts_with(kTrampolineBackPrefix)) {
        ++i;
        continue;
      }
    }
    if (const auto* l = std::get_if<LabelDef>(&item);
        l != nullptr && l->name.starts_with(kTrampolinePrefix) &&
        !l->name.starts_with(kTrampolineBackPrefix)) {
      break;  // appended trampoline blocks
    }
    origin[i] = original++;
  }
  return origin;
}

}  // namespace acv
