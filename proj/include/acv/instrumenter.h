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

// Probe insertion. Every instrumented method gets three extra registers at
// the top of its frame (array, true, index), a prologue that copies the
// parameters back to their original absolute positions, an inline entry
// probe, and, at instruction granularity, one goto/32 trampoline per probe
// site:
//
//     <instr>
//     goto/32 :goto_hack_k
//   :goto_hack_back_k
//     ...
//   :goto_hack_k            # appended after the body
//     const/16 vI, <index>
//     aput-boolean vT, vA, vI
//     goto/32 :goto_hack_back_k
//
// Probe sites:
//   - after every traceable instruction that is not a branch;
//   - before every if-* and *-switch, after its labels, so that both edges
//     are observed;
//   - before each block leader that is a branch target or the fallthrough of
//     an if/switch ("block" probes; these do not count as instructions).

#ifndef ACV_INSTRUMENTER_H_
#define ACV_INSTRUMENTER_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "acv/smali_model.h"

namespace acv {

inline constexpr std::string_view kStorageClass = "Lacv/StorageClass;";
inline constexpr std::string_view kTrampolinePrefix = "goto_hack_";
inline constexpr std::string_view kTrampolineBackPrefix = "goto_hack_back_";

enum class Granularity { kInstruction, kMethod, kClass };

std::string_view GranularityName(Granularity g);
std::optional<Granularity> ParseGranularity(std::string_view name);

// Untraceable instructions are flow terminators and invokes.
bool Traceable(const Instruction& instr);

enum class ProbeKind { kEntry, kInstruction, kBlock, kClass };

std::string_view ProbeKindName(ProbeKind k);

struct ProbeTarget {
  int index = 0;
  ProbeKind kind = ProbeKind::kEntry;
  std::string method;   // method id; empty for class probes
  int body_index = -1;  // original body index for instruction/block probes

  bool operator==(const ProbeTarget&) const = default;
};

struct ClassProbes {
  std::string name;
  std::string storage_field;
  std::vector<ProbeTarget> probes;  // probes[i].index == i
  int traceable_count = 0;
  int untraceable_count = 0;

  bool operator==(const ClassProbes&) const = default;
};

struct ProbeMap {
  int version = 1;
  Granularity granularity = Granularity::kInstruction;
  std::vector<ClassProbes> classes;

  const ClassProbes* Find(std::string_view class_name) const;
  bool operator==(const ProbeMap&) const = default;
};

std::string ProbeMapToJson(const ProbeMap& map);
absl::StatusOr<ProbeMap> ProbeMapFromJson(std::string_view json);

struct Instrumented {
  SmaliProgram program;
  ProbeMap probe_map;
};

// Fails with kResourceExhausted ("FrameOverflow") when some method has no
// room for the three probe registers, and with kInvalidArgument when the
// input already uses the storage class or trampoline label names.
absl::StatusOr<Instrumented> Instrument(const SmaliProgram& program, Granularity g);

struct InflationStats {
  int original_instructions = 0;
  int instrumented_instructions = 0;
  double ratio = 1.0;
};

InflationStats Inflation(const SmaliProgram& original, const SmaliProgram& instrumented);

// True when `program` carries the storage class.
bool IsInstrumented(const SmaliProgram& program);

// For each body item of an instrumented method, the body index it had in the
// original method, or -1 for inserted items. Derived from the code shape
// alone, so it works on instrumented trees read back from disk.
std::vector<int> RecoverOriginMap(const SmaliMethod& instrumented);

}  // namespace acv

#endif  // ACV_INSTRUMENTER_H_
