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

// Seeded generator of small multi-class programs with planted faults.
//
// Every program has a Main class with static entry points, a Base/Derived
// pair with a virtual method and a Boom exception. Each planted fault sits
// behind one to three guards on the entry arguments (thresholds, residues,
// exact values, loop helpers under a monitor, virtual dispatch and a counter
// advanced by a separate entry point). Guards are built around witness
// arguments drawn first, so every fault is reachable by its witness script.

#ifndef ACV_CORPUS_H_
#define ACV_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "acv/interpreter.h"
#include "acv/smali_model.h"
#include "acv/smali_parser.h"

namespace acv {

inline constexpr int kArgMin = -100;
inline constexpr int kArgMax = 100;

enum class FaultKind { kDivByZero, kNullDeref, kThrow };
std::string_view FaultKindName(FaultKind kind);

struct PlantedFault {
  FaultKind kind = FaultKind::kThrow;
  CrashKey location;  // where the uncaught exception is raised
  Script witness;     // fresh Vm; the last call crashes at `location`
};

struct FaultCorpusProgram {
  uint64_t seed = 0;
  int index = 0;
  std::string name;  // "p007"
  std::vector<SourceFile> sources;
  SmaliProgram program;
  std::vector<PlantedFault> faults;
};

// Program `index` of the corpus for `seed`; independent of other indices.
FaultCorpusProgram GenerateProgram(uint64_t seed, int index);

// Programs 0..n-1. GenerateCorpus runs indices in parallel.
std::vector<FaultCorpusProgram> GenerateCorpus(uint64_t seed, int n);
std::vector<FaultCorpusProgram> GenerateCorpusSerial(uint64_t seed, int n);

// JSON list of faults with their locations and witness scripts.
std::string FaultsToJson(const FaultCorpusProgram& program);

}  // namespace acv

#endif  // ACV_CORPUS_H_
