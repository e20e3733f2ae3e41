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

// Runtime reports (fired probes per class), their binary file format, and the
// counter tree computed from a runtime report and a probe map.
//
// .acvr layout, little-endian:
//
//   "ACVR"  u16 version (1)  u16 reserved (0)  u32 class count
//   per class:  u16 name length, name bytes (UTF-8), u32 probe count,
//               ceil(n / 8) bytes of probe bits, LSB first

#ifndef ACV_COVERAGE_H_
#define ACV_COVERAGE_H_

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "acv/instrumenter.h"
#include "acv/interpreter.h"

namespace acv {

struct ClassBits {
  std::string name;
  std::vector<bool> bits;
  bool operator==(const ClassBits&) const = default;
};

struct RuntimeReport {
  std::vector<ClassBits> classes;

  const ClassBits* Find(std::string_view name) const;
  bool operator==(const RuntimeReport&) const = default;
};

inline constexpr uint16_t kAcvrVersion = 1;
inline constexpr size_t kAcvrHeaderSize = 12;

std::string EncodeRuntime(const RuntimeReport& report);
// kDataLoss "FormatError: ..." on bad magic, version or truncation.
absl::StatusOr<RuntimeReport> DecodeRuntime(std::string_view bytes);

absl::Status WriteRuntime(const RuntimeReport& report, const std::filesystem::path& path);
absl::StatusOr<RuntimeReport> ReadRuntime(const std::filesystem::path& path);

// All-false vectors shaped like `map`.
RuntimeReport EmptyRuntime(const ProbeMap& map);

// Elementwise OR. kFailedPrecondition "ReportMismatch" when shapes differ.
absl::StatusOr<RuntimeReport> Merge(std::span<const RuntimeReport> reports);

// Reads the storage arrays of an instrumented run.
absl::StatusOr<RuntimeReport> CollectRuntime(const Vm& vm, const ProbeMap& map);
absl::StatusOr<RuntimeReport> CollectRuntime(const RunResult& run, const ProbeMap& map);

// Checks lengths and class membership against `map`.
absl::Status CheckShape(const RuntimeReport& report, const ProbeMap& map);

// ---------------------------------------------------------------------------
// Counter tree.

enum class CounterType { kInstruction = 0, kMethod = 1, kClass = 2 };
inline constexpr std::array<CounterType, 3> kCounterTypes = {
    CounterType::kInstruction, CounterType::kMethod, CounterType::kClass};

std::string_view CounterTypeName(CounterType t);

struct Counter {
  int covered = 0;
  int missed = 0;

  int total() const { return covered + missed; }
  double ratio() const { return total() == 0 ? 0.0 : static_cast<double>(covered) / total(); }
  Counter& operator+=(const Counter& o) {
    covered += o.covered;
    missed += o.missed;
    return *this;
  }
  bool operator==(const Counter&) const = default;
};

// Counters indexed by CounterType.
using Counters = std::array<Counter, 3>;

struct InstructionCoverage {
  int body_index = -1;
  bool covered = false;
  bool operator==(const InstructionCoverage&) const = default;
};

struct MethodCoverage {
  std::string id;
  bool covered = false;
  Counters counters{};
  std::vector<InstructionCoverage> instructions;  // body order
  bool operator==(const MethodCoverage&) const = default;
};

struct ClassCoverage {
  std::string name;
  bool covered = false;
  Counters counters{};
  std::vector<MethodCoverage> methods;
  bool operator==(const ClassCoverage&) const = default;
};

struct CoverageReport {
  Granularity granularity = Granularity::kInstruction;
  Counters counters{};
  std::vector<ClassCoverage> classes;  // probe map order

  // Counter types this granularity can measure.
  bool Has(CounterType t) const;
  bool operator==(const CoverageReport&) const = default;
};

absl::StatusOr<CoverageReport> Compute(const ProbeMap& map, const RuntimeReport& runtime);

// Returns the first node whose counters differ from the sum of its children.
absl::Status CheckConservation(const CoverageReport& report);

// "INSTRUCTION 75.00% (3/4)" lines for the measured counter types.
std::string FormatSummary(const CoverageReport& report);

// ---------------------------------------------------------------------------
// Emission.

// report > class > method > counter, counters after children at every level.
std::string EmitXml(const CoverageReport& report, std::string_view report_name = "acv");

// Counters parsed back from EmitXml output, keyed like the report.
struct CounterNode {
  std::string name;
  std::map<std::string, Counter> counters;  // by counter type name
  std::vector<CounterNode> children;
  bool operator==(const CounterNode&) const = default;
};
absl::StatusOr<CounterNode> ReadXmlCounters(std::string_view xml);
CounterNode CounterTree(const CoverageReport& report, std::string_view report_name = "acv");

// index.html plus one page per class. `program` is the original program and
// may be null, in which case class pages list body indices only.
absl::Status EmitHtml(const CoverageReport& report, const SmaliProgram* program,
                      const std::filesystem::path& dir);

// Page file name for a class inside the HTML directory.
std::string HtmlPageName(std::string_view class_name);

}  // namespace acv

#endif  // ACV_COVERAGE_H_
