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

#include "acv/coverage.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "acv/strings.h"

namespace acv {
namespace {

constexpr char kMagic[4] = {'A', 'C', 'V', 'R'};

void PutU16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  bool U16(uint16_t& v) {
    if (pos_ + 2 > data_.size()) return false;
    v = static_cast<uint16_t>(Byte(pos_) | (Byte(pos_ + 1) << 8));
    pos_ += 2;
    return true;
  }
  bool U32(uint32_t& v) {
    if (pos_ + 4 > data_.size()) return false;
    v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(Byte(pos_ + i)) << (8 * i);
    pos_ += 4;
    return true;
  }
  bool Bytes(size_t n, std::string_view& out) {
    if (n > data_.size() - pos_) return false;
    out = data_.substr(pos_, n);
    pos_ += n;
    return true;
  }
  bool at_end() const { return pos_ == data_.size(); }
  size_t pos() const { return pos_; }

 private:
  uint32_t Byte(size_t i) const { return static_cast<uint8_t>(data_[i]); }
  std::string_view data_;
  size_t pos_ = 0;
};

absl::Status FormatError(std::string msg) {
  return absl::DataLossError(StrCat("FormatError: ", msg));
}

absl::Status Mismatch(std::string msg) {
  return absl::FailedPreconditionError(StrCat("ReportMismatch: ", msg));
}

}  // namespace

const ClassBits* RuntimeReport::Find(std::string_view name) const {
  for (const auto& c : classes) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string EncodeRuntime(const RuntimeReport& report) {
  std::string out(kMagic, 4);
  PutU16(out, kAcvrVersion);
  PutU16(out, 0);
  PutU32(out, static_cast<uint32_t>(report.classes.size()));
  for (const ClassBits& c : report.classes) {
    PutU16(out, static_cast<uint16_t>(c.name.size()));
    out += c.name;
    PutU32(out, static_cast<uint32_t>(c.bits.size()));
    std::string packed((c.bits.size() + 7) / 8, '\0');
    for (size_t i = 0; i < c.bits.size(); ++i) {
      if (c.bits[i]) packed[i / 8] = static_cast<char>(packed[i / 8] | (1 << (i % 8)));
    }
    out += packed;
  }
  return out;
}

absl::StatusOr<RuntimeReport> DecodeRuntime(std::string_view bytes) {
  Reader in(bytes);
  std::string_view magic;
  if (!in.Bytes(4, magic) || magic != std::string_view(kMagic, 4)) return FormatError("bad magic");
  uint16_t version = 0, reserved = 0;
  uint32_t count = 0;
  if (!in.U16(version) || !in.U16(reserved) || !in.U32(count)) {
    return FormatError("truncated header");
  }
  if (version != kAcvrVersion) return FormatError(StrCat("unsupported version ", version));
  RuntimeReport report;
  for (uint32_t k = 0; k < count; ++k) {
    uint16_t name_len = 0;
    uint32_t n = 0;
    std::string_view name, packed;
    if (!in.U16(name_len) || !in.Bytes(name_len, name) || !in.U32(n) ||
        !in.Bytes((static_cast<size_t>(n) + 7) / 8, packed)) {
      return FormatError(StrCat("truncated class record ", k, " at byte ", in.pos()));
    }
    ClassBits c{std::string(name), std::vector<bool>(n)};
    for (uint32_t i = 0; i < n; ++i) {
      c.bits[i] = (static_cast<uint8_t>(packed[i / 8]) >> (i % 8)) & 1;
    }
    report.classes.push_back(std::move(c));
  }
  if (!in.at_end()) return FormatError("trailing bytes");
  return report;
}

absl::Status WriteRuntime(const RuntimeReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << EncodeRuntime(report);
  if (!out) return absl::UnavailableError(StrCat("cannot write ", path.string()));
  return absl::OkStatus();
}

absl::StatusOr<RuntimeReport> ReadRuntime(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(StrCat("cannot read ", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return DecodeRuntime(ss.str());
}

RuntimeReport EmptyRuntime(const ProbeMap& map) {
  RuntimeReport r;
  for (const auto& c : map.classes) r.classes.push_back({c.name, std::vector<bool>(c.probes.size())});
  return r;
}

absl::StatusOr<RuntimeReport> Merge(std::span<const RuntimeReport> reports) {
  if (reports.empty()) return RuntimeReport{};
  RuntimeReport out = reports[0];
  for (size_t r = 1; r < reports.size(); ++r) {
    const RuntimeReport& other = reports[r];
    if (other.classes.size() != out.classes.size()) {
      return Mismatch(StrCat("report ", r, " has ", other.classes.size(), " classes, expected ",
                             out.classes.size()));
    }
    for (size_t i = 0; i < out.classes.size(); ++i) {
      ClassBits& a = out.classes[i];
      const ClassBits& b = other.classes[i];
      if (a.name != b.name || a.bits.size() != b.bits.size()) {
        return Mismatch(StrCat("report ", r, " class ", i, " is ", b.name, "[", b.bits.size(),
                               "], expected ", a.name, "[", a.bits.size(), "]"));
      }
      for (size_t k = 0; k < a.bits.size(); ++k) a.bits[k] = a.bits[k] || b.bits[k];
    }
  }
  return out;
}

absl::Status CheckShape(const RuntimeReport& report, const ProbeMap& map) {
  for (const ClassBits& c : report.classes) {
    const ClassProbes* cp = map.Find(c.name);
    if (cp == nullptr) return Mismatch(StrCat(c.name, " is not in the probe map"));
    if (cp->probes.size() != c.bits.size()) {
      return Mismatch(StrCat(c.name, " has ", c.bits.size(), " probes, probe map says ",
                             cp->probes.size()));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<RuntimeReport> CollectRuntime(const Vm& vm, const ProbeMap& map) {
  RuntimeReport r;
  for (const ClassProbes& c : map.classes) {
    std::optional<std::vector<bool>> bits = vm.ReadBoolArray(kStorageClass, c.storage_field);
    if (!bits.has_value()) return Mismatch(StrCat("storage field ", c.storage_field, " is missing"));
    if (bits->size() != c.probes.size()) {
      return Mismatch(StrCat("storage field ", c.storage_field, " has ", bits->size(),
                             " slots, probe map says ", c.probes.size()));
    }
    r.classes.push_back({c.name, *std::move(bits)});
  }
  return r;
}

absl::StatusOr<RuntimeReport> CollectRuntime(const RunResult& run, const ProbeMap& map) {
  RuntimeReport r;
  for (const ClassProbes& c : map.classes) {
    auto it = run.storage.find(c.storage_field);
    if (it == run.storage.end()) {
      return Mismatch(StrCat("storage field ", c.storage_field, " is missing"));
    }
    if (it->second.size() != c.probes.size()) {
      return Mismatch(StrCat("storage field ", c.storage_field, " has ", it->second.size(),
                             " slots, probe map says ", c.probes.size()));
    }
    r.classes.push_back({c.name, it->second});
  }
  return r;
}

// ---------------------------------------------------------------------------

std::string_view CounterTypeName(CounterType t) {
  switch (t) {
    case CounterType::kInstruction: return "INSTRUCTION";
    case CounterType::kMethod: return "METHOD";
    case CounterType::kClass: return "CLASS";
  }
  return "?";
}

bool CoverageReport::Has(CounterType t) const {
  switch (granularity) {
    case Granularity::kInstruction: return true;
    case Granularity::kMethod: return t != CounterType::kInstruction;
    case Granularity::kClass: return t == CounterType::kClass;
  }
  return false;
}

namespace {

Counter Of(bool covered) { return covered ? Counter{1, 0} : Counter{0, 1}; }

int Idx(CounterType t) { return static_cast<int>(t); }

}  // namespace

absl::StatusOr<CoverageReport> Compute(const ProbeMap& map, const RuntimeReport& runtime) {
  if (absl::Status s = CheckShape(runtime, map); !s.ok()) return s;
  CoverageReport report;
  report.granularity = map.granularity;
  for (const ClassProbes& cp : map.classes) {
    const ClassBits* bits = runtime.Find(cp.name);
    auto fired = [&](int index) { return bits != nullptr && bits->bits[index]; };
    ClassCoverage cc;
    cc.name = cp.name;
    std::unordered_map<std::string, size_t> method_pos;
    auto method = [&](const std::string& id) -> MethodCoverage& {
      auto [it, inserted] = method_pos.emplace(id, cc.methods.size());
      if (inserted) {
        MethodCoverage mc;
        mc.id = id;
        cc.methods.push_back(std::move(mc));
      }
      return cc.methods[it->second];
    };
    bool class_probe = false;
    for (const ProbeTarget& p : cp.probes) {
      switch (p.kind) {
        case ProbeKind::kEntry:
          method(p.method).covered = fired(p.index);
          break;
        case ProbeKind::kInstruction:
          method(p.method).instructions.push_back({p.body_index, fired(p.index)});
          break;
        case ProbeKind::kBlock:
          break;
        case ProbeKind::kClass:
          class_probe = class_probe || fired(p.index);
          break;
      }
    }
    for (MethodCoverage& m : cc.methods) {
      std::sort(m.instructions.begin(), m.instructions.end(),
                [](const InstructionCoverage& a, const InstructionCoverage& b) {
                  return a.body_index < b.body_index;
                });
      if (report.Has(CounterType::kInstruction)) {
        for (const auto& i : m.instructions) m.counters[Idx(CounterType::kInstruction)] += Of(i.covered);
        cc.counters[Idx(CounterType::kInstruction)] += m.counters[Idx(CounterType::kInstruction)];
      }
      if (report.Has(CounterType::kMethod)) {
        m.counters[Idx(CounterType::kMethod)] = Of(m.covered);
        cc.counters[Idx(CounterType::kMethod)] += m.counters[Idx(CounterType::kMethod)];
      }
      cc.covered = cc.covered || m.covered;
    }
    if (map.granularity == Granularity::kClass) cc.covered = class_probe;
    cc.counters[Idx(CounterType::kClass)] = Of(cc.covered);
    for (CounterType t : kCounterTypes) report.counters[Idx(t)] += cc.counters[Idx(t)];
    report.classes.push_back(std::move(cc));
  }
  return report;
}

absl::Status CheckConservation(const CoverageReport& report) {
  Counters total{};
  for (const ClassCoverage& c : report.classes) {
    Counters sum{};
    for (const MethodCoverage& m : c.methods) {
      Counter instr{};
      for (const auto& i : m.instructions) instr += Of(i.covered);
      if (report.Has(CounterType::kInstruction) &&
          !(instr == m.counters[Idx(CounterType::kInstruction)])) {
        return absl::InternalError(StrCat(c.name, "->", m.id, ": INSTRUCTION counter mismatch"));
      }
      if (m.counters[Idx(CounterType::kMethod)].covered > 1) {
        return absl::InternalError(StrCat(c.name, "->", m.id, ": METHOD covered > 1"));
      }
      for (CounterType t : {CounterType::kInstruction, CounterType::kMethod}) {
        sum[Idx(t)] += m.counters[Idx(t)];
      }
    }
    for (CounterType t : {CounterType::kInstruction, CounterType::kMethod}) {
      if (!(sum[Idx(t)] == c.counters[Idx(t)])) {
        return absl::InternalError(StrCat(c.name, ": ", CounterTypeName(t), " counter mismatch"));
      }
    }
    if (c.counters[Idx(CounterType::kClass)].total() != 1) {
      return absl::InternalError(StrCat(c.name, ": CLASS counter total is not 1"));
    }
    for (CounterType t : kCounterTypes) total[Idx(t)] += c.counters[Idx(t)];
  }
  for (CounterType t : kCounterTypes) {
    if (!(total[Idx(t)] == report.counters[Idx(t)])) {
      return absl::InternalError(StrCat("program: ", CounterTypeName(t), " counter mismatch"));
    }
  }
  return absl::OkStatus();
}

std::string FormatSummary(const CoverageReport& report) {
  std::string out;
  for (CounterType t : kCounterTypes) {
    if (!report.Has(t)) continue;
    const Counter& c = report.counters[Idx(t)];
    out += fmt::format("{:<12} {:6.2f}% ({}/{})\n", CounterTypeName(t), 100.0 * c.ratio(),
                       c.covered, c.total());
  }
  return out;
}

}  // namespace acv
