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

// Multi-objective search for crashing call sequences.
//
// A suite is a list of calls to a program's entry points. Fitness is
// (coverage, unique crashes, length): coverage and crashes are maximized,
// length minimized. Survivors are chosen by non-dominated sorting with a
// crowding-distance tiebreak. Coverage comes from the probes of a program
// instrumented at the mode's granularity; in kNone mode the program runs
// uninstrumented and every suite has coverage 0.
//
// All modes draw from the same random stream for a given seed, so they start
// from the same initial population and differ only through selection.

#ifndef ACV_FUZZ_H_
#define ACV_FUZZ_H_

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "acv/corpus.h"
#include "acv/instrumenter.h"
#include "acv/interpreter.h"

namespace acv {

enum class FitnessMode { kInstruction, kMethod, kClass, kNone };
inline constexpr std::array<FitnessMode, 4> kFitnessModes = {
    FitnessMode::kInstruction, FitnessMode::kMethod, FitnessMode::kClass, FitnessMode::kNone};
std::string_view FitnessModeName(FitnessMode mode);
absl::StatusOr<FitnessMode> ParseFitnessMode(std::string_view name);

struct SearchConfig {
  int population = 20;
  int budget = 200;  // suite evaluations, a multiple of population is used
  double mutation_rate = 0.3;
  int max_length = 50;
  int initial_min_length = 1;
  int initial_max_length = 10;
  int arg_min = kArgMin;
  int arg_max = kArgMax;
  Limits limits{100'000, 100'000};
};

struct SuiteCall {
  int entry = 0;  // index into the program's entry points
  std::vector<int64_t> args;
  bool operator==(const SuiteCall&) const = default;
};

struct TestSuite {
  std::vector<SuiteCall> calls;
  int length() const { return static_cast<int>(calls.size()); }
  bool operator==(const TestSuite&) const = default;
};

struct Fitness {
  double coverage = 0;
  int crashes = 0;
  int length = 0;
  bool operator==(const Fitness&) const = default;
};

// >= on coverage and crashes, <= on length, strictly better somewhere.
bool Dominates(const Fitness& a, const Fitness& b);

// Indices of `k` survivors: whole fronts in rank order, the last partial
// front by decreasing crowding distance. Ties keep index order.
std::vector<int> SelectSurvivors(std::span<const Fitness> fitness, int k);

// Non-domination rank of each individual, 0 for the first front.
std::vector<int> ParetoRanks(std::span<const Fitness> fitness);

// A program prepared for one fitness mode; shareable between threads.
class SearchTarget {
 public:
  static absl::StatusOr<SearchTarget> Prepare(const SmaliProgram& program, FitnessMode mode,
                                              std::string name = "");

  FitnessMode mode() const { return mode_; }
  const std::string& name() const { return name_; }
  const std::vector<EntryPoint>& entries() const { return entries_; }
  const std::vector<std::vector<std::string>>& param_types() const { return params_; }

  struct Evaluation {
    Fitness fitness;
    std::vector<CrashRecord> crashes;  // every crash in call order
  };
  // Fresh Vm, all calls in order. A limit error ends the suite early.
  absl::StatusOr<Evaluation> Evaluate(const TestSuite& suite, const Limits& limits) const;

  // Script replayable by `acv run` against the original or instrumented tree.
  Script ToScript(const TestSuite& suite) const;

 private:
  FitnessMode mode_ = FitnessMode::kNone;
  std::string name_;
  std::shared_ptr<const LinkedProgram> linked_;
  std::vector<EntryPoint> entries_;
  std::vector<std::vector<std::string>> params_;
  // Storage field and the probe indices counted as coverage.
  std::vector<std::pair<std::string, std::vector<int>>> counted_;
  int counted_total_ = 0;
};

struct FoundCrash {
  CrashRecord record;
  TestSuite suite;  // first suite that raised it
};

struct SearchResult {
  std::vector<FoundCrash> crashes;  // unique by CrashKey, discovery order
  TestSuite best;
  Fitness best_fitness;
  int evaluations = 0;
  int generations = 0;
};

// kInvalidArgument when budget < population.
absl::StatusOr<SearchResult> Search(const SearchTarget& target, uint64_t seed,
                                    const SearchConfig& config = {});

// ---------------------------------------------------------------------------
// Campaign over (program, mode, seed) cells.

struct CampaignConfig {
  std::vector<FitnessMode> modes{kFitnessModes.begin(), kFitnessModes.end()};
  std::vector<uint64_t> seeds{1};
  SearchConfig search;
};

struct CellResult {
  int program = 0;  // index into the corpus
  FitnessMode mode = FitnessMode::kNone;
  uint64_t seed = 0;
  std::vector<CrashKey> crashes;  // sorted
  double best_coverage = 0;
  int evaluations = 0;
  bool operator==(const CellResult&) const = default;
};

struct ModeSummary {
  FitnessMode mode = FitnessMode::kNone;
  int unique_crashes = 0;  // distinct (program, crash key) over all seeds
  int faulty_programs = 0;
  int crash_types = 0;  // distinct exception descriptors
  bool operator==(const ModeSummary&) const = default;
};

struct CampaignResult {
  std::vector<std::string> programs;
  CampaignConfig config;
  std::vector<CellResult> cells;  // program-major, then mode, then seed
  std::vector<ModeSummary> summary;
  // Crashes found by exactly the modes in the mask (bit i = config.modes[i]).
  std::map<unsigned, int> overlap;
  int total_unique = 0;
};

// Cells run in parallel; results equal RunCampaignSerial.
absl::StatusOr<CampaignResult> RunCampaign(std::span<const FaultCorpusProgram> corpus,
                                           const CampaignConfig& config);
absl::StatusOr<CampaignResult> RunCampaignSerial(std::span<const FaultCorpusProgram> corpus,
                                                 const CampaignConfig& config);

std::string CampaignCsv(const CampaignResult& result);
std::string CampaignJson(const CampaignResult& result);
std::string OverlapLabel(const CampaignResult& result, unsigned mask);

}  // namespace acv

#endif  // ACV_FUZZ_H_
