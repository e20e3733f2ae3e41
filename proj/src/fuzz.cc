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

#include "acv/fuzz.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "acv/strings.h"

namespace acv {

std::string_view FitnessModeName(FitnessMode mode) {
  switch (mode) {
    case FitnessMode::kInstruction: return "instruction";
    case FitnessMode::kMethod: return "method";
    case FitnessMode::kClass: return "class";
    case FitnessMode::kNone: return "none";
  }
  return "?";
}

absl::StatusOr<FitnessMode> ParseFitnessMode(std::string_view name) {
  for (FitnessMode m : kFitnessModes) {
    if (FitnessModeName(m) == name) return m;
  }
  return absl::InvalidArgumentError(
      StrCat("unknown mode '", name, "', expected instruction, method, class or none"));
}

bool Dominates(const Fitness& a, const Fitness& b) {
  if (a.coverage < b.coverage || a.crashes < b.crashes || a.length > b.length) return false;
  return a.coverage > b.coverage || a.crashes > b.crashes || a.length < b.length;
}

namespace {

std::vector<std::vector<int>> Fronts(std::span<const Fitness> f) {
  const int n = static_cast<int>(f.size());
  std::vector<std::vector<int>> dominated(n);
  std::vector<int> count(n, 0);
  std::vector<std::vector<int>> fronts(1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (Dominates(f[i], f[j])) {
        dominated[i].push_back(j);
      } else if (Dominates(f[j], f[i])) {
        ++count[i];
      }
    }
    if (count[i] == 0) fronts[0].push_back(i);
  }
  for (size_t k = 0; !fronts[k].empty(); ++k) {
    std::vector<int> next;
    for (int i : fronts[k]) {
      for (int j : dominated[i]) {
        if (--count[j] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(next));
  }
  fronts.pop_back();
  return fronts;
}

// Crowding distance of each member of `front`, aligned with it.
std::vector<double> Crowding(std::span<const Fitness> f, const std::vector<int>& front) {
  const size_t n = front.size();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    return dist;
  }
  auto objectives = {
      +[](const Fitness& x) { return x.coverage; },
      +[](const Fitness& x) { return static_cast<double>(x.crashes); },
      +[](const Fitness& x) { return static_cast<double>(x.length); },
  };
  for (auto get : objectives) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return get(f[front[a]]) < get(f[front[b]]);
    });
    double lo = get(f[front[order.front()]]), hi = get(f[front[order.back()]]);
    dist[order.front()] = dist[order.back()] = std::numeric_limits<double>::infinity();
    if (hi == lo) continue;
    for (size_t k = 1; k + 1 < n; ++k) {
      dist[order[k]] += (get(f[front[order[k + 1]]]) - get(f[front[order[k - 1]]])) / (hi - lo);
    }
  }
  return dist;
}

struct RankInfo {
  std::vector<int> rank;
  std::vector<double> crowding;
};

RankInfo Rank(std::span<const Fitness> f) {
  RankInfo out{std::vector<int>(f.size()), std::vector<double>(f.size())};
  auto fronts = Fronts(f);
  for (size_t r = 0; r < fronts.size(); ++r) {
    std::vector<double> c = Crowding(f, fronts[r]);
    for (size_t k = 0; k < fronts[r].size(); ++k) {
      out.rank[fronts[r][k]] = static_cast<int>(r);
      out.crowding[fronts[r][k]] = c[k];
    }
  }
  return out;
}

}  // namespace

std::vector<int> ParetoRanks(std::span<const Fitness> fitness) { return Rank(fitness).rank; }

std::vector<int> SelectSurvivors(std::span<const Fitness> fitness, int k) {
  std::vector<int> out;
  for (const std::vector<int>& front : Fronts(fitness)) {
    if (static_cast<int>(out.size()) >= k) break;
    if (static_cast<int>(out.size() + front.size()) <= k) {
      out.insert(out.end(), front.begin(), front.end());
      continue;
    }
    std::vector<double> c = Crowding(fitness, front);
    std::vector<size_t> order(front.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return c[a] > c[b]; });
    for (size_t i = 0; static_cast<int>(out.size()) < k; ++i) out.push_back(front[order[i]]);
  }
  return out;
}

// ---------------------------------------------------------------------------

absl::StatusOr<SearchTarget> SearchTarget::Prepare(const SmaliProgram& program, FitnessMode mode,
                                                   std::string name) {
  SearchTarget t;
  t.mode_ = mode;
  t.name_ = std::move(name);
  t.entries_ = program.entry_points;
  for (const EntryPoint& e : t.entries_) {
    t.params_.push_back(program.FindMethod(e.class_name, e.method)->param_types);
  }
  if (mode == FitnessMode::kNone) {
    auto linked = Link(program);
    if (!linked.ok()) return linked.status();
    t.linked_ = *std::move(linked);
    return t;
  }
  Granularity g = mode == FitnessMode::kInstruction ? Granularity::kInstruction
                  : mode == FitnessMode::kMethod    ? Granularity::kMethod
                                                    : Granularity::kClass;
  ProbeKind counted = mode == FitnessMode::kInstruction ? ProbeKind::kInstruction
                      : mode == FitnessMode::kMethod    ? ProbeKind::kEntry
                                                        : ProbeKind::kClass;
  auto inst = Instrument(program, g);
  if (!inst.ok()) return inst.status();
  auto linked = Link(inst->program);
  if (!linked.ok()) return linked.status();
  t.linked_ = *std::move(linked);
  for (const ClassProbes& c : inst->probe_map.classes) {
    std::vector<int> idx;
    for (const ProbeTarget& p : c.probes) {
      if (p.kind == counted) idx.push_back(p.index);
    }
    t.counted_total_ += static_cast<int>(idx.size());
    t.counted_.emplace_back(c.storage_field, std::move(idx));
  }
  return t;
}

absl::StatusOr<SearchTarget::Evaluation> SearchTarget::Evaluate(const TestSuite& suite,
                                                                 const Limits& limits) const {
  auto vm = Vm::Create(linked_, limits);
  if (!vm.ok()) return vm.status();
  Evaluation out;
  std::set<CrashKey> unique;
  for (const SuiteCall& c : suite.calls) {
    const auto& types = params_[c.entry];
    std::vector<Value> args;
    for (size_t i = 0; i < types.size(); ++i) {
      if (types[i] == "Z") {
        args.push_back(Value::Bool(c.args[i] != 0));
      } else if (TypeWidth(types[i]) == 2) {
        args.push_back(Value::Wide(c.args[i]));
      } else {
        args.push_back(Value::Int(static_cast<int32_t>(c.args[i])));
      }
    }
    const EntryPoint& e = entries_[c.entry];
    absl::StatusOr<CallOutcome> r = (*vm)->Call(e.class_name, e.method, args);
    if (!r.ok()) {
      if (IsLimitError(r.status())) break;
      return r.status();
    }
    if (r->crash.has_value()) {
      unique.insert(r->crash->Key());
      out.crashes.push_back(*std::move(r->crash));
    }
  }
  out.fitness.crashes = static_cast<int>(unique.size());
  out.fitness.length = suite.length();
  if (counted_total_ > 0) {
    int fired = 0;
    for (const auto& [field, idx] : counted_) {
      auto bits = (*vm)->ReadBoolArray(kStorageClass, field);
      if (!bits.has_value()) return absl::InternalError(StrCat("storage field ", field, " unset"));
      for (int i : idx) fired += (*bits)[i] ? 1 : 0;
    }
    out.fitness.coverage = static_cast<double>(fired) / counted_total_;
  }
  return out;
}

Script SearchTarget::ToScript(const TestSuite& suite) const {
  Script out;
  for (const SuiteCall& c : suite.calls) {
    ScriptEvent e;
    e.class_name = entries_[c.entry].class_name;
    e.method = entries_[c.entry].method;
    const auto& types = params_[c.entry];
    for (size_t i = 0; i < c.args.size(); ++i) {
      e.args.push_back(types[i] == "Z" ? (c.args[i] != 0 ? "true" : "false")
                                       : std::to_string(c.args[i]));
    }
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

class Searcher {
 public:
  Searcher(const SearchTarget& target, uint64_t seed, const SearchConfig& config)
      : target_(target), config_(config) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)};
    rng_.seed(seq);
  }

  absl::StatusOr<SearchResult> Run() {
    const int pop = config_.population;
    if (pop < 1 || config_.budget < pop) {
      return absl::InvalidArgumentError(
          StrCat("budget ", config_.budget, " is below the population size ", pop));
    }
    SearchResult result;
    result.generations = config_.budget / pop;
    if (target_.entries().empty()) return result;

    std::vector<TestSuite> suites;
    std::vector<Fitness> fitness;
    for (int i = 0; i < pop; ++i) {
      suites.push_back(RandomSuite());
      auto f = Eval(suites.back(), result);
      if (!f.ok()) return f.status();
      fitness.push_back(*f);
    }
    for (int g = 1; g < result.generations; ++g) {
      RankInfo info = Rank(fitness);
      std::vector<TestSuite> next = suites;
      std::vector<Fitness> next_fitness = fitness;
      for (int i = 0; i < pop; ++i) {
        const TestSuite& a = suites[Tournament(info)];
        const TestSuite& b = suites[Tournament(info)];
        TestSuite child = Crossover(a, b);
        if (Chance(config_.mutation_rate)) Mutate(child);
        auto f = Eval(child, result);
        if (!f.ok()) return f.status();
        next.push_back(std::move(child));
        next_fitness.push_back(*f);
      }
      suites.clear();
      fitness.clear();
      for (int i : SelectSurvivors(next_fitness, pop)) {
        suites.push_back(std::move(next[i]));
        fitness.push_back(next_fitness[i]);
      }
    }

    RankInfo info = Rank(fitness);
    int best = -1;
    auto better = [&](int i, int j) {
      const Fitness &a = fitness[i], &b = fitness[j];
      if (a.crashes != b.crashes) return a.crashes > b.crashes;
      if (a.coverage != b.coverage) return a.coverage > b.coverage;
      return a.length < b.length;
    };
    for (int i = 0; i < pop; ++i) {
      if (info.rank[i] == 0 && (best < 0 || better(i, best))) best = i;
    }
    result.best = suites[best];
    result.best_fitness = fitness[best];
    return result;
  }

 private:
  int Uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool Chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }

  SuiteCall RandomCall() {
    SuiteCall c;
    c.entry = Uniform(0, static_cast<int>(target_.entries().size()) - 1);
    for (const std::string& t : target_.param_types()[c.entry]) {
      c.args.push_back(t == "Z" ? Uniform(0, 1) : Uniform(config_.arg_min, config_.arg_max));
    }
    return c;
  }

  TestSuite RandomSuite() {
    TestSuite s;
    int n = Uniform(config_.initial_min_length, config_.initial_max_length);
    for (int i = 0; i < n; ++i) s.calls.push_back(RandomCall());
    return s;
  }

  int Tournament(const RankInfo& info) {
    int n = static_cast<int>(info.rank.size());
    int a = Uniform(0, n - 1), b = Uniform(0, n - 1);
    if (info.rank[a] != info.rank[b]) return info.rank[a] < info.rank[b] ? a : b;
    if (info.crowding[a] != info.crowding[b]) return info.crowding[a] > info.crowding[b] ? a : b;
    return std::min(a, b);
  }

  // One-point crossover: a prefix of `a` followed by a suffix of `b`.
  TestSuite Crossover(const TestSuite& a, const TestSuite& b) {
    int i = Uniform(0, a.length()), j = Uniform(0, b.length());
    TestSuite child;
    child.calls.assign(a.calls.begin(), a.calls.begin() + i);
    child.calls.insert(child.calls.end(), b.calls.begin() + j, b.calls.end());
    if (child.calls.empty()) child = a;
    if (child.length() > config_.max_length) child.calls.resize(config_.max_length);
    return child;
  }

  void Mutate(TestSuite& s) {
    switch (Uniform(0, 2)) {
      case 0:  // add
        if (s.length() < config_.max_length) {
          s.calls.insert(s.calls.begin() + Uniform(0, s.length()), RandomCall());
          return;
        }
        [[fallthrough]];
      case 1:  // remove
        if (s.length() > 1) {
          s.calls.erase(s.calls.begin() + Uniform(0, s.length() - 1));
          return;
        }
        [[fallthrough]];
      default: {  // perturb
        SuiteCall& c = s.calls[Uniform(0, s.length() - 1)];
        if (c.args.empty() || Chance(0.2)) {
          c = RandomCall();
          return;
        }
        int64_t& v = c.args[Uniform(0, static_cast<int>(c.args.size()) - 1)];
        v = Chance(0.5) ? Uniform(config_.arg_min, config_.arg_max)
                        : std::clamp<int64_t>(v + Uniform(-5, 5), config_.arg_min, config_.arg_max);
      }
    }
  }

  absl::StatusOr<Fitness> Eval(const TestSuite& s, SearchResult& result) {
    auto e = target_.Evaluate(s, config_.limits);
    if (!e.ok()) return e.status();
    ++result.evaluations;
    for (CrashRecord& c : e->crashes) {
      if (seen_.insert(c.Key()).second) result.crashes.push_back({std::move(c), s});
    }
    return e->fitness;
  }

  const SearchTarget& target_;
  const SearchConfig& config_;
  std::mt19937_64 rng_;
  std::set<CrashKey> seen_;
};

}  // namespace

absl::StatusOr<SearchResult> Search(const SearchTarget& target, uint64_t seed,
                                    const SearchConfig& config) {
  return Searcher(target, seed, config).Run();
}

// ---------------------------------------------------------------------------

namespace {

struct CampaignPlan {
  std::vector<std::optional<SearchTarget>> targets;  // program-major, then mode
  std::vector<absl::Status> errors;
  size_t cells = 0;
};

absl::Status PrepareOne(std::span<const FaultCorpusProgram> corpus, const CampaignConfig& config,
                        CampaignPlan& plan, size_t t) {
  size_t p = t / config.modes.size(), m = t % config.modes.size();
  auto target = SearchTarget::Prepare(corpus[p].program, config.modes[m], corpus[p].name);
  if (!target.ok()) return target.status();
  plan.targets[t] = *std::move(target);
  return absl::OkStatus();
}

absl::Status RunCell(const CampaignConfig& config, const CampaignPlan& plan,
                     std::vector<CellResult>& cells, size_t i) {
  const size_t seeds = config.seeds.size();
  const SearchTarget& target = *plan.targets[i / seeds];
  CellResult& cell = cells[i];
  cell.program = static_cast<int>(i / seeds / config.modes.size());
  cell.mode = target.mode();
  cell.seed = config.seeds[i % seeds];
  auto r = Search(target, cell.seed, config.search);
  if (!r.ok()) {
    return absl::Status(r.status().code(),
                        StrCat(target.name(), " ", FitnessModeName(cell.mode), " seed ", cell.seed,
                               ": ", r.status().message()));
  }
  for (const FoundCrash& c : r->crashes) cell.crashes.push_back(c.record.Key());
  std::sort(cell.crashes.begin(), cell.crashes.end());
  cell.best_coverage = r->best_fitness.coverage;
  cell.evaluations = r->evaluations;
  return absl::OkStatus();
}

absl::StatusOr<CampaignResult> Summarize(std::span<const FaultCorpusProgram> corpus,
                                         const CampaignConfig& config,
                                         std::vector<CellResult> cells) {
  CampaignResult out;
  out.config = config;
  for (const auto& p : corpus) out.programs.push_back(p.name);
  using Found = std::pair<int, CrashKey>;
  std::map<Found, unsigned> masks;
  std::vector<std::set<Found>> by_mode(config.modes.size());
  for (const CellResult& c : cells) {
    size_t m = std::find(config.modes.begin(), config.modes.end(), c.mode) - config.modes.begin();
    for (const CrashKey& k : c.crashes) {
      by_mode[m].insert({c.program, k});
      masks[{c.program, k}] |= 1u << m;
    }
  }
  for (size_t m = 0; m < config.modes.size(); ++m) {
    ModeSummary s;
    s.mode = config.modes[m];
    s.unique_crashes = static_cast<int>(by_mode[m].size());
    std::set<int> programs;
    std::set<std::string> types;
    for (const auto& [p, k] : by_mode[m]) {
      programs.insert(p);
      types.insert(k.exception_type);
    }
    s.faulty_programs = static_cast<int>(programs.size());
    s.crash_types = static_cast<int>(types.size());
    out.summary.push_back(s);
  }
  for (const auto& [found, mask] : masks) ++out.overlap[mask];
  out.total_unique = static_cast<int>(masks.size());
  out.cells = std::move(cells);
  return out;
}

template <bool kParallel>
absl::StatusOr<CampaignResult> Campaign(std::span<const FaultCorpusProgram> corpus,
                                        const CampaignConfig& config) {
  if (corpus.empty()) return absl::InvalidArgumentError("empty corpus");
  if (config.modes.empty() || config.seeds.empty()) {
    return absl::InvalidArgumentError("campaign needs at least one mode and one seed");
  }
  CampaignPlan plan;
  const size_t n_targets = corpus.size() * config.modes.size();
  plan.targets.resize(n_targets);
  std::vector<absl::Status> prep(n_targets);
#pragma omp parallel for schedule(dynamic) if (kParallel)
  for (size_t t = 0; t < n_targets; ++t) prep[t] = PrepareOne(corpus, config, plan, t);
  for (size_t t = 0; t < n_targets; ++t) {
    if (!prep[t].ok()) {
      return absl::Status(prep[t].code(), StrCat(corpus[t / config.modes.size()].name, ": ",
                                                 prep[t].message()));
    }
  }

  const size_t n_cells = n_targets * config.seeds.size();
  std::vector<CellResult> cells(n_cells);
  std::vector<absl::Status> status(n_cells);
#pragma omp parallel for schedule(dynamic) if (kParallel)
  for (size_t i = 0; i < n_cells; ++i) status[i] = RunCell(config, plan, cells, i);
  for (const absl::Status& s : status) {
    if (!s.ok()) return s;
  }
  return Summarize(corpus, config, std::move(cells));
}

}  // namespace

absl::StatusOr<CampaignResult> RunCampaign(std::span<const FaultCorpusProgram> corpus,
                                           const CampaignConfig& config) {
  return Campaign<true>(corpus, config);
}

absl::StatusOr<CampaignResult> RunCampaignSerial(std::span<const FaultCorpusProgram> corpus,
                                                 const CampaignConfig& config) {
  return Campaign<false>(corpus, config);
}

std::string OverlapLabel(const CampaignResult& result, unsigned mask) {
  std::vector<std::string_view> names;
  for (size_t m = 0; m < result.config.modes.size(); ++m) {
    if (mask & (1u << m)) names.push_back(FitnessModeName(result.config.modes[m]));
  }
  return StrJoin(names, "+");
}

std::string CampaignCsv(const CampaignResult& result) {
  std::string out = "mode,unique_crashes,faulty_programs,crash_types\n";
  for (const ModeSummary& s : result.summary) {
    StrAppend(&out, FitnessModeName(s.mode), ",", s.unique_crashes, ",", s.faulty_programs, ",",
              s.crash_types, "\n");
  }
  return out;
}

std::string CampaignJson(const CampaignResult& result) {
  using json = nlohmann::ordered_json;
  json j;
  j["programs"] = result.programs;
  j["budget"] = result.config.search.budget;
  j["population"] = result.config.search.population;
  j["seeds"] = result.config.seeds;
  json summary = json::array();
  for (const ModeSummary& s : result.summary) {
    summary.push_back({{"mode", FitnessModeName(s.mode)},
                       {"unique_crashes", s.unique_crashes},
                       {"faulty_programs", s.faulty_programs},
                       {"crash_types", s.crash_types}});
  }
  j["summary"] = summary;
  json overlap = json::object();
  for (const auto& [mask, count] : result.overlap) overlap[OverlapLabel(result, mask)] = count;
  j["overlap"] = overlap;
  j["total_unique"] = result.total_unique;
  json cells = json::array();
  for (const CellResult& c : result.cells) {
    json crashes = json::array();
    for (const CrashKey& k : c.crashes) {
      crashes.push_back({{"class", k.class_name},
                         {"method", k.method},
                         {"body_index", k.body_index},
                         {"exception", k.exception_type}});
    }
    cells.push_back({{"program", result.programs[c.program]},
                     {"mode", FitnessModeName(c.mode)},
                     {"seed", c.seed},
                     {"unique_crashes", c.crashes.size()},
                     {"best_coverage", c.best_coverage},
                     {"evaluations", c.evaluations},
                     {"crashes", crashes}});
  }
  j["cells"] = cells;
  return j.dump(2);
}

}  // namespace acv
