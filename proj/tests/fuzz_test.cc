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

#include <random>

#include "gtest/gtest.h"
#include "test_util.h"

namespace acv {
namespace {

SearchTarget PrepareOrDie(const SmaliProgram& p, FitnessMode mode) {
  auto t = SearchTarget::Prepare(p, mode);
  if (!t.ok()) throw std::runtime_error(std::string(t.status().message()));
  return *std::move(t);
}

TEST(DominatesTest, Cases) {
  Fitness base{0.5, 1, 10};
  EXPECT_FALSE(Dominates(base, base));
  EXPECT_TRUE(Dominates({0.6, 1, 10}, base));
  EXPECT_TRUE(Dominates({0.5, 2, 10}, base));
  EXPECT_TRUE(Dominates({0.5, 1, 9}, base));
  EXPECT_FALSE(Dominates({0.6, 0, 10}, base));
  EXPECT_FALSE(Dominates({0.6, 1, 11}, base));
  EXPECT_FALSE(Dominates(base, {0.6, 1, 10}));
}

TEST(ParetoTest, RanksFronts) {
  std::vector<Fitness> f = {{1.0, 0, 5}, {0.5, 1, 5}, {0.5, 0, 5}, {0.2, 0, 9}, {1.0, 1, 1}};
  EXPECT_EQ(ParetoRanks(f), (std::vector<int>{1, 1, 2, 3, 0}));
}

// Naive reference: peel off non-dominated fronts one at a time.
std::vector<int> NaiveRanks(const std::vector<Fitness>& f) {
  std::vector<int> rank(f.size(), -1);
  std::vector<bool> done(f.size(), false);
  for (int r = 0, left = static_cast<int>(f.size()); left > 0; ++r) {
    std::vector<int> front;
    for (size_t i = 0; i < f.size(); ++i) {
      if (done[i]) continue;
      bool dominated = false;
      for (size_t j = 0; j < f.size(); ++j) dominated |= !done[j] && Dominates(f[j], f[i]);
      if (!dominated) front.push_back(static_cast<int>(i));
    }
    for (int i : front) {
      rank[i] = r;
      done[i] = true;
      --left;
    }
  }
  return rank;
}

TEST(ParetoTest, SurvivorsRespectRanks) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Fitness> f(40);
    for (Fitness& x : f) {
      x = {std::uniform_int_distribution<int>(0, 5)(rng) / 5.0,
           std::uniform_int_distribution<int>(0, 3)(rng),
           std::uniform_int_distribution<int>(1, 8)(rng)};
    }
    std::vector<int> ranks = ParetoRanks(f);
    ASSERT_EQ(ranks, NaiveRanks(f));
    int k = std::uniform_int_distribution<int>(1, 40)(rng);
    std::vector<int> kept = SelectSurvivors(f, k);
    ASSERT_EQ(static_cast<int>(kept.size()), k);
    std::set<int> kept_set(kept.begin(), kept.end());
    ASSERT_EQ(kept_set.size(), kept.size());
    int worst_kept = 0;
    for (int i : kept) worst_kept = std::max(worst_kept, ranks[i]);
    for (size_t j = 0; j < f.size(); ++j) {
      if (!kept_set.count(static_cast<int>(j))) EXPECT_GE(ranks[j], worst_kept);
    }
  }
}

TEST(ParetoTest, CrowdingKeepsExtremes) {
  // One front; the two ends of the coverage axis have infinite distance.
  std::vector<Fitness> f = {{0.1, 4, 1}, {0.4, 3, 2}, {0.5, 2, 3}, {0.6, 1, 4}, {0.9, 0, 5}};
  ASSERT_EQ(ParetoRanks(f), std::vector<int>(5, 0));
  std::vector<int> kept = SelectSurvivors(f, 2);
  EXPECT_EQ(std::set<int>(kept.begin(), kept.end()), (std::set<int>{0, 4}));
}

TEST(FitnessModeTest, Names) {
  for (FitnessMode m : kFitnessModes) EXPECT_EQ(*ParseFitnessMode(FitnessModeName(m)), m);
  EXPECT_FALSE(ParseFitnessMode("branch").ok());
}

class SearchTest : public ::testing::Test {
 protected:
  FaultCorpusProgram program_ = GenerateProgram(7, 3);
};

TEST_F(SearchTest, BudgetBelowPopulationIsRejected) {
  SearchTarget t = PrepareOrDie(program_.program, FitnessMode::kInstruction);
  SearchConfig cfg;
  cfg.budget = cfg.population - 1;
  EXPECT_EQ(Search(t, 1, cfg).status().code(), absl::StatusCode::kInvalidArgument);
}

TEST_F(SearchTest, BudgetEqualToPopulationIsOneGeneration) {
  SearchTarget t = PrepareOrDie(program_.program, FitnessMode::kMethod);
  SearchConfig cfg;
  cfg.budget = cfg.population;
  auto r = Search(t, 1, cfg);
  ASSERT_TRUE(r.ok()) << r.status();
  EXPECT_EQ(r->generations, 1);
  EXPECT_EQ(r->evaluations, cfg.population);
}

TEST_F(SearchTest, GenerationsFollowBudget) {
  SearchTarget t = PrepareOrDie(program_.program, FitnessMode::kClass);
  SearchConfig cfg;
  cfg.budget = 110;
  auto r = Search(t, 1, cfg);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->generations, 5);
  EXPECT_EQ(r->evaluations, 100);
}

TEST_F(SearchTest, NoneModeHasZeroCoverage) {
  SearchTarget t = PrepareOrDie(program_.program, FitnessMode::kNone);
  auto r = Search(t, 2);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->best_fitness.coverage, 0.0);
}

TEST_F(SearchTest, CoverageIsAFraction) {
  SearchTarget t = PrepareOrDie(program_.program, FitnessMode::kInstruction);
  auto r = Search(t, 2);
  ASSERT_TRUE(r.ok());
  EXPECT_GT(r->best_fitness.coverage, 0.0);
  EXPECT_LE(r->best_fitness.coverage, 1.0);
  EXPECT_LE(r->best.length(), SearchConfig{}.max_length);
}

TEST_F(SearchTest, Deterministic) {
  for (FitnessMode m : kFitnessModes) {
    SearchTarget t = PrepareOrDie(program_.program, m);
    auto a = Search(t, 11);
    auto b = Search(t, 11);
    ASSERT_TRUE(a.ok() && b.ok());
    EXPECT_EQ(a->best, b->best);
    EXPECT_EQ(a->best_fitness, b->best_fitness);
    ASSERT_EQ(a->crashes.size(), b->crashes.size());
    for (size_t i = 0; i < a->crashes.size(); ++i) {
      EXPECT_EQ(a->crashes[i].record, b->crashes[i].record);
      EXPECT_EQ(a->crashes[i].suite, b->crashes[i].suite);
    }
  }
}

TEST_F(SearchTest, CrashesReplayOnOriginalProgram) {
  SearchTarget t = PrepareOrDie(program_.program, FitnessMode::kInstruction);
  int replayed = 0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    auto r = Search(t, seed);
    ASSERT_TRUE(r.ok());
    std::set<CrashKey> keys;
    for (const FoundCrash& c : r->crashes) EXPECT_TRUE(keys.insert(c.record.Key()).second);
    for (const FoundCrash& c : r->crashes) {
      auto vm = Vm::Create(*Link(program_.program), SearchConfig{}.limits);
      ASSERT_TRUE(vm.ok());
      ScriptOutcome out = RunScript(**vm, t.ToScript(c.suite));
      bool found = false;
      for (const CrashRecord& rec : out.crashes) found |= rec.Key() == c.record.Key();
      EXPECT_TRUE(found) << c.record.method;
      ++replayed;
    }
  }
  EXPECT_GT(replayed, 0);
}

TEST_F(SearchTest, EvaluateCountsCrashes) {
  SearchTarget t = PrepareOrDie(program_.program, FitnessMode::kNone);
  const PlantedFault& f = program_.faults[0];
  TestSuite suite;
  for (const ScriptEvent& ev : f.witness) {
    SuiteCall call;
    for (size_t i = 0; i < t.entries().size(); ++i) {
      if (t.entries()[i].class_name == ev.class_name && t.entries()[i].method == ev.method) {
        call.entry = static_cast<int>(i);
      }
    }
    for (const std::string& a : ev.args) call.args.push_back(std::stoll(a));
    suite.calls.push_back(call);
  }
  auto e = t.Evaluate(suite, SearchConfig{}.limits);
  ASSERT_TRUE(e.ok());
  EXPECT_GE(e->fitness.crashes, 1);
  EXPECT_EQ(e->fitness.length, suite.length());
  bool found = false;
  for (const CrashRecord& c : e->crashes) found |= c.Key() == f.location;
  EXPECT_TRUE(found);
}

TEST(CampaignTest, ParallelMatchesSerialAndSumsAgree) {
  std::vector<FaultCorpusProgram> corpus = GenerateCorpusSerial(7, 4);
  CampaignConfig cfg;
  cfg.seeds = {1, 2};
  cfg.search.budget = 60;
  auto par = RunCampaign(corpus, cfg);
  auto ser = RunCampaignSerial(corpus, cfg);
  ASSERT_TRUE(par.ok() && ser.ok());
  EXPECT_EQ(par->cells, ser->cells);
  EXPECT_EQ(par->summary, ser->summary);
  EXPECT_EQ(par->overlap, ser->overlap);
  EXPECT_EQ(CampaignCsv(*par), CampaignCsv(*ser));
  EXPECT_EQ(CampaignJson(*par), CampaignJson(*ser));

  ASSERT_EQ(par->cells.size(), 4u * 4u * 2u);
  EXPECT_EQ(par->cells[0].program, 0);
  EXPECT_EQ(par->cells[1].seed, 2u);
  EXPECT_EQ(par->cells[2].mode, kFitnessModes[1]);

  // Per-mode unique sets from the cells.
  std::vector<std::set<std::pair<int, CrashKey>>> sets(cfg.modes.size());
  for (const CellResult& c : par->cells) {
    size_t m = std::find(cfg.modes.begin(), cfg.modes.end(), c.mode) - cfg.modes.begin();
    for (const CrashKey& k : c.crashes) sets[m].insert({c.program, k});
  }
  std::set<std::pair<int, CrashKey>> all;
  for (size_t m = 0; m < sets.size(); ++m) {
    EXPECT_EQ(par->summary[m].unique_crashes, static_cast<int>(sets[m].size()));
    all.insert(sets[m].begin(), sets[m].end());
  }
  EXPECT_EQ(par->total_unique, static_cast<int>(all.size()));
  int overlap_sum = 0;
  for (const auto& [mask, n] : par->overlap) {
    EXPECT_NE(mask, 0u);
    overlap_sum += n;
  }
  EXPECT_EQ(overlap_sum, par->total_unique);
}

TEST(CampaignTest, OverlapLabel) {
  CampaignResult r;
  r.config.modes = {FitnessMode::kInstruction, FitnessMode::kNone};
  EXPECT_NE(OverlapLabel(r, 0b01).find("instruction"), std::string::npos);
  EXPECT_EQ(OverlapLabel(r, 0b01).find("none"), std::string::npos);
  std::string both = OverlapLabel(r, 0b11);
  EXPECT_NE(both.find("instruction"), std::string::npos);
  EXPECT_NE(both.find("none"), std::string::npos);
}

}  // namespace
}  // namespace acv
