#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <optional>
#include <set>

#include "rankfuse/synthgen.hpp"

namespace rankfuse {
namespace {

std::optional<std::size_t> truth_rank(const EnsembleInstance& inst, std::size_t model) {
  return inst.outputs[model].rank_of(inst.ground_truth);
}

TEST(GenDataset, AllMassOnRankOneGivesPerfectTopOne) {
  SynthConfig cfg;
  cfg.m = 3;
  cfg.k_max = 4;
  cfg.n_instances = 500;
  cfg.placement.assign(3, {1.0, 0.0, 0.0, 0.0, 0.0});
  for (const auto& inst : gen_dataset(cfg).instances) {
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(truth_rank(inst, i), 0u);
  }
}

TEST(GenDataset, EmpiricalTopKMatchesPlacementCdf) {
  SynthConfig cfg;
  cfg.m = 2;
  cfg.k_max = 5;
  cfg.n_instances = 20000;
  cfg.seed = 11;
  cfg.rho = 0.4;
  cfg.placement = {{0.3, 0.2, 0.1, 0.05, 0.05, 0.3}, {0.1, 0.1, 0.1, 0.1, 0.1, 0.5}};
  const auto ds = gen_dataset(cfg);
  const double n = static_cast<double>(cfg.n_instances);
  for (std::size_t i = 0; i < 2; ++i) {
    double cdf = 0.0;
    for (std::size_t k = 0; k < cfg.k_max; ++k) {
      cdf += cfg.placement[i][k];
      std::size_t hits = 0;
      for (const auto& inst : ds.instances) {
        auto r = truth_rank(inst, i);
        hits += (r && *r <= k) ? 1 : 0;
      }
      const double se = std::sqrt(cdf * (1.0 - cdf) / n);
      EXPECT_NEAR(static_cast<double>(hits) / n, cdf, 3.0 * se) << "model " << i << " k " << k;
    }
  }
}

TEST(GenDataset, FullCouplingAlignsRanks) {
  SynthConfig cfg;
  cfg.m = 3;
  cfg.k_max = 6;
  cfg.n_instances = 2000;
  cfg.rho = 1.0;
  cfg.seed = 5;
  cfg.placement.assign(3, {0.2, 0.15, 0.15, 0.1, 0.1, 0.1, 0.2});
  for (const auto& inst : gen_dataset(cfg).instances) {
    EXPECT_EQ(truth_rank(inst, 0), truth_rank(inst, 1));
    EXPECT_EQ(truth_rank(inst, 0), truth_rank(inst, 2));
  }
}

TEST(GenDataset, ListsAreDuplicateFreeAndFull) {
  SynthConfig cfg;
  cfg.m = 2;
  cfg.k_max = 8;
  cfg.n_instances = 300;
  cfg.pool_size = 9;
  cfg.placement.assign(2, {0.5, 0, 0, 0, 0, 0, 0, 0, 0.5});
  for (const auto& inst : gen_dataset(cfg).instances) {
    for (const auto& out : inst.outputs) {
      std::set<std::string> keys;
      for (const auto& p : out.predictions) keys.insert(p.str());
      EXPECT_EQ(keys.size(), 8u);
      EXPECT_EQ(out.predictions.size(), 8u);
    }
  }
}

TEST(GenDataset, SameSeedSameData) {
  SynthConfig cfg;
  cfg.placement.assign(2, std::vector<double>(11, 1.0 / 11.0));
  cfg.seed = 99;
  auto a = gen_dataset(cfg);
  auto b = gen_dataset(cfg);
  ASSERT_EQ(a.instances.size(), b.instances.size());
  for (std::size_t n = 0; n < a.instances.size(); ++n) {
    EXPECT_EQ(a.instances[n].ground_truth, b.instances[n].ground_truth);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_EQ(a.instances[n].outputs[i].predictions, b.instances[n].outputs[i].predictions);
    }
  }
  cfg.seed = 100;
  EXPECT_NE(gen_dataset(cfg).instances[0].outputs[0].predictions,
            a.instances[0].outputs[0].predictions);
}

TEST(GenDataset, ValidatesConfig) {
  SynthConfig cfg;
  cfg.placement = {{0.5, 0.5}};
  EXPECT_THROW(gen_dataset(cfg), ArgumentError);
  cfg.placement.assign(2, std::vector<double>(11, 0.1));
  EXPECT_THROW(gen_dataset(cfg), ArgumentError);
  cfg.placement.assign(2, std::vector<double>(11, 1.0 / 11.0));
  cfg.rho = 1.5;
  EXPECT_THROW(gen_dataset(cfg), ArgumentError);
  cfg.rho = 0.0;
  cfg.pool_size = 3;
  EXPECT_THROW(gen_dataset(cfg), ArgumentError);
}

TEST(ComplementaryFixture, CoverageAndComponentAccuracy) {
  const auto ds = complementary_fixture(1);
  ASSERT_EQ(ds.instances.size(), 20000u);
  EXPECT_EQ(ds.model_ids, (std::vector<std::string>{"model_a", "model_b"}));
  std::size_t a = 0, b = 0, either = 0, a_rank1 = 0;
  for (const auto& inst : ds.instances) {
    const auto ra = truth_rank(inst, 0);
    const auto rb = truth_rank(inst, 1);
    a += ra ? 1 : 0;
    b += rb ? 1 : 0;
    either += (ra || rb) ? 1 : 0;
    a_rank1 += (ra && *ra == 0) ? 1 : 0;
    if (rb) {
      EXPECT_LT(*rb, 5u);
    }
    EXPECT_EQ(inst.outputs[0].predictions.size(), 10u);
  }
  const double n = 20000.0;
  EXPECT_GE(either / n, 0.85);
  EXPECT_NEAR(a / n, 0.5, 0.02);
  EXPECT_NEAR(b / n, 0.5, 0.02);
  EXPECT_EQ(a_rank1, a);
}

TEST(ComplementaryFixture, UnionMergeReachesCoverage) {
  // put both models' truths first, then fill: top-10 accuracy equals coverage
  const auto ds = complementary_fixture(2);
  std::size_t covered = 0, hit = 0;
  for (const auto& inst : ds.instances) {
    std::vector<std::string> merged;
    const bool present = truth_rank(inst, 0) || truth_rank(inst, 1);
    covered += present ? 1 : 0;
    if (present) merged.push_back(inst.ground_truth.str());
    for (const auto& o : inst.outputs) {
      for (const auto& p : o.predictions) {
        if (merged.size() < 10 &&
            std::find(merged.begin(), merged.end(), p.str()) == merged.end()) {
          merged.push_back(p.str());
        }
      }
    }
    hit += std::find(merged.begin(), merged.end(), inst.ground_truth.str()) != merged.end();
  }
  EXPECT_EQ(hit, covered);
}

TEST(ComplementaryFixture, RecordsParameters) {
  const auto ds = complementary_fixture(4);
  EXPECT_EQ(ds.kind, "complementary");
  bool has_seed = false;
  for (const auto& [k, v] : ds.parameters) has_seed = has_seed || (k == "seed" && v == 4.0);
  EXPECT_TRUE(has_seed);
}

}  // namespace
}  // namespace rankfuse
