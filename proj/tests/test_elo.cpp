#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rankfuse/elo.hpp"

namespace rankfuse {
namespace {

// Records sampled from the Bradley-Terry law P(i beats j) = 1 / (1 + e^(s_j - s_i)).
std::vector<ComparisonRecord> sample_comparisons(const std::vector<double>& s,
                                                 std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ComparisonRecord> out;
  out.reserve(n);
  while (out.size() < n) {
    const auto i = pick(gen);
    const auto j = pick(gen);
    if (i == j) continue;
    const double p = 1.0 / (1.0 + std::exp(s[j] - s[i]));
    out.push_back({"s" + std::to_string(i), "s" + std::to_string(j),
                   u(gen) < p ? Winner::kA : Winner::kB});
  }
  return out;
}

std::vector<ComparisonRecord> equal_wins() {
  return {{"a", "b", Winner::kA}, {"a", "b", Winner::kB}, {"b", "a", Winner::kA},
          {"b", "a", Winner::kB}};
}

TEST(BradleyTerry, EqualWinsGiveEqualScores) {
  auto scores = fit_bradley_terry(equal_wins());
  EXPECT_NEAR(scores.score("a"), scores.score("b"), 1e-12);
  auto ratings = to_elo(scores, "a");
  EXPECT_NEAR(predicted_win_rate(ratings, "a", "b"), 0.5, 1e-12);
}

TEST(BradleyTerry, RecoversKnownScores) {
  const std::vector<double> truth{0.0, 0.4, 0.8};
  auto ratings = to_elo(fit_bradley_terry(sample_comparisons(truth, 10000, 1)), "s0");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    EXPECT_NEAR(ratings.scores[ratings.index_of("s" + std::to_string(i))], truth[i], 0.1);
  }
}

TEST(BradleyTerry, ReversingWinnersNegatesScores) {
  auto records = sample_comparisons({0.0, 0.3, -0.2, 0.9}, 2000, 2);
  auto flipped = records;
  for (auto& r : flipped) r.winner = r.winner == Winner::kA ? Winner::kB : Winner::kA;
  auto a = to_elo(fit_bradley_terry(records), "s0");
  auto b = to_elo(fit_bradley_terry(flipped), "s0");
  for (std::size_t i = 0; i < a.scores.size(); ++i) EXPECT_NEAR(a.scores[i], -b.scores[i], 1e-8);
}

TEST(BradleyTerry, ScoresHaveMeanZeroAndSortedSources) {
  auto scores = fit_bradley_terry(sample_comparisons({0.0, 0.5, 1.0}, 600, 3));
  EXPECT_EQ(scores.sources, (std::vector<std::string>{"s0", "s1", "s2"}));
  double sum = 0.0;
  for (double v : scores.s) sum += v;
  EXPECT_NEAR(sum, 0.0, 1e-12);
  EXPECT_GT(scores.iterations, 0);
}

TEST(BradleyTerry, UndefeatedSourceIsDegenerate) {
  std::vector<ComparisonRecord> r{{"a", "b", Winner::kA}, {"a", "b", Winner::kA}};
  EXPECT_THROW(fit_bradley_terry(r), DegeneracyError);
}

TEST(BradleyTerry, DisconnectedGraphIsDegenerate) {
  std::vector<ComparisonRecord> r{{"a", "b", Winner::kA}, {"a", "b", Winner::kB},
                                  {"c", "d", Winner::kA}, {"c", "d", Winner::kB}};
  EXPECT_THROW(fit_bradley_terry(r), DegeneracyError);
}

TEST(BradleyTerry, OneWayChainIsDegenerate) {
  // every source wins and loses, but nothing beats the {a, b} block from outside
  std::vector<ComparisonRecord> r{{"a", "b", Winner::kA}, {"a", "b", Winner::kB},
                                  {"c", "d", Winner::kA}, {"c", "d", Winner::kB},
                                  {"a", "c", Winner::kA}};
  EXPECT_THROW(fit_bradley_terry(r), DegeneracyError);
}

TEST(BradleyTerry, InvalidRecordsAndOptions) {
  std::vector<ComparisonRecord> self{{"a", "a", Winner::kA}};
  EXPECT_ANY_THROW(fit_bradley_terry(self));
  std::vector<ComparisonRecord> none;
  EXPECT_ANY_THROW(fit_bradley_terry(none));
  EXPECT_THROW(fit_bradley_terry(equal_wins(), {0.0, 10}), ArgumentError);
}

TEST(Elo, AnchorIsZeroAndScaleIsFourHundredLog10E) {
  BradleyTerryScores s{{"a", "b"}, {-0.2, 0.2029}, 1};
  auto r = to_elo(s, "a");
  EXPECT_EQ(r.elo[r.index_of("a")], 0.0);
  EXPECT_NEAR(r.elo[r.index_of("b")], 70.0, 0.01);
  EXPECT_NEAR(kEloScale, 173.7178, 1e-4);
  EXPECT_THROW(to_elo(s, "zz"), ArgumentError);
}

TEST(Elo, ShiftInvariance) {
  BradleyTerryScores s{{"a", "b", "c"}, {0.25, -0.5, 0.25}, 1};
  BradleyTerryScores shifted{{"a", "b", "c"}, {1.25, 0.5, 1.25}, 1};
  auto r1 = to_elo(s, "b");
  auto r2 = to_elo(shifted, "b");
  EXPECT_EQ(r1.elo, r2.elo);
}

TEST(WinRate, SeventyPointsIsAboutSixtyPercent) {
  EXPECT_NEAR(win_rate_from_elo(70.0, 0.0), 0.5997, 0.0005);
  EXPECT_EQ(win_rate_from_elo(12.0, 12.0), 0.5);
}

TEST(WinRate, Antisymmetric) {
  auto r = to_elo(fit_bradley_terry(sample_comparisons({0.0, 0.7, -0.3}, 900, 4)), "s0");
  for (const auto& i : r.sources) {
    for (const auto& j : r.sources) {
      EXPECT_NEAR(predicted_win_rate(r, i, j) + predicted_win_rate(r, j, i), 1.0, 1e-12);
    }
  }
  EXPECT_THROW(predicted_win_rate(r, "s0", "nope"), ArgumentError);
}

TEST(WinRate, ReproducesFittedProbabilities) {
  auto scores = fit_bradley_terry(sample_comparisons({0.0, 0.7, -0.3}, 900, 5));
  auto r = to_elo(scores, "s1");
  const double direct = 1.0 / (1.0 + std::exp(scores.score("s2") - scores.score("s0")));
  EXPECT_NEAR(predicted_win_rate(r, "s0", "s2"), direct, 1e-12);
}

TEST(Bootstrap, EstimateInsideIntervalAndDeterministic) {
  auto records = sample_comparisons({0.0, 0.4, 0.8}, 600, 6);
  BootstrapOptions opts;
  opts.n_resamples = 500;
  opts.seed = 9;
  auto a = bootstrap_win_rate_ci(records, opts);
  auto b = bootstrap_win_rate_ci(records, opts);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t p = 0; p < a.size(); ++p) {
    EXPECT_LE(a[p].low, a[p].estimate);
    EXPECT_GE(a[p].high, a[p].estimate);
    EXPECT_LT(a[p].source_i, a[p].source_j);
    EXPECT_EQ(a[p].low, b[p].low);
    EXPECT_EQ(a[p].high, b[p].high);
  }
}

TEST(Bootstrap, IntervalShrinksWithTenTimesTheData) {
  BootstrapOptions opts;
  opts.n_resamples = 300;
  opts.seed = 3;
  auto small = bootstrap_win_rate_ci(sample_comparisons({0.0, 0.5}, 300, 7), opts);
  auto large = bootstrap_win_rate_ci(sample_comparisons({0.0, 0.5}, 3000, 7), opts);
  EXPECT_LT(large[0].high - large[0].low, small[0].high - small[0].low);
}

TEST(Bootstrap, SingleResampleGivesZeroWidth) {
  BootstrapOptions opts;
  opts.n_resamples = 1;
  auto ci = bootstrap_win_rate_ci(sample_comparisons({0.0, 0.5}, 200, 8), opts);
  EXPECT_EQ(ci[0].low, ci[0].high);
}

TEST(Bootstrap, InvalidOptions) {
  BootstrapOptions opts;
  opts.n_resamples = 0;
  EXPECT_THROW(bootstrap_win_rate_ci(equal_wins(), opts), ArgumentError);
  opts.n_resamples = 10;
  opts.confidence = 1.0;
  EXPECT_THROW(bootstrap_win_rate_ci(equal_wins(), opts), ArgumentError);
}

TEST(Bootstrap, GivesUpOnPersistentlyDegenerateResamples) {
  // one win each way: about half of all resamples are degenerate
  std::vector<ComparisonRecord> r{{"a", "b", Winner::kA}, {"a", "b", Winner::kB}};
  BootstrapOptions opts;
  opts.n_resamples = 200;
  opts.max_redraws = 0;
  EXPECT_THROW(bootstrap_win_rate_ci(r, opts), DegeneracyError);
  opts.max_redraws = 100;
  EXPECT_NO_THROW(bootstrap_win_rate_ci(r, opts));
}

}  // namespace
}  // namespace rankfuse
