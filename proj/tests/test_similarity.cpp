#include <gtest/gtest.h>

#include <random>

#include "rankfuse/similarity.hpp"
#include "test_support.hpp"

namespace rankfuse {
namespace {

CountFingerprint fp(std::string id, std::map<std::uint32_t, std::uint32_t> c,
                    std::size_t dim = kDefaultFingerprintDim) {
  return CountFingerprint(std::move(id), dim, c);
}

TEST(Tanimoto, WorkedExampleIsExactlyTwoThirds) {
  EXPECT_EQ(tanimoto_count(fp("x", {{0, 1}, {1, 2}}), fp("y", {{0, 2}, {1, 1}})), 2.0 / 3.0);
}

TEST(Tanimoto, SelfSimilarityIsOne) {
  std::mt19937_64 gen(1);
  for (const auto& x : testing::random_fingerprints(gen, 50, 4093, 30, "x")) {
    EXPECT_EQ(tanimoto_count(x, x), 1.0);
  }
}

TEST(Tanimoto, DisjointSupportsGiveZero) {
  EXPECT_EQ(tanimoto_count(fp("x", {{0, 3}}), fp("y", {{5, 1}})), 0.0);
}

TEST(Tanimoto, SymmetricAndWithinUnitInterval) {
  std::mt19937_64 gen(2);
  auto a = testing::random_fingerprints(gen, 40, 64, 10, "a");
  for (const auto& x : a) {
    for (const auto& y : a) {
      const double s = tanimoto_count(x, y);
      EXPECT_EQ(s, tanimoto_count(y, x));
      EXPECT_GE(s, 0.0);
      EXPECT_LE(s, 1.0);
    }
  }
}

TEST(Tanimoto, ZeroVectorAgainstNonzeroIsZero) {
  EXPECT_EQ(tanimoto_count(fp("z", {}), fp("y", {{1, 2}})), 0.0);
}

TEST(Tanimoto, Errors) {
  EXPECT_THROW(tanimoto_count(fp("z", {}), fp("w", {})), DegeneracyError);
  EXPECT_THROW(tanimoto_count(fp("a", {{0, 1}}, 8), fp("b", {{0, 1}}, 16)), ArgumentError);
  EXPECT_THROW(fp("a", {{8, 1}}, 8), ArgumentError);
}

TEST(Fingerprint, ZeroCountsAreDropped) {
  auto x = fp("x", {{3, 0}, {4, 2}});
  ASSERT_EQ(x.entries().size(), 1u);
  EXPECT_EQ(x.squared_norm(), 4u);
}

TEST(Fingerprint, PaddingLeavesSimilarityUnchanged) {
  std::mt19937_64 gen(3);
  auto a = testing::random_fingerprints(gen, 30, 4093, 40, "a");
  for (std::size_t j = 0; j + 1 < a.size(); ++j) {
    EXPECT_EQ(tanimoto_count(a[j], a[j + 1]),
              tanimoto_count(a[j].padded_to(4096), a[j + 1].padded_to(4096)));
  }
}

TEST(MaxSimilarity, BlockedMatchesNaiveOracle) {
  std::mt19937_64 gen(4);
  auto q = testing::random_fingerprints(gen, 150, 4093, 25, "q");
  auto r = testing::random_fingerprints(gen, 170, 4093, 25, "r");
  // near duplicates and an exact tie between two references
  r[7] = CountFingerprint("r7", 4093, {{1, 1}, {2, 2}});
  r[8] = CountFingerprint("r8", 4093, {{1, 1}, {2, 2}});
  q[0] = CountFingerprint("q0", 4093, {{1, 1}, {2, 2}});
  const auto oracle = testing::naive_max_similarity(q, r);
  for (std::size_t block : {1u, 7u, 64u, 1024u}) {
    for (unsigned threads : {1u, 3u}) {
      auto got = max_similarity(q, r, {block, threads});
      ASSERT_EQ(got.size(), oracle.size());
      for (std::size_t j = 0; j < got.size(); ++j) {
        EXPECT_EQ(got[j].query_id, oracle[j].query_id);
        EXPECT_NEAR(got[j].max_sim, oracle[j].max_sim, 1e-12);
        EXPECT_EQ(got[j].reference_id, oracle[j].reference_id) << "block " << block;
      }
    }
  }
  EXPECT_EQ(max_similarity(q, r)[0].reference_id, "r7");
}

TEST(MaxSimilarity, QueriesEqualReferencesGiveOneAtThemselves) {
  std::mt19937_64 gen(5);
  auto a = testing::random_fingerprints(gen, 60, 4093, 30, "a");
  for (const auto& hit : max_similarity(a, a, {16, 1})) {
    EXPECT_EQ(hit.max_sim, 1.0);
    EXPECT_EQ(hit.reference_id, hit.query_id);
  }
}

TEST(MaxSimilarity, SingleReferenceEqualsPairwiseValue) {
  std::mt19937_64 gen(6);
  auto q = testing::random_fingerprints(gen, 20, 100, 10, "q");
  auto r = testing::random_fingerprints(gen, 1, 100, 10, "r");
  auto got = max_similarity(q, r);
  for (std::size_t j = 0; j < q.size(); ++j) {
    EXPECT_EQ(got[j].max_sim, tanimoto_count(q[j], r[0]));
  }
}

TEST(MaxSimilarity, Errors) {
  std::vector<CountFingerprint> q{fp("q", {{0, 1}})};
  std::vector<CountFingerprint> none;
  EXPECT_THROW(max_similarity(q, none), ArgumentError);
  std::vector<CountFingerprint> other{fp("r", {{0, 1}}, 10)};
  EXPECT_THROW(max_similarity(q, other), ArgumentError);
  EXPECT_THROW(max_similarity(q, q, {0, 1}), ArgumentError);
}

TEST(NearDuplicateFilter, IdenticalQueryIsRemoved) {
  std::vector<CountFingerprint> refs{fp("r", {{0, 1}, {9, 3}})};
  std::vector<CountFingerprint> q{fp("same", {{0, 1}, {9, 3}}), fp("diff", {{0, 1}, {8, 3}})};
  EXPECT_EQ(near_duplicate_filter(q, refs, 0.95), (std::vector<std::string>{"diff"}));
}

TEST(NearDuplicateFilter, ThresholdOneKeepsEverythingBelowOne) {
  std::mt19937_64 gen(7);
  auto q = testing::random_fingerprints(gen, 30, 500, 20, "q");
  auto r = testing::random_fingerprints(gen, 30, 500, 20, "r");
  EXPECT_EQ(near_duplicate_filter(q, r, 1.0).size(), q.size());
}

TEST(NearDuplicateFilter, SubsetOfReferencesRetainsNothing) {
  std::mt19937_64 gen(8);
  auto r = testing::random_fingerprints(gen, 40, 500, 20, "r");
  std::vector<CountFingerprint> q(r.begin(), r.begin() + 10);
  for (double t : {0.5, 0.95, 1.0}) EXPECT_TRUE(near_duplicate_filter(q, r, t).empty());
}

TEST(NearDuplicateFilter, ThresholdOutOfRangeIsArgumentError) {
  std::vector<CountFingerprint> q{fp("q", {{0, 1}})};
  EXPECT_THROW(near_duplicate_filter(q, q, 0.0), ArgumentError);
  EXPECT_THROW(near_duplicate_filter(q, q, 1.5), ArgumentError);
}

}  // namespace
}  // namespace rankfuse
