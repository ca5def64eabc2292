#pragma once

// Top-k accuracy, mean reciprocal rank and accuracy grouped by a per-instance
// scalar (e.g. similarity to the nearest training example).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rankfuse/errors.hpp"

namespace rankfuse {

// One instance's fused ranking.
struct RankedList {
  std::string input_id;
  std::vector<std::string> ranked;
};

using TruthMap = std::unordered_map<std::string, std::string>;

namespace detail {

// 1-based rank of the ground truth per instance, 0 when absent.
inline std::vector<std::size_t> truth_ranks(std::span<const RankedList> merged,
                                            const TruthMap& truth) {
  if (merged.size() != truth.size()) {
    // Find a concrete id to report.
    std::unordered_map<std::string, bool> present;
    for (const auto& r : merged) present.emplace(r.input_id, true);
    for (const auto& [id, key] : truth) {
      if (!present.contains(id)) {
        throw DataError("ground truth for '" + id + "' has no ranked output");
      }
    }
  }
  std::vector<std::size_t> ranks;
  ranks.reserve(merged.size());
  std::unordered_map<std::string, bool> seen;
  for (const auto& r : merged) {
    auto it = truth.find(r.input_id);
    if (it == truth.end()) {
      throw DataError("no ground truth for instance '" + r.input_id + "'");
    }
    if (!seen.emplace(r.input_id, true).second) {
      throw DataError("duplicate ranked output for instance '" + r.input_id + "'");
    }
    auto pos = std::find(r.ranked.begin(), r.ranked.end(), it->second);
    ranks.push_back(pos == r.ranked.end()
                        ? 0
                        : static_cast<std::size_t>(pos - r.ranked.begin()) + 1);
  }
  return ranks;
}

inline double hit_fraction(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) return 0.0;
  std::size_t hits = 0;
  for (auto r : ranks) hits += (r != 0 && r <= k) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

}  // namespace detail

// Fraction of instances whose ground truth is within the first k entries.
inline std::map<std::size_t, double> topk_accuracy(std::span<const RankedList> merged,
                                                   const TruthMap& truth,
                                                   std::span<const std::size_t> ks) {
  const auto ranks = detail::truth_ranks(merged, truth);
  std::map<std::size_t, double> out;
  for (auto k : ks) {
    if (k == 0) throw ArgumentError("top-k requires k >= 1");
    out[k] = detail::hit_fraction(ranks, k);
  }
  return out;
}

// Mean of 1/rank of the ground truth, counting absent as 0.
inline double mrr(std::span<const RankedList> merged, const TruthMap& truth) {
  const auto ranks = detail::truth_ranks(merged, truth);
  if (ranks.empty()) return 0.0;
  double sum = 0.0;
  for (auto r : ranks) sum += r == 0 ? 0.0 : 1.0 / static_cast<double>(r);
  return sum / static_cast<double>(ranks.size());
}

struct EvaluationReport {
  std::map<std::size_t, double> accuracy;
  double mrr = 0.0;
  std::size_t n_instances = 0;
};

inline EvaluationReport evaluate(std::span<const RankedList> merged, const TruthMap& truth,
                                 std::span<const std::size_t> ks) {
  EvaluationReport report;
  report.accuracy = topk_accuracy(merged, truth, ks);
  report.mrr = mrr(merged, truth);
  report.n_instances = merged.size();
  return report;
}

struct Bucket {
  double lower;  // inclusive; -inf for the underflow bucket
  double upper;  // exclusive; +inf for the overflow bucket
  std::size_t count = 0;
  std::optional<double> accuracy;  // empty when count == 0
};

// Top-k accuracy per half-open bucket [b_j, b_{j+1}). Values below the first
// boundary or at/above the last one land in open-ended edge buckets, which are
// always reported first and last, so bucket counts add up to the number of
// instances.
inline std::vector<Bucket> bucketed_accuracy(std::span<const RankedList> merged,
                                             const TruthMap& truth,
                                             const std::unordered_map<std::string, double>& metadata,
                                             std::span<const double> boundaries,
                                             std::size_t k) {
  if (k == 0) throw ArgumentError("top-k requires k >= 1");
  if (boundaries.empty()) throw ArgumentError("at least one bucket boundary is required");
  for (std::size_t j = 0; j + 1 < boundaries.size(); ++j) {
    if (!(boundaries[j] < boundaries[j + 1])) {
      throw ArgumentError("bucket boundaries must be strictly increasing");
    }
  }
  const auto ranks = detail::truth_ranks(merged, truth);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<Bucket> buckets;
  buckets.push_back({-kInf, boundaries.front(), 0, std::nullopt});
  for (std::size_t j = 0; j + 1 < boundaries.size(); ++j) {
    buckets.push_back({boundaries[j], boundaries[j + 1], 0, std::nullopt});
  }
  buckets.push_back({boundaries.back(), kInf, 0, std::nullopt});

  std::vector<std::size_t> hits(buckets.size(), 0);
  for (std::size_t n = 0; n < merged.size(); ++n) {
    auto it = metadata.find(merged[n].input_id);
    if (it == metadata.end()) {
      throw DataError("no metadata value for instance '" + merged[n].input_id + "'");
    }
    const double v = it->second;
    if (std::isnan(v)) {
      throw DataError("metadata value for '" + merged[n].input_id + "' is NaN");
    }
    // upper_bound gives the first boundary > v, which is the index of the
    // bucket whose lower edge is <= v.
    const auto b = static_cast<std::size_t>(
        std::upper_bound(boundaries.begin(), boundaries.end(), v) - boundaries.begin());
    ++buckets[b].count;
    if (ranks[n] != 0 && ranks[n] <= k) ++hits[b];
  }
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    if (buckets[b].count > 0) {
      buckets[b].accuracy =
          static_cast<double>(hits[b]) / static_cast<double>(buckets[b].count);
    }
  }
  return buckets;
}

}  // namespace rankfuse
