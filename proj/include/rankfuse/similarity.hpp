#pragma once

// Tanimoto similarity on count fingerprints:
//
//   sim(x, y) = <x, y> / (|x|^2 + |y|^2 - <x, y>)
//
// plus an exhaustive all-pairs maximum computed with dense blocked panels,
// the feature axis padded to a power of two.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rankfuse/errors.hpp"
#include "rankfuse/matrix.hpp"

namespace rankfuse {

// Folded dimension used for test-set filtering fixtures.
inline constexpr std::size_t kDefaultFingerprintDim = 4093;

class CountFingerprint {
 public:
  struct Entry {
    std::uint32_t index;
    std::uint32_t count;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  // Zero counts are dropped. Indices must be < dim.
  CountFingerprint(std::string id, std::size_t dim,
                   const std::map<std::uint32_t, std::uint32_t>& counts)
      : id_(std::move(id)), dim_(dim) {
    if (dim_ == 0) throw ArgumentError("fingerprint '" + id_ + "': dim must be positive");
    entries_.reserve(counts.size());
    for (const auto& [index, count] : counts) {
      if (index >= dim_) {
        throw ArgumentError("fingerprint '" + id_ + "': index " + std::to_string(index) +
                            " out of range for dim " + std::to_string(dim_));
      }
      if (count == 0) continue;
      entries_.push_back({index, count});
      squared_norm_ += static_cast<std::uint64_t>(count) * count;
    }
  }

  const std::string& id() const noexcept { return id_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const Entry> entries() const noexcept { return entries_; }
  std::uint64_t squared_norm() const noexcept { return squared_norm_; }
  bool is_zero() const noexcept { return entries_.empty(); }

  // Same vector in a larger feature space.
  CountFingerprint padded_to(std::size_t new_dim) const {
    if (new_dim < dim_) throw ArgumentError("cannot shrink fingerprint dimension");
    CountFingerprint out = *this;
    out.dim_ = new_dim;
    return out;
  }

 private:
  std::string id_;
  std::size_t dim_;
  std::vector<Entry> entries_;  // sorted by index
  std::uint64_t squared_norm_ = 0;
};

namespace detail {

inline std::uint64_t sparse_dot(const CountFingerprint& x, const CountFingerprint& y) {
  const auto a = x.entries();
  const auto b = y.entries();
  std::uint64_t dot = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].index < b[j].index) {
      ++i;
    } else if (b[j].index < a[i].index) {
      ++j;
    } else {
      dot += static_cast<std::uint64_t>(a[i].count) * b[j].count;
      ++i;
      ++j;
    }
  }
  return dot;
}

// Shared by the sparse and dense paths so both round identically. The dense
// path accumulates integer-valued products below 2^53, so `dot` is exact.
inline double tanimoto_from_parts(double dot, double norm_x, double norm_y) {
  return dot / (norm_x + norm_y - dot);
}

}  // namespace detail

inline double tanimoto_count(const CountFingerprint& x, const CountFingerprint& y) {
  if (x.dim() != y.dim()) {
    throw ArgumentError("dimension mismatch: '" + x.id() + "' has " +
                        std::to_string(x.dim()) + ", '" + y.id() + "' has " +
                        std::to_string(y.dim()));
  }
  if (x.is_zero() && y.is_zero()) {
    throw DegeneracyError("similarity of two all-zero fingerprints ('" + x.id() +
                          "', '" + y.id() + "') is undefined");
  }
  return detail::tanimoto_from_parts(static_cast<double>(detail::sparse_dot(x, y)),
                                     static_cast<double>(x.squared_norm()),
                                     static_cast<double>(y.squared_norm()));
}

struct NearestReference {
  std::string query_id;
  double max_sim = 0.0;
  std::string reference_id;  // smallest id among those attaining max_sim
};

struct BlockOptions {
  std::size_t block = 1024;  // queries and references per panel
  unsigned threads = 1;      // 0 = hardware concurrency
};

namespace detail {

inline std::size_t uniform_dim(std::span<const CountFingerprint> a,
                               std::span<const CountFingerprint> b) {
  const std::size_t dim = !a.empty() ? a.front().dim() : b.front().dim();
  for (auto set : {a, b}) {
    for (const auto& fp : set) {
      if (fp.dim() != dim) {
        throw ArgumentError("fingerprint '" + fp.id() + "' has dim " +
                            std::to_string(fp.dim()) + ", expected " +
                            std::to_string(dim));
      }
    }
  }
  return dim;
}

// Rows [first, first + count) scattered into a dense count panel.
inline void fill_panel(Matrix<double>& panel, std::span<const CountFingerprint> fps,
                       std::size_t first, std::size_t count) {
  std::fill(panel.flat().begin(), panel.flat().end(), 0.0);
  for (std::size_t r = 0; r < count; ++r) {
    auto row = panel.row(r);
    for (const auto& e : fps[first + r].entries()) row[e.index] = e.count;
  }
}

// Same as fill_panel but transposed: features x references.
inline void fill_panel_transposed(Matrix<double>& panel,
                                  std::span<const CountFingerprint> fps,
                                  std::size_t first, std::size_t count) {
  std::fill(panel.flat().begin(), panel.flat().end(), 0.0);
  for (std::size_t r = 0; r < count; ++r) {
    for (const auto& e : fps[first + r].entries()) panel(e.index, r) = e.count;
  }
}

// out(i, j) = sum_f q(i, f) * rt(f, j), for i < nq and j < nr.
inline void panel_product(const Matrix<double>& q, const Matrix<double>& rt,
                          std::size_t nq, std::size_t nr, Matrix<double>& out) {
  constexpr std::size_t kFeatureTile = 64;
  const std::size_t features = q.cols();
  std::fill(out.flat().begin(), out.flat().end(), 0.0);
  for (std::size_t f0 = 0; f0 < features; f0 += kFeatureTile) {
    const std::size_t f1 = std::min(features, f0 + kFeatureTile);
    for (std::size_t i = 0; i < nq; ++i) {
      double* dst = out.row(i).data();
      const double* qi = q.row(i).data();
      for (std::size_t f = f0; f < f1; ++f) {
        const double a = qi[f];
        if (a == 0.0) continue;
        const double* src = rt.row(f).data();
        for (std::size_t j = 0; j < nr; ++j) dst[j] += a * src[j];
      }
    }
  }
}

inline void better_match(NearestReference& best, double sim, const std::string& ref_id) {
  if (best.reference_id.empty() || sim > best.max_sim ||
      (sim == best.max_sim && ref_id < best.reference_id)) {
    best.max_sim = sim;
    best.reference_id = ref_id;
  }
}

}  // namespace detail

// For each query, the most similar reference. Exhaustive; panels of
// `opts.block` queries x `opts.block` references are multiplied densely.
inline std::vector<NearestReference> max_similarity(
    std::span<const CountFingerprint> queries, std::span<const CountFingerprint> references,
    BlockOptions opts = {}) {
  if (references.empty()) throw ArgumentError("reference set is empty");
  if (opts.block == 0) throw ArgumentError("block size must be positive");
  const std::size_t dim = detail::uniform_dim(queries, references);
  const std::size_t padded = std::bit_ceil(dim);
  const std::size_t block = opts.block;

  std::vector<NearestReference> result(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) result[q].query_id = queries[q].id();

  const std::size_t n_query_blocks = (queries.size() + block - 1) / block;
  auto run_query_block = [&](std::size_t qb) {
    const std::size_t q0 = qb * block;
    const std::size_t nq = std::min(block, queries.size() - q0);
    Matrix<double> q_panel(nq, padded);
    Matrix<double> r_panel(padded, std::min(block, references.size()));
    Matrix<double> dots(nq, r_panel.cols());
    detail::fill_panel(q_panel, queries, q0, nq);
    for (std::size_t r0 = 0; r0 < references.size(); r0 += block) {
      const std::size_t nr = std::min(block, references.size() - r0);
      detail::fill_panel_transposed(r_panel, references, r0, nr);
      detail::panel_product(q_panel, r_panel, nq, nr, dots);
      for (std::size_t i = 0; i < nq; ++i) {
        const auto& qfp = queries[q0 + i];
        const double nx = static_cast<double>(qfp.squared_norm());
        for (std::size_t j = 0; j < nr; ++j) {
          const auto& rfp = references[r0 + j];
          if (qfp.is_zero() && rfp.is_zero()) {
            throw DegeneracyError("similarity of two all-zero fingerprints ('" +
                                  qfp.id() + "', '" + rfp.id() + "') is undefined");
          }
          const double sim = detail::tanimoto_from_parts(
              dots(i, j), nx, static_cast<double>(rfp.squared_norm()));
          detail::better_match(result[q0 + i], sim, rfp.id());
        }
      }
    }
  };

  unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                       : opts.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_query_blocks));
  if (threads <= 1) {
    for (std::size_t qb = 0; qb < n_query_blocks; ++qb) run_query_block(qb);
    return result;
  }

  // Each worker owns a disjoint strided set of query blocks, so the result
  // does not depend on scheduling.
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t qb = t; qb < n_query_blocks; qb += threads) run_query_block(qb);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

// Ids of the queries whose best reference similarity is strictly below
// `threshold`, in input order.
inline std::vector<std::string> near_duplicate_filter(
    std::span<const CountFingerprint> queries, std::span<const CountFingerprint> references,
    double threshold, BlockOptions opts = {}) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ArgumentError("threshold must lie in (0, 1]");
  }
  std::vector<std::string> retained;
  for (const auto& hit : max_similarity(queries, references, opts)) {
    if (hit.max_sim < threshold) retained.push_back(hit.query_id);
  }
  return retained;
}

}  // namespace rankfuse
