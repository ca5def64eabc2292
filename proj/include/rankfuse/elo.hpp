#pragma once

// Bradley-Terry scores from pairwise preferences, ELO-style ratings and
// bootstrap intervals on predicted win rates.
//
//   P(i beats j) = exp(s_i) / (exp(s_i) + exp(s_j))
//   elo_i        = 400 * log10(e) * (s_i - s_anchor)

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rankfuse/errors.hpp"
#include "rankfuse/matrix.hpp"

namespace rankfuse {

enum class Winner { kA, kB };

struct ComparisonRecord {
  std::string source_a;
  std::string source_b;
  Winner winner;

  const std::string& winner_id() const { return winner == Winner::kA ? source_a : source_b; }
  const std::string& loser_id() const { return winner == Winner::kA ? source_b : source_a; }
};

// Raw Bradley-Terry scores, mean zero. Sources sorted by id.
struct BradleyTerryScores {
  std::vector<std::string> sources;
  std::vector<double> s;
  int iterations = 0;

  double score(const std::string& source) const {
    auto it = std::lower_bound(sources.begin(), sources.end(), source);
    if (it == sources.end() || *it != source) {
      throw ArgumentError("unknown source '" + source + "'");
    }
    return s[static_cast<std::size_t>(it - sources.begin())];
  }
};

struct Ratings {
  std::vector<std::string> sources;
  std::vector<double> scores;  // shifted so scores[anchor] == 0
  std::vector<double> elo;
  std::string anchor;

  std::size_t index_of(const std::string& source) const {
    auto it = std::lower_bound(sources.begin(), sources.end(), source);
    if (it == sources.end() || *it != source) {
      throw ArgumentError("unknown source '" + source + "'");
    }
    return static_cast<std::size_t>(it - sources.begin());
  }
};

inline constexpr double kEloScale = 400.0 * std::numbers::log10e;

struct BradleyTerryOptions {
  double tol = 1e-10;
  int max_iter = 10000;
};

namespace detail {

// Sorted source ids plus the win-count matrix wins(i, j) = #(i beat j).
struct WinTable {
  std::vector<std::string> sources;
  Matrix<double> wins;
};

inline WinTable tabulate(std::span<const ComparisonRecord> comparisons) {
  WinTable t;
  for (const auto& c : comparisons) {
    if (c.source_a == c.source_b) {
      throw DataError("comparison of source '" + c.source_a + "' with itself");
    }
    t.sources.push_back(c.source_a);
    t.sources.push_back(c.source_b);
  }
  std::sort(t.sources.begin(), t.sources.end());
  t.sources.erase(std::unique(t.sources.begin(), t.sources.end()), t.sources.end());
  const std::size_t n = t.sources.size();
  t.wins = Matrix<double>(n, n, 0.0);
  auto idx = [&](const std::string& s) {
    return static_cast<std::size_t>(
        std::lower_bound(t.sources.begin(), t.sources.end(), s) - t.sources.begin());
  };
  for (const auto& c : comparisons) t.wins(idx(c.winner_id()), idx(c.loser_id())) += 1.0;
  return t;
}

// Sources reachable from `start` following edges i -> j whenever
// `edge(i, j)` holds.
template <typename Edge>
std::vector<bool> reachable(std::size_t n, std::size_t start, Edge edge) {
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < n; ++j) {
      if (!seen[j] && edge(i, j)) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

// The likelihood has a finite maximizer iff the "beat" graph is strongly
// connected. Reports the simplest explanation available.
inline void check_identifiable(const WinTable& t) {
  const std::size_t n = t.sources.size();
  if (n < 2) throw DegeneracyError("need comparisons between at least two sources");
  for (std::size_t i = 0; i < n; ++i) {
    double w = 0.0;
    double l = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      w += t.wins(i, j);
      l += t.wins(j, i);
    }
    if (w == 0.0) throw DegeneracyError("source '" + t.sources[i] + "' never wins");
    if (l == 0.0) throw DegeneracyError("source '" + t.sources[i] + "' never loses");
  }
  const auto undirected = reachable(n, 0, [&](std::size_t i, std::size_t j) {
    return t.wins(i, j) + t.wins(j, i) > 0.0;
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!undirected[i]) {
      throw DegeneracyError("source '" + t.sources[i] +
                            "' is not connected to '" + t.sources[0] +
                            "' through any comparison");
    }
  }
  const auto forward = reachable(n, 0, [&](std::size_t i, std::size_t j) {
    return t.wins(i, j) > 0.0;
  });
  const auto backward = reachable(n, 0, [&](std::size_t i, std::size_t j) {
    return t.wins(j, i) > 0.0;
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!forward[i] || !backward[i]) {
      throw DegeneracyError("source '" + t.sources[i] +
                            "' is strictly separated from '" + t.sources[0] +
                            "' (one side always wins); scores diverge");
    }
  }
}

// Minorization-maximization (Zermelo) iterations on gamma_i = exp(s_i).
inline BradleyTerryScores fit_table(const WinTable& t, const BradleyTerryOptions& opts) {
  check_identifiable(t);
  const std::size_t n = t.sources.size();
  std::vector<double> total_wins(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) total_wins[i] += t.wins(i, j);
  }

  std::vector<double> s(n, 0.0);
  std::vector<double> gamma(n, 1.0);
  std::vector<double> next(n);
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double denom = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double games = t.wins(i, j) + t.wins(j, i);
        if (games > 0.0) denom += games / (gamma[i] + gamma[j]);
      }
      next[i] = std::log(total_wins[i] / denom);
    }
    double mean = 0.0;
    for (double v : next) mean += v;
    mean /= static_cast<double>(n);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] -= mean;
      change = std::max(change, std::abs(next[i] - s[i]));
      s[i] = next[i];
      gamma[i] = std::exp(s[i]);
    }
    if (change < opts.tol) return {t.sources, s, iter};
  }
  throw DegeneracyError("Bradley-Terry fit did not converge within " +
                        std::to_string(opts.max_iter) + " iterations");
}

}  // namespace detail

// Maximum-likelihood Bradley-Terry scores, normalized to mean zero.
inline BradleyTerryScores fit_bradley_terry(std::span<const ComparisonRecord> comparisons,
                                            BradleyTerryOptions opts = {}) {
  if (!(opts.tol > 0.0) || opts.max_iter <= 0) {
    throw ArgumentError("tolerance and iteration limit must be positive");
  }
  return detail::fit_table(detail::tabulate(comparisons), opts);
}

inline Ratings to_elo(const BradleyTerryScores& scores, const std::string& anchor) {
  auto it = std::lower_bound(scores.sources.begin(), scores.sources.end(), anchor);
  if (it == scores.sources.end() || *it != anchor) {
    throw ArgumentError("anchor source '" + anchor + "' has no score");
  }
  const double shift = scores.s[static_cast<std::size_t>(it - scores.sources.begin())];
  Ratings r{scores.sources, {}, {}, anchor};
  for (double v : scores.s) {
    r.scores.push_back(v - shift);
    r.elo.push_back(kEloScale * (v - shift));
  }
  return r;
}

inline double win_rate_from_elo(double elo_i, double elo_j) {
  return 1.0 / (1.0 + std::pow(10.0, -(elo_i - elo_j) / 400.0));
}

inline double predicted_win_rate(const Ratings& ratings, const std::string& i,
                                 const std::string& j) {
  return win_rate_from_elo(ratings.elo[ratings.index_of(i)], ratings.elo[ratings.index_of(j)]);
}

struct WinRateInterval {
  std::string source_i;
  std::string source_j;
  double estimate;  // from the full data
  double low;
  double high;
};

struct BootstrapOptions {
  std::size_t n_resamples = 10000;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  int max_redraws = 100;  // per resample, for degenerate draws
  BradleyTerryOptions fit;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Linear interpolation between order statistics ("type 7").
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.size() == 1) return sorted.front();
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

// Percentile bootstrap intervals for every unordered pair (i < j by id) of
// the predicted probability that i beats j. Each resample draws its own
// generator from (seed, resample, attempt), so results depend only on the
// seed.
inline std::vector<WinRateInterval> bootstrap_win_rate_ci(
    std::span<const ComparisonRecord> comparisons, const BootstrapOptions& opts) {
  if (opts.n_resamples == 0) throw ArgumentError("n_resamples must be positive");
  if (!(opts.confidence > 0.0 && opts.confidence < 1.0)) {
    throw ArgumentError("confidence must lie in (0, 1)");
  }
  const auto full_table = detail::tabulate(comparisons);
  const auto full = detail::fit_table(full_table, opts.fit);
  const std::size_t n = full.sources.size();
  const auto& sources = full.sources;
  auto index = [&](const std::string& s) {
    return static_cast<std::size_t>(
        std::lower_bound(sources.begin(), sources.end(), s) - sources.begin());
  };
  std::vector<std::pair<std::size_t, std::size_t>> outcomes;  // (winner, loser)
  outcomes.reserve(comparisons.size());
  for (const auto& c : comparisons) outcomes.emplace_back(index(c.winner_id()), index(c.loser_id()));

  const std::size_t n_pairs = n * (n - 1) / 2;
  std::vector<std::vector<double>> samples(n_pairs);
  for (auto& v : samples) v.reserve(opts.n_resamples);

  detail::WinTable table{sources, Matrix<double>(n, n)};
  for (std::size_t r = 0; r < opts.n_resamples; ++r) {
    BradleyTerryScores fitted;
    bool ok = false;
    for (int attempt = 0; attempt <= opts.max_redraws && !ok; ++attempt) {
      std::mt19937_64 gen(detail::splitmix64(
          opts.seed ^ detail::splitmix64(r * 1000003ULL + static_cast<std::uint64_t>(attempt))));
      std::fill(table.wins.flat().begin(), table.wins.flat().end(), 0.0);
      for (std::size_t d = 0; d < outcomes.size(); ++d) {
        const auto& [w, l] = outcomes[gen() % outcomes.size()];
        table.wins(w, l) += 1.0;
      }
      try {
        fitted = detail::fit_table(table, opts.fit);
        ok = true;
      } catch (const DegeneracyError&) {
      }
    }
    if (!ok) {
      throw DegeneracyError("bootstrap resample " + std::to_string(r) + " stayed degenerate after " +
                            std::to_string(opts.max_redraws) + " redraws");
    }
    std::size_t p = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j, ++p) {
        samples[p].push_back(win_rate_from_elo(kEloScale * fitted.s[i], kEloScale * fitted.s[j]));
      }
    }
  }

  const double alpha = 1.0 - opts.confidence;
  std::vector<WinRateInterval> out;
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      auto& v = samples[p];
      std::sort(v.begin(), v.end());
      out.push_back({sources[i], sources[j],
                     win_rate_from_elo(kEloScale * full.s[i], kEloScale * full.s[j]),
                     detail::quantile_sorted(v, alpha / 2.0),
                     detail::quantile_sorted(v, 1.0 - alpha / 2.0)});
    }
  }
  return out;
}

}  // namespace rankfuse
