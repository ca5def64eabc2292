#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "rankfuse/synthgen.hpp"
#include "rankfuse/theta_learner.hpp"

namespace rankfuse::testing {

// Smallest |theta_ik/theta_jk - theta_i,k+1/theta_j,k+1| over all terms of
// the regularizer; finite differences are unreliable near zero.
inline double min_reg_term(const Matrix<double>& w) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.rows(); ++j) {
      if (i == j) continue;
      for (std::size_t k = 0; k + 1 < w.cols(); ++k) {
        best = std::min(best, std::abs(w(i, k) / w(j, k) - w(i, k + 1) / w(j, k + 1)));
      }
    }
  }
  return best;
}

struct GradientCase {
  PairTable table;
  Matrix<double> x;
  TrainConfig cfg;
  double T = 0.1;
};

// A random placement dataset and parameter point.
inline GradientCase random_gradient_case(std::uint64_t seed, std::size_t m, std::size_t k_max) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SynthConfig sc;
  sc.m = m;
  sc.k_max = k_max;
  sc.n_instances = 40;
  sc.pool_size = 2 * k_max;
  sc.rho = 0.3;
  sc.seed = seed;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> p(k_max + 1);
    double sum = 0.0;
    for (auto& v : p) sum += v = 0.1 + unit(gen);
    for (auto& v : p) v /= sum;
    p.back() = 1.0;
    for (std::size_t k = 0; k < k_max; ++k) p.back() -= p[k];
    sc.placement.push_back(p);
  }
  auto ds = gen_dataset(sc);

  GradientCase c;
  c.table = build_pair_table(ds.instances, k_max);
  c.cfg.w_reg = 0.2 + unit(gen);
  c.T = 0.5 + 2.0 * unit(gen);
  std::normal_distribution<double> normal(-1.0, 0.5);
  do {
    c.x = Matrix<double>(m, k_max);
    for (auto& v : c.x.flat()) v = normal(gen);
  } while (min_reg_term(param_to_weights(c.x)) < 1e-3);
  return c;
}

struct GradientCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

// Central differences with step h. The relative error of each component is
// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline GradientCheck check_gradient(const GradientCase& c, double h = 1e-5,
                                    double floor = 1e-6) {
  const auto analytic = total_loss_grad(c.x, c.table, c.cfg, c.T).grad;
  GradientCheck out;
  Matrix<double> x = c.x;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double orig = x.flat()[n];
    x.flat()[n] = orig + h;
    const double up = total_loss_grad(x, c.table, c.cfg, c.T).loss;
    x.flat()[n] = orig - h;
    const double down = total_loss_grad(x, c.table, c.cfg, c.T).loss;
    x.flat()[n] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.flat()[n];
    const double err = std::abs(a - numeric);
    out.max_abs_error = std::max(out.max_abs_error, err);
    out.max_rel_error =
        std::max(out.max_rel_error, err / std::max({std::abs(a), std::abs(numeric), floor}));
  }
  return out;
}

}  // namespace rankfuse::testing
