#pragma once

// Learning fusion weights from a validation set.
//
// The weights of model i are parameterized as
//
//   theta_i = flip(cumsum(cumsum(exp(x_i))))
//
// which makes every row strictly positive, strictly decreasing and strictly
// convex for any finite x. The objective is
//
//   L(x) = L_rank(theta) + w_reg * L_reg(theta)
//
//   L_rank = mean over instances of  sum_{r-} sigmoid((s(r-) - s(r+) + eps) / T)
//   L_reg  = 1/(m(m-1)) sum_{i != j} 1/(K-1) sum_k |t_ik/t_jk - t_i,k+1/t_j,k+1|
//
// and is minimized with full-batch Adam while the learning rate and T are
// annealed together.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rankfuse/errors.hpp"
#include "rankfuse/matrix.hpp"
#include "rankfuse/ranklist.hpp"

namespace rankfuse {

// Unconstrained parameters; one row per model.
struct FreeParams {
  std::vector<std::string> model_ids;
  Matrix<double> x;

  static FreeParams zeros(std::vector<std::string> model_ids, std::size_t k_max) {
    const std::size_t m = model_ids.size();
    return {std::move(model_ids), Matrix<double>(m, k_max, 0.0)};
  }
};

enum class ScheduleKind { kGeometric, kLinear };

inline std::optional<ScheduleKind> parse_schedule_kind(std::string_view s) {
  if (s == "geometric") return ScheduleKind::kGeometric;
  if (s == "linear") return ScheduleKind::kLinear;
  return std::nullopt;
}

inline const char* to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kGeometric ? "geometric" : "linear";
}

struct TrainConfig {
  int steps = 1000;
  double lr0 = 0.1;
  double T0 = 0.1;
  double decay_factor = 0.9;
  int decay_every = 25;
  double epsilon_margin = 1e-4;
  double w_reg = 0.2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  ScheduleKind schedule_kind = ScheduleKind::kGeometric;

  void validate() const {
    if (steps <= 0) throw ArgumentError("steps must be positive");
    if (!(lr0 > 0.0)) throw ArgumentError("lr0 must be positive");
    if (!(T0 > 0.0)) throw ArgumentError("T0 must be positive");
    if (!(decay_factor > 0.0 && decay_factor < 1.0)) {
      throw ArgumentError("decay_factor must lie in (0, 1)");
    }
    if (decay_every <= 0) throw ArgumentError("decay_every must be positive");
    if (!(w_reg >= 0.0)) throw ArgumentError("w_reg must be non-negative");
    if (!(epsilon_margin >= 0.0)) throw ArgumentError("epsilon_margin must be non-negative");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
        !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
      throw ArgumentError("Adam betas must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw ArgumentError("adam_eps must be positive");
  }
};

// Linear annealing never lets T reach zero.
inline constexpr double kMinTemperature = 1e-6;

struct ScheduleValues {
  double lr;
  double temperature;
};

inline ScheduleValues schedule_at(const TrainConfig& cfg, int step) {
  if (cfg.schedule_kind == ScheduleKind::kGeometric) {
    const double factor = std::pow(cfg.decay_factor, step / cfg.decay_every);
    return {cfg.lr0 * factor, cfg.T0 * factor};
  }
  const double remaining =
      1.0 - static_cast<double>(step) / static_cast<double>(cfg.steps);
  return {cfg.lr0 * remaining, std::max(cfg.T0 * remaining, kMinTemperature)};
}

// ---------------------------------------------------------------------------
// Parameterization

inline Matrix<double> param_to_weights(const Matrix<double>& x) {
  Matrix<double> w(x.rows(), x.cols());
  const std::size_t K = x.cols();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double c1 = 0.0;
    double c2 = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      c1 += std::exp(x(i, j));
      c2 += c1;
      w(i, K - 1 - j) = c2;
    }
  }
  return w;
}

inline ThetaMatrix param_to_theta(const FreeParams& params) {
  if (params.model_ids.size() != params.x.rows()) {
    throw ArgumentError("free parameters have " + std::to_string(params.x.rows()) +
                        " rows but " + std::to_string(params.model_ids.size()) +
                        " model ids");
  }
  return ThetaMatrix::unchecked(params.model_ids, param_to_weights(params.x));
}

// Pulls dL/dtheta back to dL/dx through flip, both prefix sums and exp.
inline Matrix<double> weights_grad_to_param_grad(const Matrix<double>& x,
                                                 const Matrix<double>& dtheta) {
  Matrix<double> dx(x.rows(), x.cols());
  const std::size_t K = x.cols();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    // dL/dc2[j] = dtheta[K-1-j]; the adjoint of a prefix sum is a suffix sum.
    double dc1 = 0.0;
    double de = 0.0;
    for (std::size_t jj = K; jj-- > 0;) {
      dc1 += dtheta(i, K - 1 - jj);
      de += dc1;
      dx(i, jj) = de * std::exp(x(i, jj));
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Pair table

// 0-based rank, or kAbsentRank when the key is not in a model's top k_max.
inline constexpr std::int32_t kAbsentRank = std::numeric_limits<std::int32_t>::max();

enum class PairOrder { kPositiveFirst, kNegativeFirst, kUndetermined };

// Order of (r+, r-) shared by every row-wise decreasing theta, if any.
inline PairOrder classify_pair(std::span<const std::int32_t> positive,
                               std::span<const std::int32_t> negative) {
  bool pos_le = true;
  bool pos_ge = true;
  for (std::size_t i = 0; i < positive.size(); ++i) {
    pos_le = pos_le && positive[i] <= negative[i];
    pos_ge = pos_ge && positive[i] >= negative[i];
  }
  if (pos_le) return PairOrder::kPositiveFirst;
  if (pos_ge) return PairOrder::kNegativeFirst;
  return PairOrder::kUndetermined;
}

inline std::vector<std::int32_t> ranks_of(const EnsembleInstance& instance,
                                          const PredictionKey& key,
                                          std::size_t k_max) {
  std::vector<std::int32_t> ranks(instance.outputs.size(), kAbsentRank);
  for (std::size_t i = 0; i < instance.outputs.size(); ++i) {
    const auto& preds = instance.outputs[i].predictions;
    const std::size_t depth = std::min(preds.size(), k_max);
    for (std::size_t k = 0; k < depth; ++k) {
      if (preds[k] == key) {
        ranks[i] = static_cast<std::int32_t>(k);
        break;
      }
    }
  }
  return ranks;
}

// One (ground truth, wrong prediction) pair before filtering.
struct CandidatePair {
  std::size_t instance;
  PredictionKey negative;
  std::vector<std::int32_t> positive_ranks;
  std::vector<std::int32_t> negative_ranks;
  PairOrder order;
};

// Every (r+, r-) pair where r- is any distinct key in some model's top k_max.
// Negatives are listed in order of first appearance (model-major, rank-minor).
inline std::vector<CandidatePair> enumerate_pairs(
    std::span<const EnsembleInstance> dataset, std::size_t k_max) {
  std::vector<CandidatePair> pairs;
  for (std::size_t n = 0; n < dataset.size(); ++n) {
    const auto& inst = dataset[n];
    const auto positive = ranks_of(inst, inst.ground_truth, k_max);
    std::unordered_set<std::string_view> seen;
    for (const auto& out : inst.outputs) {
      const std::size_t depth = std::min(out.predictions.size(), k_max);
      for (std::size_t k = 0; k < depth; ++k) {
        const auto& key = out.predictions[k];
        if (key == inst.ground_truth || !seen.insert(key.str()).second) continue;
        auto negative = ranks_of(inst, key, k_max);
        const auto order = classify_pair(positive, negative);
        pairs.push_back({n, key, positive, std::move(negative), order});
      }
    }
  }
  return pairs;
}

// Rank tensor of the pairs whose order actually depends on theta.
struct PairTable {
  std::size_t num_models = 0;
  std::size_t k_max = 0;
  std::vector<std::int32_t> positive_ranks;     // num_instances x num_models
  std::vector<std::size_t> negative_offsets{0};  // num_instances + 1
  std::vector<std::int32_t> negative_ranks;     // num_pairs x num_models
  std::vector<std::size_t> source_instance;     // index into the dataset
  std::size_t skipped_pairs = 0;
  std::size_t dropped_instances = 0;

  std::size_t num_instances() const { return source_instance.size(); }
  std::size_t num_pairs() const { return negative_offsets.back(); }
  bool empty() const { return num_pairs() == 0; }

  std::span<const std::int32_t> positive(std::size_t n) const {
    return {positive_ranks.data() + n * num_models, num_models};
  }
  std::span<const std::int32_t> negative(std::size_t pair) const {
    return {negative_ranks.data() + pair * num_models, num_models};
  }
};

inline PairTable build_pair_table(std::span<const EnsembleInstance> dataset,
                                  std::size_t k_max) {
  if (dataset.empty()) throw ArgumentError("cannot build pairs from an empty dataset");
  if (k_max == 0) throw ArgumentError("k_max must be positive");
  const auto ids = consistent_model_ids(dataset);

  PairTable table;
  table.num_models = ids.size();
  table.k_max = k_max;

  const auto pairs = enumerate_pairs(dataset, k_max);
  std::size_t p = 0;
  for (std::size_t n = 0; n < dataset.size(); ++n) {
    std::size_t kept = 0;
    const std::vector<std::int32_t>* positive = nullptr;
    for (; p < pairs.size() && pairs[p].instance == n; ++p) {
      if (pairs[p].order != PairOrder::kUndetermined) {
        ++table.skipped_pairs;
        continue;
      }
      positive = &pairs[p].positive_ranks;
      table.negative_ranks.insert(table.negative_ranks.end(),
                                  pairs[p].negative_ranks.begin(),
                                  pairs[p].negative_ranks.end());
      ++kept;
    }
    if (kept == 0) {
      ++table.dropped_instances;
      continue;
    }
    table.positive_ranks.insert(table.positive_ranks.end(), positive->begin(),
                                positive->end());
    table.negative_offsets.push_back(table.negative_offsets.back() + kept);
    table.source_instance.push_back(n);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Losses

namespace detail {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double table_score(const Matrix<double>& w, std::span<const std::int32_t> ranks) {
  double s = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] != kAbsentRank && static_cast<std::size_t>(ranks[i]) < w.cols()) {
      s += w(i, static_cast<std::size_t>(ranks[i]));
    }
  }
  return s;
}

inline void add_slot_grad(Matrix<double>& g, std::span<const std::int32_t> ranks,
                          double value) {
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] != kAbsentRank && static_cast<std::size_t>(ranks[i]) < g.cols()) {
      g(i, static_cast<std::size_t>(ranks[i])) += value;
    }
  }
}

// Ranking loss, optionally accumulating dL/dtheta into `grad`.
inline double rank_loss_impl(const Matrix<double>& w, const PairTable& table,
                             double T, double eps, Matrix<double>* grad) {
  if (!(T > 0.0)) throw ArgumentError("temperature must be positive");
  if (table.num_instances() == 0) return 0.0;
  if (w.rows() != table.num_models) {
    throw ConfigError("theta has " + std::to_string(w.rows()) +
                      " models but the pair table has " +
                      std::to_string(table.num_models));
  }
  const double inv_n = 1.0 / static_cast<double>(table.num_instances());
  double total = 0.0;
  for (std::size_t n = 0; n < table.num_instances(); ++n) {
    const auto positive = table.positive(n);
    const double s_pos = table_score(w, positive);
    double instance_loss = 0.0;
    double d_pos = 0.0;
    for (std::size_t p = table.negative_offsets[n]; p < table.negative_offsets[n + 1]; ++p) {
      const auto negative = table.negative(p);
      const double z = (table_score(w, negative) - s_pos + eps) / T;
      const double sig = sigmoid(z);
      instance_loss += sig;
      if (grad != nullptr) {
        const double d = sig * (1.0 - sig) / T * inv_n;
        add_slot_grad(*grad, negative, d);
        d_pos -= d;
      }
    }
    if (grad != nullptr) add_slot_grad(*grad, positive, d_pos);
    total += instance_loss;
  }
  return total * inv_n;
}

inline double sign(double u) { return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0); }

inline double reg_loss_impl(const Matrix<double>& w, Matrix<double>* grad,
                            double scale = 1.0) {
  const std::size_t m = w.rows();
  const std::size_t K = w.cols();
  if (m < 2 || K < 2) return 0.0;
  const double norm = 1.0 / (static_cast<double>(m * (m - 1)) * static_cast<double>(K - 1));
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      for (std::size_t k = 0; k + 1 < K; ++k) {
        const double u = w(i, k) / w(j, k) - w(i, k + 1) / w(j, k + 1);
        total += std::abs(u);
        if (grad != nullptr) {
          const double g = sign(u) * norm * scale;
          if (g == 0.0) continue;
          (*grad)(i, k) += g / w(j, k);
          (*grad)(j, k) -= g * w(i, k) / (w(j, k) * w(j, k));
          (*grad)(i, k + 1) -= g / w(j, k + 1);
          (*grad)(j, k + 1) += g * w(i, k + 1) / (w(j, k + 1) * w(j, k + 1));
        }
      }
    }
  }
  return total * norm;
}

}  // namespace detail

inline double rank_loss(const ThetaMatrix& theta, const PairTable& table, double T,
                        double epsilon_margin) {
  return detail::rank_loss_impl(theta.weights(), table, T, epsilon_margin, nullptr);
}

// Zero for a single model.
inline double reg_loss(const ThetaMatrix& theta) {
  return detail::reg_loss_impl(theta.weights(), nullptr);
}

struct LossAndGrad {
  double loss = 0.0;
  double rank = 0.0;
  double reg = 0.0;
  Matrix<double> grad;
};

// Objective and its exact gradient w.r.t. the free parameters. The
// subgradient of |u| at u = 0 is taken to be 0.
inline LossAndGrad total_loss_grad(const Matrix<double>& x, const PairTable& table,
                                   const TrainConfig& cfg, double T) {
  if (!(T > 0.0)) throw ArgumentError("temperature must be positive");
  const auto w = param_to_weights(x);
  Matrix<double> dtheta(w.rows(), w.cols(), 0.0);
  LossAndGrad out;
  out.rank = detail::rank_loss_impl(w, table, T, cfg.epsilon_margin, &dtheta);
  out.reg = cfg.w_reg > 0.0 ? detail::reg_loss_impl(w, &dtheta, cfg.w_reg) : 0.0;
  out.loss = out.rank + cfg.w_reg * out.reg;
  out.grad = weights_grad_to_param_grad(x, dtheta);
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer

namespace detail {

class Adam {
 public:
  Adam(std::size_t n, double beta1, double beta2, double eps)
      : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::span<double> params, std::span<const double> grad, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      const double m_hat = m_[i] / bc1;
      const double v_hat = v_[i] / bc2;
      params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  double beta1_;
  double beta2_;
  double eps_;
  int t_ = 0;
};

}  // namespace detail

struct TrainLogEntry {
  int step;
  double lr;
  double temperature;
  double loss;
};

enum class FitStatus { kOk, kEmptyPairTable };

struct FitResult {
  ThetaMatrix theta;
  FreeParams params;
  FitStatus status = FitStatus::kOk;
  std::vector<TrainLogEntry> log;
  std::size_t num_instances = 0;  // instances that kept at least one pair
  std::size_t num_pairs = 0;
  std::size_t skipped_pairs = 0;
};

// Full-batch Adam on a prebuilt pair table.
inline FitResult fit_table(const PairTable& table, std::vector<std::string> model_ids,
                           const TrainConfig& cfg,
                           std::optional<FreeParams> init = std::nullopt) {
  cfg.validate();
  if (model_ids.size() != table.num_models) {
    throw ConfigError("pair table has " + std::to_string(table.num_models) +
                      " models but " + std::to_string(model_ids.size()) +
                      " model ids were given");
  }
  FreeParams params = init ? std::move(*init)
                           : FreeParams::zeros(model_ids, table.k_max);
  if (params.x.rows() != table.num_models || params.x.cols() != table.k_max) {
    throw ArgumentError("initial parameters must be " +
                        std::to_string(table.num_models) + " x " +
                        std::to_string(table.k_max));
  }
  params.model_ids = std::move(model_ids);

  FitResult result{param_to_theta(params), params, FitStatus::kOk, {}};
  result.num_instances = table.num_instances();
  result.num_pairs = table.num_pairs();
  result.skipped_pairs = table.skipped_pairs;
  if (table.empty()) {
    result.status = FitStatus::kEmptyPairTable;
    return result;
  }

  detail::Adam adam(params.x.size(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  result.log.reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    const auto sched = schedule_at(cfg, step);
    const auto lg = total_loss_grad(params.x, table, cfg, sched.temperature);
    result.log.push_back({step, sched.lr, sched.temperature, lg.loss});
    adam.step(params.x.flat(), lg.grad.flat(), sched.lr);
  }
  result.theta = param_to_theta(params);
  result.params = std::move(params);
  return result;
}

// Learns theta from a validation set. Deterministic given its inputs.
inline FitResult fit(std::span<const EnsembleInstance> dataset, std::size_t k_max,
                     const TrainConfig& cfg,
                     std::optional<FreeParams> init = std::nullopt) {
  cfg.validate();
  const auto table = build_pair_table(dataset, k_max);
  return fit_table(table, consistent_model_ids(dataset), cfg, std::move(init));
}

}  // namespace rankfuse
