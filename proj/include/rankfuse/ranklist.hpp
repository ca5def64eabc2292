#pragma once

// Ranked prediction lists and count-based fusion.
//
// Every model contributes a per-rank weight theta(i, k) to each key it ranks
// at position k; keys are then ordered by their summed weight.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rankfuse/errors.hpp"
#include "rankfuse/matrix.hpp"

namespace rankfuse {

namespace detail {

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

}  // namespace detail

// Identity of one prediction (e.g. a canonical reactant-set string). Opaque;
// surrounding whitespace is not significant.
class PredictionKey {
 public:
  explicit PredictionKey(std::string_view text) : text_(detail::trim(text)) {
    if (text_.empty()) throw DataError("prediction key must be non-empty");
  }

  const std::string& str() const noexcept { return text_; }

  friend bool operator==(const PredictionKey&, const PredictionKey&) = default;
  friend auto operator<=>(const PredictionKey&, const PredictionKey&) = default;

 private:
  std::string text_;
};

struct PredictionKeyHash {
  std::size_t operator()(const PredictionKey& k) const noexcept {
    return std::hash<std::string>{}(k.str());
  }
};

// One model's ranked output for one input. Rank of predictions[j] is j + 1.
struct ModelOutput {
  std::string model_id;
  std::vector<PredictionKey> predictions;

  // Builds an output from raw keys: duplicates after the first occurrence are
  // dropped, then the list is cut to `limit` entries.
  static ModelOutput from_keys(std::string model_id,
                               std::span<const std::string> keys,
                               std::size_t limit = std::numeric_limits<std::size_t>::max()) {
    ModelOutput out{std::move(model_id), {}};
    std::unordered_set<std::string_view> seen;
    out.predictions.reserve(std::min(keys.size(), limit));
    for (const auto& raw : keys) {
      if (out.predictions.size() >= limit) break;
      PredictionKey key(raw);
      if (seen.contains(key.str())) continue;
      out.predictions.push_back(std::move(key));
      seen.insert(out.predictions.back().str());
    }
    return out;
  }

  // 0-based rank of `key`, if present.
  std::optional<std::size_t> rank_of(const PredictionKey& key) const {
    for (std::size_t j = 0; j < predictions.size(); ++j) {
      if (predictions[j] == key) return j;
    }
    return std::nullopt;
  }
};

struct EnsembleInstance {
  std::string input_id;
  PredictionKey ground_truth;
  std::vector<ModelOutput> outputs;  // one per model, in the dataset's order

  std::vector<std::string> model_ids() const {
    std::vector<std::string> ids;
    ids.reserve(outputs.size());
    for (const auto& o : outputs) ids.push_back(o.model_id);
    return ids;
  }
};

// Checks that every instance carries the same model sequence. Returns it.
inline std::vector<std::string> consistent_model_ids(
    std::span<const EnsembleInstance> dataset) {
  if (dataset.empty()) return {};
  auto ids = dataset.front().model_ids();
  for (const auto& inst : dataset) {
    if (inst.outputs.size() != ids.size()) {
      throw ConfigError("instance '" + inst.input_id + "' has " +
                        std::to_string(inst.outputs.size()) +
                        " model outputs, expected " + std::to_string(ids.size()));
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (inst.outputs[i].model_id != ids[i]) {
        throw ConfigError("instance '" + inst.input_id + "': model #" +
                          std::to_string(i) + " is '" + inst.outputs[i].model_id +
                          "', expected '" + ids[i] + "'");
      }
    }
  }
  return ids;
}

enum class Convexity { kStrict, kNonStrict };

// Returns an empty string when `w` (m x k_max) is strictly positive, strictly
// decreasing along each row and convex along each row; otherwise a
// description of the first violation.
inline std::string theta_violation(const Matrix<double>& w,
                                   Convexity convexity = Convexity::kNonStrict) {
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const auto row = w.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      const std::string where =
          "row " + std::to_string(i) + ", rank " + std::to_string(k + 1);
      if (!(row[k] > 0.0) || !std::isfinite(row[k])) {
        return where + ": weight must be finite and positive";
      }
      if (k + 1 < row.size() && !(row[k] > row[k + 1])) {
        return where + ": weights must be strictly decreasing";
      }
      if (k + 2 < row.size()) {
        const double d0 = row[k] - row[k + 1];
        const double d1 = row[k + 1] - row[k + 2];
        const bool ok = convexity == Convexity::kStrict ? d0 > d1 : d0 >= d1;
        if (!ok) return where + ": weights must be convex";
      }
    }
  }
  return {};
}

// m x k_max per-(model, rank) fusion weights.
class ThetaMatrix {
 public:
  // Validates positivity, strict decrease and (non-strict) convexity.
  ThetaMatrix(std::vector<std::string> model_ids, Matrix<double> weights)
      : model_ids_(std::move(model_ids)), weights_(std::move(weights)) {
    if (weights_.rows() != model_ids_.size()) {
      throw ArgumentError("theta has " + std::to_string(weights_.rows()) +
                          " rows but " + std::to_string(model_ids_.size()) +
                          " model ids");
    }
    if (weights_.cols() == 0) throw ArgumentError("theta k_max must be positive");
    if (auto why = theta_violation(weights_); !why.empty()) {
      throw ArgumentError("invalid theta: " + why);
    }
  }

  // For weights that are valid by construction but whose floating-point
  // rounding we do not want to re-litigate.
  static ThetaMatrix unchecked(std::vector<std::string> model_ids,
                               Matrix<double> weights) {
    ThetaMatrix t;
    t.model_ids_ = std::move(model_ids);
    t.weights_ = std::move(weights);
    return t;
  }

  const std::vector<std::string>& model_ids() const noexcept { return model_ids_; }
  std::size_t num_models() const noexcept { return weights_.rows(); }
  std::size_t k_max() const noexcept { return weights_.cols(); }
  const Matrix<double>& weights() const noexcept { return weights_; }
  double operator()(std::size_t model, std::size_t rank0) const {
    return weights_(model, rank0);
  }

  // Same weights with rows permuted to follow `order`. Throws ConfigError
  // naming the first model id that has no row.
  ThetaMatrix reordered(std::span<const std::string> order) const {
    Matrix<double> w(order.size(), k_max());
    for (std::size_t i = 0; i < order.size(); ++i) {
      auto it = std::find(model_ids_.begin(), model_ids_.end(), order[i]);
      if (it == model_ids_.end()) {
        throw ConfigError("theta has no weights for model '" + order[i] + "'");
      }
      const auto src = weights_.row(static_cast<std::size_t>(it - model_ids_.begin()));
      std::copy(src.begin(), src.end(), w.row(i).begin());
    }
    return unchecked({order.begin(), order.end()}, std::move(w));
  }

 private:
  ThetaMatrix() = default;

  std::vector<std::string> model_ids_;
  Matrix<double> weights_;
};

namespace detail {

inline void check_model_order(const EnsembleInstance& instance,
                              const ThetaMatrix& theta) {
  const auto& ids = theta.model_ids();
  if (instance.outputs.size() != ids.size()) {
    throw ConfigError("instance '" + instance.input_id + "' has " +
                      std::to_string(instance.outputs.size()) +
                      " models but theta has " + std::to_string(ids.size()));
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (instance.outputs[i].model_id != ids[i]) {
      throw ConfigError("model order mismatch at position " + std::to_string(i) +
                        ": instance has '" + instance.outputs[i].model_id +
                        "', theta has '" + ids[i] + "'");
    }
  }
}

}  // namespace detail

// Sum of theta(i, k) over every (model i, rank k <= k_max) slot holding `key`.
inline double score_prediction(const PredictionKey& key,
                               const EnsembleInstance& instance,
                               const ThetaMatrix& theta) {
  detail::check_model_order(instance, theta);
  double score = 0.0;
  for (std::size_t i = 0; i < instance.outputs.size(); ++i) {
    const auto& preds = instance.outputs[i].predictions;
    const std::size_t depth = std::min(preds.size(), theta.k_max());
    for (std::size_t k = 0; k < depth; ++k) {
      if (preds[k] == key) {
        score += theta(i, k);
        break;
      }
    }
  }
  return score;
}

struct ScoredKey {
  PredictionKey key;
  double score;
};

// Fuses the instance's lists into one ranking. Equal scores are ordered by
// best rank across models, then by the lowest model index holding that rank,
// then by key text.
inline std::vector<ScoredKey> merge(const EnsembleInstance& instance,
                                    const ThetaMatrix& theta,
                                    std::size_t output_limit) {
  if (output_limit == 0) throw ArgumentError("output_limit must be positive");
  detail::check_model_order(instance, theta);

  struct Candidate {
    const PredictionKey* key;
    double score = 0.0;
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    std::size_t best_model = std::numeric_limits<std::size_t>::max();
  };
  std::vector<Candidate> candidates;
  std::unordered_map<std::string_view, std::size_t> index;

  // Accumulate in model order so every score is summed exactly as in
  // score_prediction.
  for (std::size_t i = 0; i < instance.outputs.size(); ++i) {
    const auto& preds = instance.outputs[i].predictions;
    const std::size_t depth = std::min(preds.size(), theta.k_max());
    for (std::size_t k = 0; k < depth; ++k) {
      auto [it, inserted] = index.try_emplace(preds[k].str(), candidates.size());
      if (inserted) candidates.push_back({&preds[k]});
      auto& c = candidates[it->second];
      c.score += theta(i, k);
      if (k < c.best_rank) {
        c.best_rank = k;
        c.best_model = i;
      }
    }
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.best_rank != b.best_rank) return a.best_rank < b.best_rank;
              if (a.best_model != b.best_model) return a.best_model < b.best_model;
              return a.key->str() < b.key->str();
            });

  const std::size_t n = std::min(output_limit, candidates.size());
  std::vector<ScoredKey> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.push_back({*candidates[j].key, candidates[j].score});
  }
  return out;
}

enum class BaselineKind { kLinear, kReciprocal, kWeightedReciprocal };

inline std::optional<BaselineKind> parse_baseline_kind(std::string_view s) {
  if (s == "linear") return BaselineKind::kLinear;
  if (s == "reciprocal") return BaselineKind::kReciprocal;
  if (s == "weighted_reciprocal") return BaselineKind::kWeightedReciprocal;
  return std::nullopt;
}

// Hand-designed weighting schemes:
//   linear               theta(i, k) = k_max + 1 - k
//   reciprocal           theta(i, k) = 1 / k
//   weighted_reciprocal  theta(i, k) = c_i / k
// with k the 1-based rank.
inline ThetaMatrix baseline_theta(BaselineKind kind,
                                  std::vector<std::string> model_ids,
                                  std::size_t k_max,
                                  std::span<const double> weights = {}) {
  const std::size_t m = model_ids.size();
  if (m == 0) throw ArgumentError("baseline needs at least one model");
  if (k_max == 0) throw ArgumentError("k_max must be positive");
  if (kind == BaselineKind::kWeightedReciprocal) {
    if (weights.size() != m) {
      throw ArgumentError("weighted_reciprocal needs one weight per model (got " +
                          std::to_string(weights.size()) + ", expected " +
                          std::to_string(m) + ")");
    }
    for (double c : weights) {
      if (!(c > 0.0) || !std::isfinite(c)) {
        throw ArgumentError("weighted_reciprocal weights must be positive");
      }
    }
  }

  Matrix<double> w(m, k_max);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 1; k <= k_max; ++k) {
      double value = 0.0;
      switch (kind) {
        case BaselineKind::kLinear:
          value = static_cast<double>(k_max + 1 - k);
          break;
        case BaselineKind::kReciprocal:
          value = 1.0 / static_cast<double>(k);
          break;
        case BaselineKind::kWeightedReciprocal:
          value = weights[i] / static_cast<double>(k);
          break;
      }
      w(i, k - 1) = value;
    }
  }
  return ThetaMatrix(std::move(model_ids), std::move(w));
}

// Convenience overload with synthetic model ids "model_0", "model_1", ...
inline ThetaMatrix baseline_theta(BaselineKind kind, std::size_t m,
                                  std::size_t k_max,
                                  std::span<const double> weights = {}) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < m; ++i) ids.push_back("model_" + std::to_string(i));
  return baseline_theta(kind, std::move(ids), k_max, weights);
}

}  // namespace rankfuse
