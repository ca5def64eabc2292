#pragma once

// Seeded synthetic multi-model ranked-prediction datasets.
//
// Each instance has a pool of `pool_size + 1` candidate keys, one of which is
// the ground truth. Every model ranks `k_max` of them; where the ground truth
// lands (or whether it appears at all) is drawn from that model's placement
// distribution, and the remaining slots are filled with distractors from the
// shared pool so that wrong answers overlap across models.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rankfuse/errors.hpp"
#include "rankfuse/ranklist.hpp"

namespace rankfuse {

struct SynthConfig {
  std::vector<std::string> model_ids;  // defaults to model_0, model_1, ...
  std::size_t m = 2;
  std::size_t k_max = 10;
  std::size_t n_instances = 1000;
  // Per model: probability of the ground truth at rank 1..k_max, then absent.
  std::vector<std::vector<double>> placement;
  double rho = 0.0;            // coupling of the models' placement draws
  std::size_t pool_size = 0;   // distractors per instance; 0 = 5 * k_max
  std::uint64_t seed = 0;

  std::size_t effective_pool_size() const { return pool_size == 0 ? 5 * k_max : pool_size; }

  void validate() const {
    if (m == 0) throw ArgumentError("synthetic data needs at least one model");
    if (k_max == 0) throw ArgumentError("k_max must be positive");
    if (n_instances == 0) throw ArgumentError("n_instances must be positive");
    if (!model_ids.empty() && model_ids.size() != m) {
      throw ArgumentError("expected " + std::to_string(m) + " model ids");
    }
    if (placement.size() != m) {
      throw ArgumentError("expected one placement distribution per model");
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (placement[i].size() != k_max + 1) {
        throw ArgumentError("placement for model " + std::to_string(i) + " must have k_max + 1 = " +
                            std::to_string(k_max + 1) + " entries");
      }
      double sum = 0.0;
      for (double p : placement[i]) {
        if (!(p >= 0.0)) throw ArgumentError("placement probabilities must be non-negative");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw ArgumentError("placement for model " + std::to_string(i) + " sums to " +
                            std::to_string(sum) + ", expected 1");
      }
    }
    if (!(rho >= 0.0 && rho <= 1.0)) throw ArgumentError("rho must lie in [0, 1]");
    if (k_max > effective_pool_size()) {
      throw ArgumentError("k_max (" + std::to_string(k_max) + ") exceeds the distractor pool (" +
                          std::to_string(effective_pool_size()) + ")");
    }
  }
};

struct SynthDataset {
  std::string kind;
  std::vector<std::pair<std::string, double>> parameters;  // construction record
  std::vector<std::string> model_ids;
  std::vector<EnsembleInstance> instances;
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementations.
inline double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(std::mt19937_64& gen, std::size_t n) {
  return static_cast<std::size_t>(unit_uniform(gen) * static_cast<double>(n));
}

inline std::string pool_key(std::size_t instance, std::size_t j) {
  return "i" + std::to_string(instance) + ":" + std::to_string(j);
}

// A list of k_max keys with the ground truth at 0-based `truth_rank`
// (or nowhere when truth_rank >= k_max). Distractors are a uniform sample
// without replacement from the pool, excluding the ground truth.
inline ModelOutput synth_list(std::mt19937_64& gen, std::string model_id,
                              std::size_t instance, std::size_t pool_size,
                              std::size_t truth_index, std::size_t k_max,
                              std::size_t truth_rank) {
  std::vector<std::size_t> pool;
  pool.reserve(pool_size);
  for (std::size_t j = 0; j <= pool_size; ++j) {
    if (j != truth_index) pool.push_back(j);
  }
  const bool present = truth_rank < k_max;
  const std::size_t n_distractors = present ? k_max - 1 : k_max;
  for (std::size_t d = 0; d < n_distractors; ++d) {
    std::swap(pool[d], pool[d + uniform_index(gen, pool.size() - d)]);
  }
  ModelOutput out{std::move(model_id), {}};
  out.predictions.reserve(k_max);
  std::size_t next = 0;
  for (std::size_t k = 0; k < k_max; ++k) {
    const std::size_t j = (present && k == truth_rank) ? truth_index : pool[next++];
    out.predictions.emplace_back(pool_key(instance, j));
  }
  return out;
}

inline std::size_t inverse_cdf(std::span<const double> probs, double v) {
  double cdf = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    cdf += probs[c];
    if (v < cdf) return c;
  }
  // Rounding left v above the accumulated mass: last category with mass.
  for (std::size_t c = probs.size(); c-- > 0;) {
    if (probs[c] > 0.0) return c;
  }
  return probs.size() - 1;
}

inline std::vector<std::string> default_model_ids(std::size_t m) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < m; ++i) ids.push_back("model_" + std::to_string(i));
  return ids;
}

}  // namespace detail

// Per instance, each model i draws v_i ~ U[0,1); with probability rho it uses
// a single draw shared by all models instead. The ground-truth rank is the
// inverse CDF of placement[i] at v_i (last category = absent).
inline SynthDataset gen_dataset(const SynthConfig& cfg) {
  cfg.validate();
  const auto ids = cfg.model_ids.empty() ? detail::default_model_ids(cfg.m) : cfg.model_ids;
  const std::size_t pool = cfg.effective_pool_size();

  SynthDataset ds;
  ds.kind = "placement";
  ds.parameters = {{"m", static_cast<double>(cfg.m)},
                   {"k_max", static_cast<double>(cfg.k_max)},
                   {"n_instances", static_cast<double>(cfg.n_instances)},
                   {"rho", cfg.rho},
                   {"pool_size", static_cast<double>(pool)},
                   {"seed", static_cast<double>(cfg.seed)}};
  ds.model_ids = ids;
  ds.instances.reserve(cfg.n_instances);

  std::mt19937_64 gen(cfg.seed);
  for (std::size_t n = 0; n < cfg.n_instances; ++n) {
    const std::size_t truth_index = detail::uniform_index(gen, pool + 1);
    const double shared = detail::unit_uniform(gen);
    std::vector<ModelOutput> outputs;
    outputs.reserve(cfg.m);
    for (std::size_t i = 0; i < cfg.m; ++i) {
      const bool coupled = detail::unit_uniform(gen) < cfg.rho;
      const double own = detail::unit_uniform(gen);
      const double v = coupled ? shared : own;
      const std::size_t rank = detail::inverse_cdf(cfg.placement[i], v);
      outputs.push_back(detail::synth_list(gen, ids[i], n, pool, truth_index, cfg.k_max, rank));
    }
    ds.instances.push_back({"inst" + std::to_string(n),
                            PredictionKey(detail::pool_key(n, truth_index)),
                            std::move(outputs)});
  }
  return ds;
}

// Two models whose correct answers complement each other:
//   model_a: ground truth at rank 1 when u < 0.5, else absent;
//   model_b: ground truth uniformly at ranks 1-5 when 0.4 <= u < 0.9, else
//            absent;
// with one latent u ~ U[0,1) per instance. Each model alone covers half of
// the instances and the union covers 90%.
inline SynthDataset complementary_fixture(std::uint64_t seed) {
  constexpr std::size_t kModels = 2;
  constexpr std::size_t kMax = 10;
  constexpr std::size_t kInstances = 20000;
  constexpr std::size_t kPool = 5 * kMax;
  constexpr double kAUpper = 0.5;
  constexpr double kBLower = 0.4;
  constexpr double kBUpper = 0.9;
  constexpr std::size_t kBRanks = 5;

  SynthDataset ds;
  ds.kind = "complementary";
  ds.parameters = {{"m", static_cast<double>(kModels)},
                   {"k_max", static_cast<double>(kMax)},
                   {"n_instances", static_cast<double>(kInstances)},
                   {"pool_size", static_cast<double>(kPool)},
                   {"a_window_upper", kAUpper},
                   {"b_window_lower", kBLower},
                   {"b_window_upper", kBUpper},
                   {"b_max_rank", static_cast<double>(kBRanks)},
                   {"seed", static_cast<double>(seed)}};
  ds.model_ids = {"model_a", "model_b"};
  ds.instances.reserve(kInstances);

  std::mt19937_64 gen(seed);
  for (std::size_t n = 0; n < kInstances; ++n) {
    const std::size_t truth_index = detail::uniform_index(gen, kPool + 1);
    const double u = detail::unit_uniform(gen);
    const std::size_t b_rank = detail::uniform_index(gen, kBRanks);
    const std::size_t a_at = u < kAUpper ? 0 : kMax;
    const std::size_t b_at = (u >= kBLower && u < kBUpper) ? b_rank : kMax;
    std::vector<ModelOutput> outputs;
    outputs.push_back(detail::synth_list(gen, ds.model_ids[0], n, kPool, truth_index, kMax, a_at));
    outputs.push_back(detail::synth_list(gen, ds.model_ids[1], n, kPool, truth_index, kMax, b_at));
    ds.instances.push_back({"inst" + std::to_string(n),
                            PredictionKey(detail::pool_key(n, truth_index)),
                            std::move(outputs)});
  }
  return ds;
}

}  // namespace rankfuse
