#include "theseus/truth_discovery.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "theseus/rng.hpp"

namespace theseus {

namespace {

// Runs f(i) for i in [0, n). The serial branch stays off the OpenMP runtime
// entirely, so calling it from inside an already-parallel trial loop costs
// nothing.
template <typename F>
void for_each_index(std::ptrdiff_t n, bool use_parallel, const F& f) {
  if (use_parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
  }
}

// Per-worker distance sums. Each entry is an independent serial sum, so the
// parallel schedule cannot change any value.
void distance_sums(const DataMatrix& data, const WeightRule& rule,
                   std::span<const double> truths, std::span<double> out,
                   bool use_parallel) {
  const auto S = static_cast<std::ptrdiff_t>(data.worker_count());
  const auto M = data.task_count();
  for_each_index(S, use_parallel, [&](std::ptrdiff_t w) {
    double sum = 0.0;
    for (std::size_t t = 0; t < M; ++t) {
      sum += rule.distance(data.at(static_cast<std::size_t>(w), t), truths[t]);
    }
    out[static_cast<std::size_t>(w)] = sum;
  });
}

// Per-task weighted means with a fixed weight-sum denominator.
void truth_update(const DataMatrix& data, std::span<const double> weights,
                  double weight_sum, std::span<double> out, bool use_parallel) {
  const auto M = static_cast<std::ptrdiff_t>(data.task_count());
  const auto S = data.worker_count();
  for_each_index(M, use_parallel, [&](std::ptrdiff_t t) {
    double num = 0.0;
    for (std::size_t w = 0; w < S; ++w) {
      num += weights[w] * data.at(w, static_cast<std::size_t>(t));
    }
    out[static_cast<std::size_t>(t)] = num / weight_sum;
  });
}

void unweighted_means(const DataMatrix& data, std::span<double> out,
                      bool use_parallel) {
  const auto M = static_cast<std::ptrdiff_t>(data.task_count());
  const auto S = data.worker_count();
  for_each_index(M, use_parallel, [&](std::ptrdiff_t t) {
    double sum = 0.0;
    for (std::size_t w = 0; w < S; ++w) {
      sum += data.at(w, static_cast<std::size_t>(t));
    }
    out[static_cast<std::size_t>(t)] = sum / static_cast<double>(S);
  });
}

}  // namespace

double CrhWeightRule::distance(double reading, double truth) const {
  const double d = reading - truth;
  return d * d;
}

void CrhWeightRule::weights(std::span<const double> distance_sums,
                            std::span<double> out) const {
  double total = 0.0;
  for (std::size_t s = 0; s < distance_sums.size(); ++s) {
    total += std::max(distance_sums[s], kFloor);
  }
  for (std::size_t s = 0; s < distance_sums.size(); ++s) {
    out[s] = std::log(total / std::max(distance_sums[s], kFloor));
  }
}

const WeightRule& crh_rule() {
  static const CrhWeightRule rule;
  return rule;
}

std::vector<double> crh_weights(const DataMatrix& data,
                                std::span<const double> truths) {
  if (truths.size() != data.task_count()) {
    throw std::runtime_error("truth estimates must cover every task");
  }
  std::vector<double> sums(data.worker_count());
  distance_sums(data, crh_rule(), truths, sums, false);
  std::vector<double> out(data.worker_count());
  crh_rule().weights(sums, out);
  for (double& w : out) w = std::max(w, 0.0);
  return out;
}

std::vector<double> weighted_truths(const DataMatrix& data,
                                    std::span<const double> weights) {
  if (weights.size() != data.worker_count()) {
    throw std::runtime_error("one weight per participant required");
  }
  double weight_sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::runtime_error("weights must be finite and non-negative");
    }
    weight_sum += w;
  }
  if (weight_sum <= 0.0) {
    throw std::runtime_error("all aggregation weights are zero");
  }
  std::vector<double> out(data.task_count());
  truth_update(data, weights, weight_sum, out, false);
  return out;
}

AggregationResult run_truth_discovery(const DataMatrix& data,
                                      const WeightRule& rule,
                                      const ConvergenceConfig& config,
                                      ExecutionMode mode) {
  if (data.worker_count() == 0) {
    throw std::runtime_error("aggregation requires at least one participant");
  }
  if (data.task_count() == 0) {
    throw std::runtime_error("aggregation requires at least one task");
  }
  const bool use_parallel = mode == ExecutionMode::Parallel;
  const std::size_t S = data.worker_count();
  const std::size_t M = data.task_count();

  AggregationResult result;
  result.truths.resize(M);
  if (config.init_seed) {
    Rng rng(*config.init_seed);
    for (std::size_t t = 0; t < M; ++t) {
      double lo = data.at(0, t);
      double hi = lo;
      for (std::size_t w = 1; w < S; ++w) {
        lo = std::min(lo, data.at(w, t));
        hi = std::max(hi, data.at(w, t));
      }
      result.truths[t] = rng.uniform(lo, hi);
    }
  } else {
    unweighted_means(data, result.truths, use_parallel);
  }

  std::vector<double> sums(S);
  result.weights.assign(S, 0.0);
  std::vector<double> next(M);

  for (int it = 1; it <= config.max_iterations; ++it) {
    distance_sums(data, rule, result.truths, sums, use_parallel);
    rule.weights(sums, result.weights);
    for (double& w : result.weights) {
      if (w < 0.0) {
        w = 0.0;
        result.weight_floor_hit = true;
      }
    }
    double weight_sum = 0.0;
    for (double w : result.weights) weight_sum += w;
    if (weight_sum > 0.0) {
      truth_update(data, result.weights, weight_sum, next, use_parallel);
    } else {
      // Degenerate all-zero weights (e.g. a single participant); keep the
      // estimate inside the convex hull via the unweighted mean.
      unweighted_means(data, next, use_parallel);
    }
    double diff = 0.0;
    for (std::size_t t = 0; t < M; ++t) {
      diff = std::max(diff, std::abs(next[t] - result.truths[t]));
    }
    result.truths.swap(next);
    result.iterations = it;
    if (diff < config.tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace theseus
