#include "theseus/population.hpp"

#include <algorithm>
#include <stdexcept>

#include "theseus/rng.hpp"

namespace theseus {

std::size_t StrategyProfile::participant_count() const {
  std::size_t n = 0;
  for (const auto& s : strategies) {
    if (s.has_value()) ++n;
  }
  return n;
}

std::vector<std::size_t> StrategyProfile::participant_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    if (strategies[i].has_value()) out.push_back(i);
  }
  return out;
}

void CostBounds::validate() const {
  if (!(c1_lo > 0.0) || !(c1_hi >= c1_lo) || !(c2_lo > 0.0) ||
      !(c2_hi >= c2_lo)) {
    throw std::invalid_argument("cost bounds must satisfy 0 < lo <= hi");
  }
}

Population sample_population(std::size_t count, const QualityDistribution& dist,
                             Interval delta_hi_range,
                             const CostBounds& cost_bounds,
                             std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("population needs >= 1 worker");
  cost_bounds.validate();
  if (delta_hi_range.lo < dist.support_hi() ||
      delta_hi_range.hi < delta_hi_range.lo) {
    throw std::invalid_argument(
        "delta_hi range must sit at or above the quality distribution's "
        "support");
  }

  Rng rng(seed);
  Population workers;
  workers.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    WorkerProfile w;
    w.id = "w" + std::to_string(i);
    w.delta_lo = dist.quantile(rng.uniform01());
    w.delta_hi = rng.uniform(delta_hi_range.lo, delta_hi_range.hi);
    w.cost_slope = rng.uniform(cost_bounds.c1_lo, cost_bounds.c1_hi);
    w.cost_intercept = rng.uniform(cost_bounds.c2_lo, cost_bounds.c2_hi);
    // Sensing at the laziest level must not have negative cost.
    w.cost_intercept = std::max(w.cost_intercept, w.cost_slope * w.delta_hi);
    workers.push_back(std::move(w));
  }
  return workers;
}

DataMatrix generate_data(const Population& workers,
                         const StrategyProfile& profile,
                         const std::vector<double>& truths,
                         std::uint64_t seed) {
  if (profile.strategies.size() != workers.size()) {
    throw std::invalid_argument("strategy profile does not match population");
  }
  const auto participants = profile.participant_indices();
  if (participants.empty()) {
    throw std::runtime_error("every worker dropped out; no data to generate");
  }
  for (std::size_t idx : participants) {
    if (!(*profile.strategies[idx] >= 0.0)) {
      throw std::invalid_argument("noise levels must be non-negative");
    }
  }

  std::vector<std::string> ids;
  ids.reserve(participants.size());
  std::vector<double> values;
  values.reserve(participants.size() * truths.size());
  Rng rng(seed);
  for (std::size_t idx : participants) {
    const double delta = *profile.strategies[idx];
    ids.push_back(workers[idx].id);
    for (double truth : truths) {
      values.push_back(rng.normal(truth, delta));
    }
  }
  std::vector<std::string> tasks;
  tasks.reserve(truths.size());
  for (std::size_t t = 0; t < truths.size(); ++t) {
    tasks.push_back("t" + std::to_string(t));
  }
  return DataMatrix(std::move(ids), std::move(tasks), std::move(values));
}

double expected_utility(const WorkerProfile& worker, double delta,
                        const PerWorkerPayment& payment,
                        double ref_second_moment) {
  return expected_payment(payment.a, payment.b, delta, ref_second_moment) -
         worker.cost(delta);
}

StrategyProfile bne_profile_complete(const Population& workers,
                                     double delta_t) {
  StrategyProfile profile;
  profile.strategies.reserve(workers.size());
  for (const auto& w : workers) {
    if (w.delta_lo <= delta_t) {
      profile.strategies.emplace_back(w.delta_lo);
    } else {
      profile.strategies.emplace_back(std::nullopt);
    }
  }
  return profile;
}

StrategyProfile bne_profile_incomplete(const Population& workers,
                                       double delta_l, double delta_h,
                                       const PaymentParams& payments,
                                       const QualityDistribution& dist) {
  if (!(delta_l < delta_h)) {
    throw std::invalid_argument("requires delta_l < delta_h");
  }
  if (payments.workers.size() != workers.size()) {
    throw std::invalid_argument("payment params must cover every worker");
  }
  const double ref_moment = dist.truncated_second_moment(delta_h);
  StrategyProfile profile;
  profile.strategies.reserve(workers.size());
  for (std::size_t i = 0; i < workers.size(); ++i) {
    const auto& w = workers[i];
    if (w.delta_lo > delta_h) {
      profile.strategies.emplace_back(std::nullopt);
    } else if (w.delta_lo <= delta_l) {
      profile.strategies.emplace_back(w.delta_lo);
    } else if (expected_utility(w, w.delta_lo, payments.workers[i],
                                ref_moment) >= 0.0) {
      profile.strategies.emplace_back(w.delta_lo);
    } else {
      profile.strategies.emplace_back(std::nullopt);
    }
  }
  return profile;
}

}  // namespace theseus
