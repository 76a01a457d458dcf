#ifndef THESEUS_POPULATION_HPP
#define THESEUS_POPULATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "theseus/data_matrix.hpp"
#include "theseus/payment.hpp"
#include "theseus/quality_dist.hpp"

namespace theseus {

struct WorkerProfile {
  std::string id;
  double delta_lo = 0.0;        // best achievable noise std, > 0
  double delta_hi = 0.0;        // worst, > delta_lo
  double cost_slope = 0.0;      // c1 > 0; cost is -c1 * delta + c2
  double cost_intercept = 0.0;  // c2 > 0, with c2 >= c1 * delta_hi

  double cost(double delta) const {
    return -cost_slope * delta + cost_intercept;
  }
};

using Population = std::vector<WorkerProfile>;

// A strategy is a noise level in the worker's range, or drop-out (nullopt).
using Strategy = std::optional<double>;

struct StrategyProfile {
  std::vector<Strategy> strategies;  // aligned by index with the population

  std::size_t participant_count() const;
  std::vector<std::size_t> participant_indices() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct CostBounds {
  double c1_lo = 0.0, c1_hi = 0.0;
  double c2_lo = 0.0, c2_hi = 0.0;

  void validate() const;  // 0 < lo <= hi for both coefficients
};

// Draws quality bounds and linear cost coefficients i.i.d.; the cost
// intercept is raised to c1 * delta_hi where needed so sensing cost stays
// non-negative over the whole range. delta_hi_range must start at or above
// the quality distribution's upper support end. Deterministic per seed.
Population sample_population(std::size_t count, const QualityDistribution& dist,
                             Interval delta_hi_range,
                             const CostBounds& cost_bounds, std::uint64_t seed);

// One Gaussian reading per (participating worker, task): truth + N(0, delta^2).
// Drop-outs are absent from the matrix. Throws when everyone drops out.
DataMatrix generate_data(const Population& workers,
                         const StrategyProfile& profile,
                         const std::vector<double>& truths, std::uint64_t seed);

// Closed-form expected utility of participating at the given noise level
// when the reference worker's conditional second moment is known:
// b - a (delta^2 + ref_second_moment) + c1 * delta - c2.
double expected_utility(const WorkerProfile& worker, double delta,
                        const PerWorkerPayment& payment,
                        double ref_second_moment);

// Equilibrium profile of the complete information scenario: participate at
// delta_lo when delta_lo <= delta_t (boundary inclusive), drop out otherwise.
StrategyProfile bne_profile_complete(const Population& workers, double delta_t);

// Incomplete information scenario: drop out above delta_h, participate at
// delta_lo at or below delta_l; in between, participate iff the closed-form
// expected utility against the A(delta_h) reference moment is non-negative.
StrategyProfile bne_profile_incomplete(const Population& workers,
                                       double delta_l, double delta_h,
                                       const PaymentParams& payments,
                                       const QualityDistribution& dist);

}  // namespace theseus

#endif  // THESEUS_POPULATION_HPP
