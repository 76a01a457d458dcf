#ifndef THESEUS_CALIBRATION_HPP
#define THESEUS_CALIBRATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "theseus/payment.hpp"
#include "theseus/population.hpp"
#include "theseus/quality_dist.hpp"

namespace theseus {

struct GuaranteeTargets {
  double theta = 0.9;       // participation probability threshold, in (0,1)
  double alpha_ratio = 5.0; // approximation-ratio target, > 1
  double beta = 0.1;        // ratio-violation probability, in (0,1)

  void validate() const;
};

// Threshold below which the payment slope keeps participation attractive for
// at least one worker with probability >= theta:
// quantile(1 - (1 - theta)^(1/S)).
double participation_lower_bound(const QualityDistribution& dist,
                                 std::size_t worker_count, double theta);

struct ApproxBoundResult {
  std::optional<double> value;  // nullopt: g has no sign change in the support
  double g_lo = 0.0;            // g just above the support lower end
  double g_hi = 0.0;            // g at the support upper end

  bool has_solution() const { return value.has_value(); }
};

// Root of g(D) = D + sqrt(-2 / (S ln beta)) (R(D) S - support_lo * alpha),
// found by bisection to 1e-9; g is increasing, so a missing sign change means
// no solution in the support (reported, not an error).
ApproxBoundResult approx_upper_bound(const QualityDistribution& dist,
                                     std::size_t worker_count,
                                     const GuaranteeTargets& targets);

struct ConditionVerdict {
  std::string condition;   // e.g. "slope_floor", "budget"
  bool satisfied = false;  // with 1e-9 numeric slack
  double margin = 0.0;     // worst-case slack; negative when violated
};

struct ParamGenResult {
  std::optional<PaymentParams> params;  // nullopt: infeasible
  double min_budget = 0.0;              // smallest budget that would work
  std::string reason;                   // diagnostics when infeasible
};

struct ParamGenOptions {
  // When set, the slope is sampled from [minimum, 2 * minimum) per worker
  // instead of pinned at the minimum (the deterministic default).
  std::optional<std::uint64_t> sample_seed;
};

// Complete information scenario: slope at the floor c1 / (2 support_lo),
// intercept pinned by the zero-utility calibration at delta_t, then the
// budget check. delta_t must lie in (support_lo, support_hi].
ParamGenResult generate_complete_params(const Population& workers,
                                        double delta_t,
                                        const QualityDistribution& dist,
                                        double budget,
                                        const ParamGenOptions& options = {});

// Incomplete information scenario: one uniform slope, raised where needed so
// the admissible intercept interval is non-empty, intercept at the interval's
// lower end, then the budget check.
ParamGenResult generate_incomplete_params(std::size_t worker_count,
                                          const CostBounds& cost_bounds,
                                          double delta_l, double delta_h,
                                          const QualityDistribution& dist,
                                          double budget,
                                          const ParamGenOptions& options = {});

std::vector<ConditionVerdict> check_conditions_complete(
    const PaymentParams& params, const Population& workers, double delta_t,
    const QualityDistribution& dist);

std::vector<ConditionVerdict> check_conditions_incomplete(
    const PaymentParams& params, const CostBounds& cost_bounds, double delta_l,
    double delta_h, const QualityDistribution& dist);

enum class ThresholdFallback {
  None,           // upper bound exists and the interval is non-empty
  NoSolution,     // ratio-bound root absent; thresholds capped at support_hi
  IntervalEmpty,  // root exists but below the participation lower bound
};

struct CalibrationReport {
  std::string scenario;  // "complete" | "incomplete"
  double delta_lower = 0.0;
  ApproxBoundResult delta_upper;
  ThresholdFallback fallback = ThresholdFallback::None;
  bool ratio_guarantee = false;  // thresholds within the proven interval
  std::optional<double> delta_t;              // complete
  std::optional<double> delta_l, delta_h;     // incomplete
  bool feasible = false;
  std::optional<PaymentParams> params;
  double min_budget = 0.0;
  std::string infeasible_reason;
  std::vector<ConditionVerdict> verdicts;
  double budget_slack = 0.0;  // B + sum 2 a lo^2 - sum b

  std::string to_json(const std::vector<std::string>& worker_ids = {}) const;
};

// Full calibration passes: thresholds drawn uniformly from the feasible
// interval (falling back to [lower, support_hi] when the ratio bound is
// unavailable), parameters generated, all conditions checked.
CalibrationReport calibrate_complete(const Population& workers,
                                     const QualityDistribution& dist,
                                     const GuaranteeTargets& targets,
                                     double budget, std::uint64_t seed);

CalibrationReport calibrate_incomplete(std::size_t worker_count,
                                       const CostBounds& cost_bounds,
                                       const QualityDistribution& dist,
                                       const GuaranteeTargets& targets,
                                       double budget, std::uint64_t seed);

}  // namespace theseus

#endif  // THESEUS_CALIBRATION_HPP
