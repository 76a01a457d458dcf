#ifndef THESEUS_METRICS_HPP
#define THESEUS_METRICS_HPP

#include <optional>
#include <span>
#include <vector>

namespace theseus {

struct TrialReport {
  std::optional<double> mae;  // absent when no worker participated
  std::optional<double> total_payment;
  std::vector<double> realized_utilities;  // per worker, 0 for drop-outs
  std::size_t participant_count = 0;
  double app = 0.0;  // sum of participating strategies
  double opt = 0.0;  // min delta_lo over all workers
  std::optional<bool> ir_pass;
  std::optional<bool> budget_pass;
  bool ratio_guarantee = true;
  bool calibration_infeasible = false;
};

// Mean absolute deviation between estimates and ground truths.
double mae(std::span<const double> estimates, std::span<const double> truths);

struct ErrorBound {
  double raw = 0.0;     // sqrt(2/pi) * sum(delta) / alpha
  double capped = 0.0;  // min(raw, 1)
};

ErrorBound analytic_error_bound(std::span<const double> participant_deltas,
                         double alpha_err);

// Empirical Pr(MAE >= alpha) over a batch of trials.
double error_probability_estimate(std::span<const double> trial_maes,
                                  double alpha_err);

struct Verdict {
  bool pass = false;
  double margin = 0.0;  // worst slack; negative when failing
};

// Individual rationality: every participant's expected utility >= -1e-9.
// Vacuously passes on an empty participant set.
Verdict verify_ir(std::span<const double> expected_utilities);

// Budget feasibility: expected total payment <= budget + 1e-9.
Verdict verify_budget(double expected_total, double budget);

}  // namespace theseus

#endif  // THESEUS_METRICS_HPP
