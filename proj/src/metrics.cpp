#include "theseus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace theseus {

double mae(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.size() != truths.size() || estimates.empty()) {
    throw std::invalid_argument("mae needs matching, non-empty task sets");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    sum += std::abs(estimates[i] - truths[i]);
  }
  return sum / static_cast<double>(estimates.size());
}

ErrorBound analytic_error_bound(std::span<const double> participant_deltas,
                         double alpha_err) {
  if (!(alpha_err > 0.0)) {
    throw std::invalid_argument("alpha_err must be positive");
  }
  double delta_sum = 0.0;
  for (double d : participant_deltas) delta_sum += d;
  ErrorBound bound;
  bound.raw = std::sqrt(2.0 / 3.14159265358979323846) * delta_sum / alpha_err;
  bound.capped = std::min(bound.raw, 1.0);
  return bound;
}

double error_probability_estimate(std::span<const double> trial_maes,
                                  double alpha_err) {
  if (trial_maes.empty()) {
    throw std::invalid_argument("needs at least one trial");
  }
  std::size_t hits = 0;
  for (double m : trial_maes) {
    if (m >= alpha_err) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(trial_maes.size());
}

Verdict verify_ir(std::span<const double> expected_utilities) {
  Verdict v;
  v.margin = std::numeric_limits<double>::infinity();
  for (double u : expected_utilities) v.margin = std::min(v.margin, u);
  if (expected_utilities.empty()) v.margin = 0.0;
  v.pass = v.margin >= -1e-9;
  return v;
}

Verdict verify_budget(double expected_total, double budget) {
  Verdict v;
  v.margin = budget - expected_total;
  v.pass = v.margin >= -1e-9;
  return v;
}

}  // namespace theseus
