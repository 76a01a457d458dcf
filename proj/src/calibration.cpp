#include "theseus/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "theseus/rng.hpp"

namespace theseus {

namespace {

constexpr double kSlack = 1e-9;

double hoeffding_coeff(std::size_t worker_count, double beta) {
  return std::sqrt(-2.0 / (static_cast<double>(worker_count) * std::log(beta)));
}

}  // namespace

void GuaranteeTargets::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw std::invalid_argument("theta must lie in (0, 1)");
  }
  if (!(alpha_ratio > 1.0)) {
    throw std::invalid_argument("alpha_ratio must exceed 1");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("beta must lie in (0, 1)");
  }
}

double participation_lower_bound(const QualityDistribution& dist,
                                 std::size_t worker_count, double theta) {
  if (worker_count < 1) throw std::invalid_argument("worker_count must be >= 1");
  if (!(theta > 0.0 && theta < 1.0)) {
    throw std::invalid_argument("theta must lie in (0, 1)");
  }
  const double p =
      1.0 - std::pow(1.0 - theta, 1.0 / static_cast<double>(worker_count));
  return dist.quantile(p);
}

ApproxBoundResult approx_upper_bound(const QualityDistribution& dist,
                                     std::size_t worker_count,
                                     const GuaranteeTargets& targets) {
  targets.validate();
  if (worker_count < 1) throw std::invalid_argument("worker_count must be >= 1");
  const double lo = dist.support_lo();
  const double hi = dist.support_hi();
  const double coeff = hoeffding_coeff(worker_count, targets.beta);
  const double S = static_cast<double>(worker_count);
  auto g = [&](double d) {
    return d + coeff * (dist.truncated_first_moment(d) * S -
                        lo * targets.alpha_ratio);
  };

  // R needs positive conditioning mass, so evaluate just inside the support.
  double a = lo + 1e-12 * (hi - lo);
  double b = hi;
  ApproxBoundResult result;
  result.g_lo = g(a);
  result.g_hi = g(b);
  if (result.g_lo > 0.0 || result.g_hi < 0.0) {
    return result;  // monotone g without a sign change
  }
  while (b - a > 1e-9) {
    const double m = 0.5 * (a + b);
    if (g(m) < 0.0) {
      a = m;
    } else {
      b = m;
    }
  }
  result.value = 0.5 * (a + b);
  return result;
}

ParamGenResult generate_complete_params(const Population& workers,
                                        double delta_t,
                                        const QualityDistribution& dist,
                                        double budget,
                                        const ParamGenOptions& options) {
  const double lo = dist.support_lo();
  if (!(delta_t > lo && delta_t <= dist.support_hi())) {
    throw std::invalid_argument(
        "delta_t must lie in (support_lo, support_hi]");
  }
  const double ref_moment = dist.truncated_second_moment(delta_t);

  std::optional<Rng> rng;
  if (options.sample_seed) rng.emplace(*options.sample_seed);

  PaymentParams params;
  params.budget = budget;
  params.workers.reserve(workers.size());
  double intercept_sum = 0.0;
  double slack_sum = 0.0;
  for (const auto& w : workers) {
    PerWorkerPayment p;
    p.a = w.cost_slope / (2.0 * lo);
    if (rng) p.a *= 1.0 + rng->uniform01();
    p.b = p.a * (delta_t * delta_t + ref_moment) - w.cost_slope * delta_t +
          w.cost_intercept;
    intercept_sum += p.b;
    slack_sum += 2.0 * p.a * lo * lo;
    params.workers.push_back(p);
  }

  ParamGenResult result;
  result.min_budget = intercept_sum - slack_sum;
  if (intercept_sum > budget + slack_sum + kSlack) {
    result.reason = "budget below the intercept sum minus the slope slack";
    return result;
  }
  result.params = std::move(params);
  return result;
}

ParamGenResult generate_incomplete_params(std::size_t worker_count,
                                          const CostBounds& cost_bounds,
                                          double delta_l, double delta_h,
                                          const QualityDistribution& dist,
                                          double budget,
                                          const ParamGenOptions& options) {
  cost_bounds.validate();
  const double lo = dist.support_lo();
  if (!(delta_l >= lo && delta_l < delta_h && delta_h <= dist.support_hi())) {
    throw std::invalid_argument(
        "thresholds must satisfy support_lo <= delta_l < delta_h <= "
        "support_hi");
  }
  const double ref_moment = dist.truncated_second_moment(delta_h);

  // Admissible intercept interval [intercept_lo(a), intercept_hi(a)]; its
  // width is affine increasing in a, so the smallest workable slope is the
  // larger of the slope floor and the width's zero crossing.
  const double width_slope = delta_h * delta_h - delta_l * delta_l;
  const double width_offset = -cost_bounds.c1_hi * delta_h +
                              cost_bounds.c1_lo * delta_l + cost_bounds.c2_lo -
                              cost_bounds.c2_hi;
  double a = cost_bounds.c1_hi / (2.0 * lo);
  if (width_offset < 0.0) {
    a = std::max(a, -width_offset / width_slope);
  }

  auto intercept_lo = [&](double slope) {
    return slope * (delta_l * delta_l + ref_moment) -
           cost_bounds.c1_lo * delta_l + cost_bounds.c2_hi;
  };
  auto intercept_hi = [&](double slope) {
    return slope * (delta_h * delta_h + ref_moment) -
           cost_bounds.c1_hi * delta_h + cost_bounds.c2_lo;
  };
  if (options.sample_seed) {
    Rng rng(*options.sample_seed);
    a *= 1.0 + rng.uniform01();
  }
  const double b = intercept_lo(a);

  ParamGenResult result;
  const double S = static_cast<double>(worker_count);
  result.min_budget = S * b - S * 2.0 * a * lo * lo;
  if (intercept_hi(a) < b - kSlack) {
    result.reason = "empty intercept interval";  // unreachable once a is raised
    return result;
  }
  if (S * b > budget + S * 2.0 * a * lo * lo + kSlack) {
    result.reason = "budget below the intercept sum minus the slope slack";
    return result;
  }
  PaymentParams params;
  params.budget = budget;
  params.workers.assign(worker_count, PerWorkerPayment{a, b});
  result.params = std::move(params);
  return result;
}

std::vector<ConditionVerdict> check_conditions_complete(
    const PaymentParams& params, const Population& workers, double delta_t,
    const QualityDistribution& dist) {
  if (params.workers.size() != workers.size()) {
    throw std::invalid_argument("payment params must cover every worker");
  }
  const double lo = dist.support_lo();
  const double ref_moment = dist.truncated_second_moment(delta_t);

  double slope_margin = std::numeric_limits<double>::infinity();
  double pin_margin = 0.0;  // largest |b - pinned value|
  double intercept_sum = 0.0;
  double slack_sum = 0.0;
  for (std::size_t i = 0; i < workers.size(); ++i) {
    const auto& w = workers[i];
    const auto& p = params.workers[i];
    slope_margin = std::min(slope_margin, p.a - w.cost_slope / (2.0 * lo));
    const double pinned = p.a * (delta_t * delta_t + ref_moment) -
                          w.cost_slope * delta_t + w.cost_intercept;
    pin_margin = std::max(pin_margin, std::abs(p.b - pinned));
    intercept_sum += p.b;
    slack_sum += 2.0 * p.a * lo * lo;
  }
  const double budget_margin = params.budget + slack_sum - intercept_sum;
  return {
      {"slope_floor", slope_margin >= -kSlack, slope_margin},
      {"intercept_pin", pin_margin <= kSlack, -pin_margin},
      {"budget", budget_margin >= -kSlack, budget_margin},
  };
}

std::vector<ConditionVerdict> check_conditions_incomplete(
    const PaymentParams& params, const CostBounds& cost_bounds, double delta_l,
    double delta_h, const QualityDistribution& dist) {
  const double lo = dist.support_lo();
  const double ref_moment = dist.truncated_second_moment(delta_h);

  double slope_margin = std::numeric_limits<double>::infinity();
  double upper_margin = std::numeric_limits<double>::infinity();
  double lower_margin = std::numeric_limits<double>::infinity();
  double intercept_sum = 0.0;
  double slack_sum = 0.0;
  for (const auto& p : params.workers) {
    slope_margin =
        std::min(slope_margin, p.a - cost_bounds.c1_hi / (2.0 * lo));
    const double hi_cap = p.a * (delta_h * delta_h + ref_moment) -
                          cost_bounds.c1_hi * delta_h + cost_bounds.c2_lo;
    const double lo_cap = p.a * (delta_l * delta_l + ref_moment) -
                          cost_bounds.c1_lo * delta_l + cost_bounds.c2_hi;
    upper_margin = std::min(upper_margin, hi_cap - p.b);
    lower_margin = std::min(lower_margin, p.b - lo_cap);
    intercept_sum += p.b;
    slack_sum += 2.0 * p.a * lo * lo;
  }
  const double budget_margin = params.budget + slack_sum - intercept_sum;
  return {
      {"slope_floor", slope_margin >= -kSlack, slope_margin},
      {"intercept_upper", upper_margin >= -kSlack, upper_margin},
      {"intercept_lower", lower_margin >= -kSlack, lower_margin},
      {"budget", budget_margin >= -kSlack, budget_margin},
  };
}

namespace {

struct ThresholdDraw {
  double lower = 0.0;
  ApproxBoundResult upper;
  ThresholdFallback fallback = ThresholdFallback::None;
  double draw_hi = 0.0;
};

ThresholdDraw threshold_interval(const QualityDistribution& dist,
                                 std::size_t worker_count,
                                 const GuaranteeTargets& targets) {
  ThresholdDraw out;
  out.lower = participation_lower_bound(dist, worker_count, targets.theta);
  out.upper = approx_upper_bound(dist, worker_count, targets);
  if (!out.upper.has_solution()) {
    out.fallback = ThresholdFallback::NoSolution;
    out.draw_hi = dist.support_hi();
  } else if (*out.upper.value <= out.lower) {
    out.fallback = ThresholdFallback::IntervalEmpty;
    out.draw_hi = dist.support_hi();
  } else {
    out.draw_hi = *out.upper.value;
  }
  return out;
}

void fill_common(CalibrationReport& report, const ThresholdDraw& draw,
                 const ParamGenResult& gen) {
  report.delta_lower = draw.lower;
  report.delta_upper = draw.upper;
  report.fallback = draw.fallback;
  report.ratio_guarantee = draw.fallback == ThresholdFallback::None;
  report.feasible = gen.params.has_value();
  report.params = gen.params;
  report.min_budget = gen.min_budget;
  report.infeasible_reason = gen.reason;
}

}  // namespace

CalibrationReport calibrate_complete(const Population& workers,
                                     const QualityDistribution& dist,
                                     const GuaranteeTargets& targets,
                                     double budget, std::uint64_t seed) {
  const auto draw = threshold_interval(dist, workers.size(), targets);
  Rng rng(seed);
  const double delta_t = rng.uniform(draw.lower, draw.draw_hi);

  CalibrationReport report;
  report.scenario = "complete";
  report.delta_t = delta_t;
  const auto gen = generate_complete_params(workers, delta_t, dist, budget);
  fill_common(report, draw, gen);
  if (gen.params) {
    report.verdicts =
        check_conditions_complete(*gen.params, workers, delta_t, dist);
    for (const auto& v : report.verdicts) {
      if (v.condition == "budget") report.budget_slack = v.margin;
    }
  }
  return report;
}

CalibrationReport calibrate_incomplete(std::size_t worker_count,
                                       const CostBounds& cost_bounds,
                                       const QualityDistribution& dist,
                                       const GuaranteeTargets& targets,
                                       double budget, std::uint64_t seed) {
  const auto draw = threshold_interval(dist, worker_count, targets);
  Rng rng(seed);
  double delta_l = rng.uniform(draw.lower, draw.draw_hi);
  double delta_h = rng.uniform(draw.lower, draw.draw_hi);
  if (delta_h < delta_l) std::swap(delta_l, delta_h);
  int guard = 0;
  while (delta_h == delta_l && ++guard < 64) {
    delta_h = rng.uniform(draw.lower, draw.draw_hi);
    if (delta_h < delta_l) std::swap(delta_l, delta_h);
  }
  if (delta_h == delta_l) {
    throw std::runtime_error("degenerate threshold interval");
  }

  CalibrationReport report;
  report.scenario = "incomplete";
  report.delta_l = delta_l;
  report.delta_h = delta_h;
  const auto gen = generate_incomplete_params(worker_count, cost_bounds,
                                              delta_l, delta_h, dist, budget);
  fill_common(report, draw, gen);
  if (gen.params) {
    report.verdicts = check_conditions_incomplete(*gen.params, cost_bounds,
                                                  delta_l, delta_h, dist);
    for (const auto& v : report.verdicts) {
      if (v.condition == "budget") report.budget_slack = v.margin;
    }
  }
  return report;
}

std::string CalibrationReport::to_json(
    const std::vector<std::string>& worker_ids) const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  j["delta_lower"] = delta_lower;
  if (delta_upper.has_solution()) {
    j["delta_upper"] = *delta_upper.value;
  } else {
    j["delta_upper"] = nullptr;
    j["delta_upper_signs"] = {{"g_lo", delta_upper.g_lo},
                              {"g_hi", delta_upper.g_hi}};
  }
  switch (fallback) {
    case ThresholdFallback::None:
      j["fallback"] = "none";
      break;
    case ThresholdFallback::NoSolution:
      j["fallback"] = "ratio_bound_no_solution";
      break;
    case ThresholdFallback::IntervalEmpty:
      j["fallback"] = "interval_empty";
      break;
  }
  j["ratio_guarantee"] = ratio_guarantee;
  if (delta_t) j["delta_t"] = *delta_t;
  if (delta_l) j["delta_l"] = *delta_l;
  if (delta_h) j["delta_h"] = *delta_h;
  j["feasible"] = feasible;
  if (!feasible) {
    j["min_budget"] = min_budget;
    j["infeasible_reason"] = infeasible_reason;
  }
  nlohmann::ordered_json verdicts_json = nlohmann::ordered_json::array();
  for (const auto& v : verdicts) {
    verdicts_json.push_back({{"condition", v.condition},
                             {"satisfied", v.satisfied},
                             {"margin", v.margin}});
  }
  j["verdicts"] = verdicts_json;
  j["budget_slack"] = budget_slack;
  if (params) {
    j["budget"] = params->budget;
    nlohmann::ordered_json workers_json = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < params->workers.size(); ++i) {
      nlohmann::ordered_json w;
      if (i < worker_ids.size()) w["id"] = worker_ids[i];
      w["a"] = params->workers[i].a;
      w["b"] = params->workers[i].b;
      workers_json.push_back(w);
    }
    j["workers"] = workers_json;
  }
  return j.dump(2);
}

}  // namespace theseus
