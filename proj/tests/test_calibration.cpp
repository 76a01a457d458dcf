#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "theseus/calibration.hpp"
#include "theseus/metrics.hpp"
#include "theseus/rng.hpp"

using theseus::approx_upper_bound;
using theseus::calibrate_complete;
using theseus::calibrate_incomplete;
using theseus::check_conditions_complete;
using theseus::check_conditions_incomplete;
using theseus::CostBounds;
using theseus::expected_payment;
using theseus::expected_utility;
using theseus::generate_complete_params;
using theseus::generate_incomplete_params;
using theseus::GuaranteeTargets;
using theseus::Interval;
using theseus::participation_lower_bound;
using theseus::PaymentParams;
using theseus::Population;
using theseus::Rng;
using theseus::sample_population;
using theseus::ThresholdFallback;
using theseus::UniformQualityDistribution;
using theseus::verify_budget;
using theseus::verify_ir;
using theseus::WorkerProfile;

namespace {

const UniformQualityDistribution table_dist(0.1, 4.0);
const CostBounds table_costs{0.5, 1.5, 15.0, 20.0};

// Closed-form bisection oracle for the ratio-bound root on the uniform
// family: g(D) = D + c (S (D + lo)/2 - lo alpha).
double ratio_root_oracle(double lo, std::size_t S, double alpha, double beta) {
  const double c = std::sqrt(-2.0 / (static_cast<double>(S) * std::log(beta)));
  const double slope = 1.0 + c * static_cast<double>(S) / 2.0;
  const double offset = c * (static_cast<double>(S) * lo / 2.0 - lo * alpha);
  return -offset / slope;
}

bool all_satisfied(const std::vector<theseus::ConditionVerdict>& verdicts) {
  for (const auto& v : verdicts) {
    if (!v.satisfied) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("participation lower bound") {
  // S = 130, theta = 0.9: quantile of 1 - 0.1^(1/130), scripted oracle
  // value 0.16846939123404336.
  CHECK(participation_lower_bound(table_dist, 130, 0.9) ==
        doctest::Approx(0.16846939123404336).epsilon(1e-12));
  // single worker: plain quantile
  CHECK(participation_lower_bound(table_dist, 1, 0.9) ==
        doctest::Approx(3.61).epsilon(1e-12));
  // vanishing demand collapses to the support lower end
  CHECK(participation_lower_bound(table_dist, 10, 1e-12) ==
        doctest::Approx(0.1).epsilon(1e-9));
  CHECK_THROWS(participation_lower_bound(table_dist, 10, 0.0));
  CHECK_THROWS(participation_lower_bound(table_dist, 10, 1.0));
  CHECK_THROWS(participation_lower_bound(table_dist, 0, 0.5));
}

TEST_CASE("ratio-bound root exists for a small crowd") {
  const GuaranteeTargets targets{0.9, 5.0, 0.1};
  const auto result = approx_upper_bound(table_dist, 3, targets);
  REQUIRE(result.has_solution());
  // scripted oracle: 0.10421439765394781
  CHECK(*result.value == doctest::Approx(0.104214397654).epsilon(1e-6));
  CHECK(std::abs(*result.value - ratio_root_oracle(0.1, 3, 5.0, 0.1)) < 1e-8);
  CHECK(result.g_lo < 0.0);
  CHECK(result.g_hi > 0.0);
}

TEST_CASE("ratio-bound root is absent at the table-scale crowd") {
  const GuaranteeTargets targets{0.9, 5.0, 0.1};
  const auto result = approx_upper_bound(table_dist, 130, targets);
  CHECK_FALSE(result.has_solution());
  // g is already positive at the left support end
  CHECK(result.g_lo == doctest::Approx(1.121751985542359).epsilon(1e-6));
  CHECK(result.g_hi > 0.0);
}

TEST_CASE("a loose ratio target pushes g negative across the whole support") {
  // alpha so large that g stays below zero even at the upper support end:
  // no sign change, reported with both endpoint signs.
  const GuaranteeTargets loose{0.9, 200.0, 0.1};
  const auto result = approx_upper_bound(table_dist, 3, loose);
  CHECK_FALSE(result.has_solution());
  CHECK(result.g_lo < 0.0);
  CHECK(result.g_hi < 0.0);
}

TEST_CASE("sampled slopes stay feasible and deterministic") {
  Population pop = {WorkerProfile{"w0", 0.15, 6.0, 1.0, 2.0},
                    WorkerProfile{"w1", 0.3, 6.0, 1.4, 9.0}};
  theseus::ParamGenOptions options;
  options.sample_seed = 404;
  const auto a = generate_complete_params(pop, 0.25, table_dist, 1e6, options);
  const auto b = generate_complete_params(pop, 0.25, table_dist, 1e6, options);
  REQUIRE(a.params.has_value());
  CHECK(a.params->workers[0].a == b.params->workers[0].a);
  const auto pinned = generate_complete_params(pop, 0.25, table_dist, 1e6);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    CHECK(a.params->workers[i].a >= pinned.params->workers[i].a);
  }
  CHECK(all_satisfied(
      check_conditions_complete(*a.params, pop, 0.25, table_dist)));
}

TEST_CASE("larger alpha moves the root up") {
  const GuaranteeTargets a5{0.9, 5.0, 0.1};
  const GuaranteeTargets a8{0.9, 8.0, 0.1};
  const auto r5 = approx_upper_bound(table_dist, 3, a5);
  const auto r8 = approx_upper_bound(table_dist, 3, a8);
  REQUIRE(r5.has_solution());
  REQUIRE(r8.has_solution());
  CHECK(*r8.value > *r5.value);
}

TEST_CASE("complete-information parameter generation") {
  Population pop = {WorkerProfile{"w0", 0.15, 6.0, 1.0, 2.0}};
  const auto gen = generate_complete_params(pop, 0.2, table_dist, 1000.0);
  REQUIRE(gen.params.has_value());
  // slope floor c1 / (2 lo) = 1 / 0.2
  CHECK(gen.params->workers[0].a == doctest::Approx(5.0).epsilon(1e-12));
  // intercept pinned at a (Dt^2 + A(Dt)) - c1 Dt + c2 = 2.116667
  CHECK(gen.params->workers[0].b ==
        doctest::Approx(2.1166666666666667).epsilon(1e-8));
  CHECK_THROWS(generate_complete_params(pop, 0.1, table_dist, 1000.0));
  CHECK_THROWS(generate_complete_params(pop, 4.5, table_dist, 1000.0));
}

TEST_CASE("budget shortfall is reported, not thrown") {
  Population pop = {WorkerProfile{"w0", 0.15, 6.0, 1.0, 2.0},
                    WorkerProfile{"w1", 0.25, 6.0, 1.2, 3.0}};
  const auto rich = generate_complete_params(pop, 0.2, table_dist, 1000.0);
  REQUIRE(rich.params.has_value());
  double need = 0.0;
  for (const auto& w : rich.params->workers) {
    need += w.b - 2.0 * w.a * 0.1 * 0.1;
  }
  const auto poor = generate_complete_params(pop, 0.2, table_dist, need - 0.5);
  CHECK_FALSE(poor.params.has_value());
  CHECK(poor.min_budget == doctest::Approx(need).epsilon(1e-9));
  const auto exact = generate_complete_params(pop, 0.2, table_dist, need);
  CHECK(exact.params.has_value());
}

TEST_CASE("incomplete-information parameter generation") {
  // Degenerate cost bounds at (1, 2), slope floor 5; matches the worked
  // interval [2.0791667, 2.1166667].
  const CostBounds degenerate{1.0, 1.0, 2.0, 2.0};
  const auto gen = generate_incomplete_params(3, degenerate, 0.15, 0.2,
                                              table_dist, 1000.0);
  REQUIRE(gen.params.has_value());
  CHECK(gen.params->workers.size() == 3);
  CHECK(gen.params->workers[0].a == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(gen.params->workers[0].b ==
        doctest::Approx(2.0791666666666666).epsilon(1e-8));
  const auto verdicts = check_conditions_incomplete(*gen.params, degenerate,
                                                    0.15, 0.2, table_dist);
  CHECK(all_satisfied(verdicts));

  auto inflated = *gen.params;
  inflated.budget = 0.0;
  for (auto& w : inflated.workers) w.b += verdicts[3].margin;
  const auto violated = check_conditions_incomplete(inflated, degenerate, 0.15,
                                                    0.2, table_dist);
  CHECK_FALSE(violated[3].satisfied);  // the budget cap
  CHECK(violated[3].margin < 0.0);
  CHECK_FALSE(violated[1].satisfied);  // and the intercept upper cap
}

TEST_CASE("near-degenerate thresholds recover the complete-information pin") {
  const CostBounds degenerate{1.0, 1.0, 2.0, 2.0};
  Population pop = {WorkerProfile{"w0", 0.15, 6.0, 1.0, 2.0}};
  const double delta_t = 0.2;
  const auto complete =
      generate_complete_params(pop, delta_t, table_dist, 1000.0);
  REQUIRE(complete.params.has_value());
  double prev_gap = 1e300;
  for (double eps : {1e-3, 1e-5, 1e-7}) {
    const auto inc = generate_incomplete_params(
        1, degenerate, delta_t - eps, delta_t, table_dist, 1000.0);
    REQUIRE(inc.params.has_value());
    const double gap =
        std::abs(inc.params->workers[0].b - complete.params->workers[0].b);
    CHECK(gap < prev_gap + 1e-12);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-5);
}

TEST_CASE("slope rises to the interval crossing when spreads are wide") {
  // Wide intercept spread makes the admissible interval empty at the slope
  // floor; the generator must raise the slope exactly to the crossing.
  const CostBounds wide{0.5, 1.5, 2.0, 40.0};
  const double delta_l = 0.5, delta_h = 0.6;
  const double crossing =
      (1.5 * delta_h - 0.5 * delta_l + 40.0 - 2.0) /
      (delta_h * delta_h - delta_l * delta_l);
  REQUIRE(crossing > 1.5 / 0.2);  // genuinely above the floor
  const auto gen = generate_incomplete_params(2, wide, delta_l, delta_h,
                                              table_dist, 100000.0);
  REQUIRE(gen.params.has_value());
  CHECK(gen.params->workers[0].a == doctest::Approx(crossing).epsilon(1e-9));
  const auto verdicts = check_conditions_incomplete(*gen.params, wide, delta_l,
                                                    delta_h, table_dist);
  CHECK(all_satisfied(verdicts));
}

TEST_CASE("condition checks flag constructed violations") {
  Population pop = {WorkerProfile{"w0", 0.15, 6.0, 1.0, 2.0},
                    WorkerProfile{"w1", 0.3, 6.0, 1.4, 9.0}};
  const auto gen = generate_complete_params(pop, 0.25, table_dist, 1000.0);
  REQUIRE(gen.params.has_value());
  CHECK(all_satisfied(
      check_conditions_complete(*gen.params, pop, 0.25, table_dist)));

  auto halved = *gen.params;
  halved.workers[0].a *= 0.5;
  const auto v1 = check_conditions_complete(halved, pop, 0.25, table_dist);
  CHECK_FALSE(v1[0].satisfied);  // slope floor
  CHECK(v1[0].margin < 0.0);
  CHECK(v1[0].margin == doctest::Approx(-2.5).epsilon(1e-9));

  auto inflated = *gen.params;
  const auto clean = check_conditions_complete(inflated, pop, 0.25, table_dist);
  inflated.workers[0].b += clean[2].margin + 1.0;
  const auto v2 = check_conditions_complete(inflated, pop, 0.25, table_dist);
  CHECK_FALSE(v2[1].satisfied);  // the pin moved
  CHECK_FALSE(v2[2].satisfied);  // and the budget broke
  CHECK(v2[2].margin == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("generator output always passes the checker") {
  Rng rng(77);
  int complete_rounds = 0, incomplete_rounds = 0;
  for (int round = 0; round < 1000; ++round) {
    const double lo = rng.uniform(0.05, 0.5);
    const double hi = lo + rng.uniform(0.5, 5.0);
    const UniformQualityDistribution dist(lo, hi);
    const CostBounds bounds{rng.uniform(0.2, 1.0), rng.uniform(1.0, 2.0),
                            rng.uniform(5.0, 10.0), rng.uniform(10.0, 30.0)};
    const std::size_t S = 1 + rng.uniform_index(40);
    if (round % 2 == 0) {
      const Population pop = sample_population(
          S, dist, Interval{hi + 1.0, hi + 5.0}, bounds, rng.next_u64());
      const double delta_t = rng.uniform(std::nextafter(lo, hi), hi);
      const auto gen =
          generate_complete_params(pop, delta_t, dist, 1e9);
      REQUIRE(gen.params.has_value());
      CHECK(all_satisfied(
          check_conditions_complete(*gen.params, pop, delta_t, dist)));
      ++complete_rounds;
    } else {
      const double delta_l = rng.uniform(lo, hi - 1e-6);
      const double delta_h = rng.uniform(delta_l + 1e-9, hi);
      const auto gen = generate_incomplete_params(S, bounds, delta_l, delta_h,
                                                  dist, 1e9);
      REQUIRE(gen.params.has_value());
      CHECK(all_satisfied(check_conditions_incomplete(*gen.params, bounds,
                                                      delta_l, delta_h, dist)));
      ++incomplete_rounds;
    }
  }
  CHECK(complete_rounds == 500);
  CHECK(incomplete_rounds == 500);
}

TEST_CASE("full complete-information calibration report") {
  const GuaranteeTargets targets{0.9, 5.0, 0.1};
  const auto pop = sample_population(130, table_dist, Interval{5.0, 10.0},
                                     table_costs, 42);
  const auto report = calibrate_complete(pop, table_dist, targets, 50000.0, 9);
  CHECK(report.scenario == "complete");
  CHECK(report.feasible);
  CHECK(report.fallback == ThresholdFallback::NoSolution);
  CHECK_FALSE(report.ratio_guarantee);
  REQUIRE(report.delta_t.has_value());
  CHECK(*report.delta_t >= report.delta_lower);
  CHECK(*report.delta_t <= 4.0);
  CHECK(all_satisfied(report.verdicts));
  CHECK(report.budget_slack >= 0.0);
  const auto json = report.to_json();
  CHECK(json.find("\"scenario\": \"complete\"") != std::string::npos);
  CHECK(json.find("ratio_bound_no_solution") != std::string::npos);
}

TEST_CASE("full incomplete-information calibration report") {
  const GuaranteeTargets targets{0.9, 5.0, 0.1};
  const auto report = calibrate_incomplete(130, table_costs, table_dist,
                                           targets, 50000.0, 10);
  CHECK(report.scenario == "incomplete");
  CHECK(report.feasible);
  REQUIRE(report.delta_l.has_value());
  REQUIRE(report.delta_h.has_value());
  CHECK(*report.delta_l < *report.delta_h);
  CHECK(all_satisfied(report.verdicts));
}

TEST_CASE("small-crowd calibration keeps the ratio guarantee flag honest") {
  // With S = 3 the root exists but sits below the participation bound, so the
  // interval is empty and the guarantee flag must drop.
  const GuaranteeTargets targets{0.9, 5.0, 0.1};
  const auto pop = sample_population(3, table_dist, Interval{5.0, 10.0},
                                     table_costs, 21);
  const auto report = calibrate_complete(pop, table_dist, targets, 50000.0, 3);
  CHECK(report.fallback == ThresholdFallback::IntervalEmpty);
  CHECK_FALSE(report.ratio_guarantee);
  REQUIRE(report.delta_upper.has_solution());
  CHECK(report.delta_lower > *report.delta_upper.value);
}

TEST_CASE("IR and budget hold across randomized feasible calibrations") {
  const GuaranteeTargets targets{0.9, 5.0, 0.1};
  Rng rng(5150);
  for (int round = 0; round < 200; ++round) {
    const auto pop = sample_population(20 + rng.uniform_index(120), table_dist,
                                       Interval{5.0, 10.0}, table_costs,
                                       rng.next_u64());
    const auto report =
        calibrate_complete(pop, table_dist, targets, 1e7, rng.next_u64());
    REQUIRE(report.feasible);
    const double delta_t = *report.delta_t;
    const double ref = table_dist.truncated_second_moment(delta_t);
    std::vector<double> utilities;
    double expected_total = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (pop[i].delta_lo > delta_t) continue;
      utilities.push_back(expected_utility(pop[i], pop[i].delta_lo,
                                           report.params->workers[i], ref));
      expected_total += expected_payment(report.params->workers[i].a,
                                         report.params->workers[i].b,
                                         pop[i].delta_lo, ref);
    }
    CHECK(verify_ir(utilities).pass);
    CHECK(verify_budget(expected_total, 1e7).pass);
  }
}
