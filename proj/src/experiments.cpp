#include "theseus/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "theseus/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace theseus {

namespace {

using nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("bad boolean value: " + v);
}

}  // namespace

std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::Theseus:
      return "theseus";
    case Mechanism::MaxStd:
      return "max_std";
    case Mechanism::RandomStd:
      return "random_std";
  }
  return "?";
}

Mechanism mechanism_from_string(const std::string& s) {
  if (s == "theseus") return Mechanism::Theseus;
  if (s == "max_std") return Mechanism::MaxStd;
  if (s == "random_std") return Mechanism::RandomStd;
  throw std::invalid_argument("unknown mechanism: " + s);
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (workers < 1 || tasks < 1) {
    throw std::invalid_argument("workers and tasks must be >= 1");
  }
  if (workers_min < 1 || workers_min > workers_max || workers_step < 1 ||
      tasks_min < 1 || tasks_min > tasks_max || tasks_step < 1) {
    throw std::invalid_argument("sweep ranges must be well-ordered");
  }
  if (!(delta_lo > 0.0) || !(delta_hi > delta_lo)) {
    throw std::invalid_argument("quality support must satisfy 0 < lo < hi");
  }
  if (delta_bar_lo < delta_hi || delta_bar_hi < delta_bar_lo) {
    throw std::invalid_argument(
        "delta_bar range must sit at or above the quality support");
  }
  if (truth_lo > truth_hi) {
    throw std::invalid_argument("truth range must be well-ordered");
  }
  if (mechanisms.empty()) {
    throw std::invalid_argument("at least one mechanism required");
  }
  if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");
  if (!(td_tolerance > 0.0) || td_max_iterations < 1) {
    throw std::invalid_argument("bad truth-discovery convergence settings");
  }
  for (double a : error_grid) {
    if (!(a > 0.0)) throw std::invalid_argument("error grid entries must be > 0");
  }
  targets.validate();
  cost_bounds.validate();
}

void ExperimentConfig::apply_setting(const std::string& id) {
  if (id == "I" || id == "III") {
    sweep = SweepAxis::Workers;
    workers_min = 120;
    workers_max = 150;
    workers_step = 10;
    tasks = 30;
  } else if (id == "II" || id == "IV") {
    sweep = SweepAxis::Tasks;
    tasks_min = 10;
    tasks_max = 40;
    tasks_step = 10;
    workers = 130;
  } else {
    throw std::invalid_argument("unknown setting: " + id);
  }
  scenario = (id == "I" || id == "II") ? Scenario::Complete
                                       : Scenario::Incomplete;
}

void ExperimentConfig::apply_key_value(const std::string& key,
                                       const std::string& value) {
  auto to_size = [&](const std::string& v) -> std::size_t {
    return static_cast<std::size_t>(std::stoull(v));
  };
  if (key == "scenario") {
    if (value == "complete") {
      scenario = Scenario::Complete;
    } else if (value == "incomplete") {
      scenario = Scenario::Incomplete;
    } else {
      throw std::invalid_argument("unknown scenario: " + value);
    }
  } else if (key == "setting") {
    apply_setting(value);
  } else if (key == "mechanism" || key == "mechanisms") {
    mechanisms.clear();
    for (const auto& item : split(value, ',')) {
      if (item == "all") {
        mechanisms = {Mechanism::Theseus, Mechanism::RandomStd,
                      Mechanism::MaxStd};
        break;
      }
      mechanisms.push_back(mechanism_from_string(item));
    }
  } else if (key == "sweep") {
    if (value == "workers") {
      sweep = SweepAxis::Workers;
    } else if (value == "tasks") {
      sweep = SweepAxis::Tasks;
    } else if (value == "none") {
      sweep = SweepAxis::None;
    } else {
      throw std::invalid_argument("unknown sweep axis: " + value);
    }
  } else if (key == "workers") {
    workers = to_size(value);
  } else if (key == "workers_min") {
    workers_min = to_size(value);
  } else if (key == "workers_max") {
    workers_max = to_size(value);
  } else if (key == "workers_step") {
    workers_step = to_size(value);
  } else if (key == "tasks") {
    tasks = to_size(value);
  } else if (key == "tasks_min") {
    tasks_min = to_size(value);
  } else if (key == "tasks_max") {
    tasks_max = to_size(value);
  } else if (key == "tasks_step") {
    tasks_step = to_size(value);
  } else if (key == "delta_lo") {
    delta_lo = std::stod(value);
  } else if (key == "delta_hi") {
    delta_hi = std::stod(value);
  } else if (key == "delta_bar_lo") {
    delta_bar_lo = std::stod(value);
  } else if (key == "delta_bar_hi") {
    delta_bar_hi = std::stod(value);
  } else if (key == "truth_lo") {
    truth_lo = std::stod(value);
  } else if (key == "truth_hi") {
    truth_hi = std::stod(value);
  } else if (key == "theta") {
    targets.theta = std::stod(value);
  } else if (key == "alpha_ratio") {
    targets.alpha_ratio = std::stod(value);
  } else if (key == "beta") {
    targets.beta = std::stod(value);
  } else if (key == "budget") {
    budget = std::stod(value);
  } else if (key == "c1_lo") {
    cost_bounds.c1_lo = std::stod(value);
  } else if (key == "c1_hi") {
    cost_bounds.c1_hi = std::stod(value);
  } else if (key == "c2_lo") {
    cost_bounds.c2_lo = std::stod(value);
  } else if (key == "c2_hi") {
    cost_bounds.c2_hi = std::stod(value);
  } else if (key == "trials") {
    trials = to_size(value);
  } else if (key == "seed") {
    seed = std::stoull(value);
  } else if (key == "error_grid") {
    error_grid.clear();
    for (const auto& item : split(value, ',')) {
      error_grid.push_back(std::stod(item));
    }
  } else if (key == "td_tolerance") {
    td_tolerance = std::stod(value);
  } else if (key == "td_max_iterations") {
    td_max_iterations = std::stoi(value);
  } else if (key == "clamp_payments") {
    clamp_payments = parse_bool(value);
  } else if (key == "threads") {
    threads = std::stoi(value);
  } else {
    throw std::invalid_argument("unknown config key: " + key);
  }
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  ExperimentConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected `key = value`");
    }
    try {
      config.apply_key_value(trim(line.substr(0, eq)),
                             trim(line.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return config;
}

std::vector<std::size_t> ExperimentConfig::sweep_values() const {
  std::vector<std::size_t> values;
  switch (sweep) {
    case SweepAxis::None:
      values.push_back(workers);
      break;
    case SweepAxis::Workers:
      for (std::size_t v = workers_min; v <= workers_max; v += workers_step) {
        values.push_back(v);
      }
      break;
    case SweepAxis::Tasks:
      for (std::size_t v = tasks_min; v <= tasks_max; v += tasks_step) {
        values.push_back(v);
      }
      break;
  }
  return values;
}

StrategyProfile baseline_profile(Mechanism mechanism,
                                 const Population& workers,
                                 std::uint64_t seed) {
  StrategyProfile profile;
  profile.strategies.reserve(workers.size());
  if (mechanism == Mechanism::MaxStd) {
    for (const auto& w : workers) profile.strategies.emplace_back(w.delta_hi);
    return profile;
  }
  if (mechanism == Mechanism::RandomStd) {
    Rng rng(seed);
    for (const auto& w : workers) {
      profile.strategies.emplace_back(rng.uniform(w.delta_lo, w.delta_hi));
    }
    return profile;
  }
  throw std::invalid_argument("baseline_profile expects max_std or random_std");
}

namespace {

struct TrialContext {
  const ExperimentConfig& config;
  const UniformQualityDistribution dist;

  explicit TrialContext(const ExperimentConfig& c)
      : config(c), dist(c.delta_lo, c.delta_hi) {}
};

TrialReport run_trial_impl(const TrialContext& ctx, Mechanism mechanism,
                           std::uint64_t trial_index) {
  const ExperimentConfig& config = ctx.config;
  const auto& dist = ctx.dist;

  const Population pop = sample_population(
      config.workers, dist, {config.delta_bar_lo, config.delta_bar_hi},
      config.cost_bounds, derive_seed(config.seed, trial_index,
                                      Stream::Population));

  std::vector<double> truths(config.tasks);
  {
    Rng rng(derive_seed(config.seed, trial_index, Stream::Truths));
    for (double& t : truths) t = rng.uniform(config.truth_lo, config.truth_hi);
  }

  TrialReport report;
  report.opt = pop.front().delta_lo;
  for (const auto& w : pop) report.opt = std::min(report.opt, w.delta_lo);

  StrategyProfile profile;
  std::optional<PaymentParams> params;
  double ref_moment = 0.0;
  if (mechanism == Mechanism::Theseus) {
    const std::uint64_t cal_seed =
        derive_seed(config.seed, trial_index, Stream::Thresholds);
    CalibrationReport cal;
    if (config.scenario == Scenario::Complete) {
      cal = calibrate_complete(pop, dist, config.targets, config.budget,
                               cal_seed);
    } else {
      cal = calibrate_incomplete(pop.size(), config.cost_bounds, dist,
                                 config.targets, config.budget, cal_seed);
    }
    report.ratio_guarantee = cal.ratio_guarantee;
    if (!cal.feasible) {
      report.calibration_infeasible = true;
      return report;
    }
    params = cal.params;
    if (config.scenario == Scenario::Complete) {
      ref_moment = dist.truncated_second_moment(*cal.delta_t);
      profile = bne_profile_complete(pop, *cal.delta_t);
    } else {
      ref_moment = dist.truncated_second_moment(*cal.delta_h);
      profile = bne_profile_incomplete(pop, *cal.delta_l, *cal.delta_h,
                                       *params, dist);
    }
  } else {
    profile = baseline_profile(
        mechanism, pop, derive_seed(config.seed, trial_index, Stream::Baseline));
  }

  report.participant_count = profile.participant_count();
  for (const auto& s : profile.strategies) {
    if (s) report.app += *s;
  }

  if (report.participant_count == 0) {
    if (mechanism == Mechanism::Theseus) {
      report.total_payment = 0.0;
      report.realized_utilities.assign(pop.size(), 0.0);
      report.ir_pass = true;      // vacuous
      report.budget_pass = true;  // zero total payment
    }
    return report;
  }

  const DataMatrix data =
      generate_data(pop, profile, truths,
                    derive_seed(config.seed, trial_index, Stream::Noise));
  const AggregationResult agg = run_truth_discovery(
      data, crh_rule(),
      {.tolerance = config.td_tolerance,
       .max_iterations = config.td_max_iterations},
      ExecutionMode::Serial);
  report.mae = mae(agg.truths, truths);

  if (mechanism == Mechanism::Theseus) {
    std::vector<std::string> ids;
    ids.reserve(pop.size());
    for (const auto& w : pop) ids.push_back(w.id);
    const PaymentRecord record = compute_payments(
        data, ids, *params,
        derive_seed(config.seed, trial_index, Stream::References),
        {.clamp_at_zero = config.clamp_payments});
    report.total_payment = record.total;
    report.realized_utilities.resize(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
      const auto& s = profile.strategies[i];
      report.realized_utilities[i] =
          record.payments[i] - (s ? pop[i].cost(*s) : 0.0);
    }

    std::vector<double> participant_utils;
    double expected_total = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (!profile.strategies[i]) continue;
      const double delta = *profile.strategies[i];
      participant_utils.push_back(
          expected_utility(pop[i], delta, params->workers[i], ref_moment));
      expected_total +=
          expected_payment(params->workers[i].a, params->workers[i].b, delta,
                           ref_moment);
    }
    report.ir_pass = verify_ir(participant_utils).pass;
    report.budget_pass = verify_budget(expected_total, config.budget).pass;
  }
  return report;
}

PointSummary summarize(double sweep_value, Mechanism mechanism,
                       const std::vector<TrialReport>& reports,
                       const std::vector<double>& error_grid) {
  PointSummary p;
  p.sweep_value = sweep_value;
  p.mechanism = mechanism;
  p.trials = reports.size();

  std::vector<double> maes;
  std::vector<double> delta_sums;  // participating strategy sums per kept trial
  maes.reserve(reports.size());
  double participant_sum = 0.0;
  double payment_sum = 0.0;
  std::size_t payment_n = 0;
  std::size_t ir_pass = 0, ir_n = 0;
  std::size_t budget_pass = 0, budget_n = 0;
  for (const auto& r : reports) {
    if (r.calibration_infeasible) {
      ++p.excluded_infeasible;
    } else if (!r.mae) {
      ++p.excluded_no_participants;
    }
    if (!r.ratio_guarantee) ++p.fallback_count;
    if (r.mae) {
      maes.push_back(*r.mae);
      delta_sums.push_back(r.app);
    }
    participant_sum += static_cast<double>(r.participant_count);
    if (r.total_payment) {
      payment_sum += *r.total_payment;
      ++payment_n;
    }
    if (r.ir_pass) {
      ++ir_n;
      if (*r.ir_pass) ++ir_pass;
    }
    if (r.budget_pass) {
      ++budget_n;
      if (*r.budget_pass) ++budget_pass;
    }
  }
  p.included = maes.size();
  p.participant_mean =
      participant_sum / static_cast<double>(std::max<std::size_t>(1, p.trials));
  if (payment_n > 0) {
    p.total_payment_mean = payment_sum / static_cast<double>(payment_n);
  }
  if (ir_n > 0) {
    p.ir_pass_rate = static_cast<double>(ir_pass) / static_cast<double>(ir_n);
  }
  if (budget_n > 0) {
    p.budget_pass_rate =
        static_cast<double>(budget_pass) / static_cast<double>(budget_n);
  }
  if (!maes.empty()) {
    double sum = 0.0;
    for (double m : maes) sum += m;
    p.mean_mae = sum / static_cast<double>(maes.size());
    if (maes.size() > 1) {
      double sq = 0.0;
      for (double m : maes) sq += (m - p.mean_mae) * (m - p.mean_mae);
      p.std_mae = std::sqrt(sq / static_cast<double>(maes.size() - 1));
    }
    for (double alpha : error_grid) {
      ErrorCurvePoint point;
      point.alpha = alpha;
      point.error_prob = error_probability_estimate(maes, alpha);
      double bound_sum = 0.0;
      double raw_sum = 0.0;
      for (double d : delta_sums) {
        const auto bound =
            analytic_error_bound(std::span<const double>(&d, 1), alpha);
        bound_sum += bound.capped;
        raw_sum += bound.raw;
      }
      point.mean_bound = bound_sum / static_cast<double>(delta_sums.size());
      point.mean_raw_bound = raw_sum / static_cast<double>(delta_sums.size());
      const double n = static_cast<double>(maes.size());
      const double se =
          std::sqrt(point.error_prob * (1.0 - point.error_prob) / n);
      point.bound_pass = point.error_prob <= point.mean_bound + 3.0 * se;
      p.error_curve.push_back(point);
    }
  }
  return p;
}

}  // namespace

TrialReport run_trial(const ExperimentConfig& config, Mechanism mechanism,
                      std::uint64_t trial_index) {
  config.validate();
  TrialContext ctx(config);
  return run_trial_impl(ctx, mechanism, trial_index);
}

TrialReport run_trial(const ExperimentConfig& config,
                      std::uint64_t trial_index) {
  return run_trial(config, config.mechanisms.front(), trial_index);
}

SettingSummary run_setting(const ExperimentConfig& config,
                           ExecutionMode mode) {
  config.validate();
  const auto values = config.sweep_values();
  SettingSummary summary;

  for (std::size_t point = 0; point < values.size(); ++point) {
    ExperimentConfig pc = config;
    if (config.sweep == SweepAxis::Workers) pc.workers = values[point];
    if (config.sweep == SweepAxis::Tasks) pc.tasks = values[point];
    // Distinct sweep points get independent randomness.
    pc.seed = mix64(config.seed ^ mix64(point + 1));

    const TrialContext ctx(pc);
    for (Mechanism mech : config.mechanisms) {
      std::vector<TrialReport> reports(config.trials);
      std::string error;
      if (mode == ExecutionMode::Parallel) {
        const int nthreads = config.threads;
        const auto n = static_cast<std::ptrdiff_t>(config.trials);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) \
    num_threads(nthreads > 0 ? nthreads : omp_get_max_threads())
#endif
        for (std::ptrdiff_t i = 0; i < n; ++i) {
          try {
            reports[static_cast<std::size_t>(i)] =
                run_trial_impl(ctx, mech, static_cast<std::uint64_t>(i));
          } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (error.empty()) error = e.what();
          }
        }
      } else {
        for (std::size_t i = 0; i < config.trials; ++i) {
          reports[i] = run_trial_impl(ctx, mech, i);
        }
      }
      if (!error.empty()) throw std::runtime_error(error);
      summary.points.push_back(summarize(static_cast<double>(values[point]),
                                         mech, reports, config.error_grid));
    }
  }
  return summary;
}

void write_results_csv(const SettingSummary& summary, std::ostream& out) {
  out << "sweep_value,mechanism,mean_mae,std_mae,participant_mean,"
         "total_payment_mean,ir_pass_rate,budget_pass_rate\n";
  for (const auto& p : summary.points) {
    out << format_double(p.sweep_value) << ',' << to_string(p.mechanism) << ','
        << (p.included > 0 ? format_double(p.mean_mae) : std::string{}) << ','
        << (p.included > 0 ? format_double(p.std_mae) : std::string{}) << ','
        << format_double(p.participant_mean) << ','
        << (p.total_payment_mean ? format_double(*p.total_payment_mean)
                                 : std::string{})
        << ','
        << (p.ir_pass_rate ? format_double(*p.ir_pass_rate) : std::string{})
        << ','
        << (p.budget_pass_rate ? format_double(*p.budget_pass_rate)
                               : std::string{})
        << '\n';
  }
}

std::string ExperimentConfig::to_json() const {
  ordered_json j;
  j["scenario"] =
      scenario == Scenario::Complete ? "complete" : "incomplete";
  ordered_json mechs = ordered_json::array();
  for (Mechanism m : mechanisms) mechs.push_back(to_string(m));
  j["mechanisms"] = mechs;
  switch (sweep) {
    case SweepAxis::None:
      j["sweep"] = "none";
      break;
    case SweepAxis::Workers:
      j["sweep"] = "workers";
      break;
    case SweepAxis::Tasks:
      j["sweep"] = "tasks";
      break;
  }
  j["workers"] = workers;
  j["workers_min"] = workers_min;
  j["workers_max"] = workers_max;
  j["workers_step"] = workers_step;
  j["tasks"] = tasks;
  j["tasks_min"] = tasks_min;
  j["tasks_max"] = tasks_max;
  j["tasks_step"] = tasks_step;
  j["delta_lo"] = delta_lo;
  j["delta_hi"] = delta_hi;
  j["delta_bar_lo"] = delta_bar_lo;
  j["delta_bar_hi"] = delta_bar_hi;
  j["truth_lo"] = truth_lo;
  j["truth_hi"] = truth_hi;
  j["theta"] = targets.theta;
  j["alpha_ratio"] = targets.alpha_ratio;
  j["beta"] = targets.beta;
  j["budget"] = budget;
  j["c1_lo"] = cost_bounds.c1_lo;
  j["c1_hi"] = cost_bounds.c1_hi;
  j["c2_lo"] = cost_bounds.c2_lo;
  j["c2_hi"] = cost_bounds.c2_hi;
  j["trials"] = trials;
  j["seed"] = seed;
  j["error_grid"] = error_grid;
  j["td_tolerance"] = td_tolerance;
  j["td_max_iterations"] = td_max_iterations;
  j["clamp_payments"] = clamp_payments;
  // threads is an execution detail, not part of the experiment definition;
  // leaving it out keeps manifests byte-identical across parallelism levels.
  return j.dump(2);
}

void write_manifest_json(const ExperimentConfig& config,
                         const SettingSummary& summary, std::ostream& out) {
  ordered_json j;
  j["version"] = kVersion;
  j["seed"] = config.seed;
  j["config"] = ordered_json::parse(config.to_json());
  ordered_json points = ordered_json::array();
  for (const auto& p : summary.points) {
    ordered_json pj;
    pj["sweep_value"] = p.sweep_value;
    pj["mechanism"] = to_string(p.mechanism);
    pj["trials"] = p.trials;
    pj["included"] = p.included;
    pj["excluded_no_participants"] = p.excluded_no_participants;
    pj["excluded_infeasible"] = p.excluded_infeasible;
    pj["ratio_guarantee_missing"] = p.fallback_count;
    if (p.included > 0) {
      pj["mean_mae"] = p.mean_mae;
      pj["std_mae"] = p.std_mae;
    }
    pj["participant_mean"] = p.participant_mean;
    if (p.total_payment_mean) pj["total_payment_mean"] = *p.total_payment_mean;
    if (p.ir_pass_rate) pj["ir_pass_rate"] = *p.ir_pass_rate;
    if (p.budget_pass_rate) pj["budget_pass_rate"] = *p.budget_pass_rate;
    ordered_json curve = ordered_json::array();
    for (const auto& c : p.error_curve) {
      curve.push_back({{"alpha", c.alpha},
                       {"error_prob", c.error_prob},
                       {"mean_analytic_error_bound", c.mean_bound},
                       {"mean_raw_bound", c.mean_raw_bound},
                       {"bound_pass", c.bound_pass}});
    }
    pj["error_curve"] = curve;
    points.push_back(pj);
  }
  j["points"] = points;
  out << j.dump(2) << '\n';
}

void run_simulate(const ExperimentConfig& config, const std::string& out_dir,
                  ExecutionMode mode) {
  const SettingSummary summary = run_setting(config, mode);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream csv(out_dir + "/results.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write results.csv");
    write_results_csv(summary, csv);
  }
  {
    std::ofstream manifest(out_dir + "/manifest.json", std::ios::binary);
    if (!manifest) throw std::runtime_error("cannot write manifest.json");
    write_manifest_json(config, summary, manifest);
  }
}

}  // namespace theseus
