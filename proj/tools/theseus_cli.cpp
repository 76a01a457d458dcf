// Command-line front end: calibrate, simulate, aggregate, pay, verify-bne.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "theseus/experiments.hpp"
#include "theseus/rng.hpp"

namespace {

using nlohmann::ordered_json;

struct ConfigCli {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> setting;
  std::optional<std::string> mechanism;
  std::optional<std::string> scenario;
  std::optional<int> threads;
};

void add_config_options(CLI::App* cmd, ConfigCli& cli) {
  cmd->add_option("--config", cli.config_path,
                  "experiment config file (key = value lines)");
  cmd->add_option("--set", cli.overrides,
                  "extra key=value override, repeatable");
  cmd->add_option("--seed", cli.seed, "base RNG seed (overrides config)");
  cmd->add_option("--trials", cli.trials, "trial count (overrides config)");
  cmd->add_option("--setting", cli.setting, "table preset: I, II, III or IV");
  cmd->add_option("--mechanism", cli.mechanism,
                  "theseus | max_std | random_std | all (comma list)");
  cmd->add_option("--scenario", cli.scenario, "complete | incomplete");
  cmd->add_option("--threads", cli.threads, "OpenMP thread count (0 = default)");
}

theseus::ExperimentConfig build_config(const ConfigCli& cli) {
  theseus::ExperimentConfig config;
  if (!cli.config_path.empty()) {
    config = theseus::ExperimentConfig::from_file(cli.config_path);
  }
  if (cli.setting) config.apply_setting(*cli.setting);
  if (cli.scenario) config.apply_key_value("scenario", *cli.scenario);
  if (cli.mechanism) config.apply_key_value("mechanism", *cli.mechanism);
  for (const auto& kv : cli.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--set expects key=value, got: " + kv);
    }
    config.apply_key_value(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (cli.seed) config.seed = *cli.seed;
  if (cli.trials) config.trials = *cli.trials;
  if (cli.threads) config.threads = *cli.threads;
  config.validate();
  return config;
}

int cmd_calibrate(const ConfigCli& cli) {
  const auto config = build_config(cli);
  const theseus::UniformQualityDistribution dist(config.delta_lo,
                                                 config.delta_hi);
  theseus::CalibrationReport report;
  std::vector<std::string> ids;
  const std::uint64_t threshold_seed =
      theseus::derive_seed(config.seed, 0, theseus::Stream::Thresholds);
  if (config.scenario == theseus::Scenario::Complete) {
    const auto pop = theseus::sample_population(
        config.workers, dist, {config.delta_bar_lo, config.delta_bar_hi},
        config.cost_bounds,
        theseus::derive_seed(config.seed, 0, theseus::Stream::Population));
    for (const auto& w : pop) ids.push_back(w.id);
    report = theseus::calibrate_complete(pop, dist, config.targets,
                                         config.budget, threshold_seed);
  } else {
    report = theseus::calibrate_incomplete(config.workers, config.cost_bounds,
                                           dist, config.targets, config.budget,
                                           threshold_seed);
  }
  std::cout << report.to_json(ids) << '\n';
  if (report.delta_upper.has_solution()) {
    std::cout << "feasible threshold interval: [" << report.delta_lower << ", "
              << *report.delta_upper.value << "]";
    if (!report.ratio_guarantee) std::cout << " (empty; fallback in effect)";
    std::cout << '\n';
  } else {
    std::cout << "feasible threshold interval: ratio bound has no solution; "
                 "fallback ["
              << report.delta_lower << ", " << config.delta_hi << "]\n";
  }
  return report.feasible ? 0 : 1;
}

int cmd_simulate(const ConfigCli& cli, const std::string& out_dir,
                 bool serial) {
  const auto config = build_config(cli);
  theseus::run_simulate(config, out_dir,
                        serial ? theseus::ExecutionMode::Serial
                               : theseus::ExecutionMode::Parallel);
  std::cout << "wrote " << out_dir << "/results.csv and " << out_dir
            << "/manifest.json\n";
  return 0;
}

int cmd_aggregate(const std::string& input, double tolerance,
                  int max_iterations, bool parallel,
                  const std::string& out_path) {
  const auto data = theseus::DataMatrix::from_csv_file(input);
  theseus::ConvergenceConfig convergence;
  convergence.tolerance = tolerance;
  convergence.max_iterations = max_iterations;
  const auto result = theseus::run_truth_discovery(
      data, theseus::crh_rule(), convergence,
      parallel ? theseus::ExecutionMode::Parallel
               : theseus::ExecutionMode::Serial);
  ordered_json j;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["weight_floor_hit"] = result.weight_floor_hit;
  ordered_json truths;
  for (std::size_t t = 0; t < data.task_count(); ++t) {
    truths[data.tasks()[t]] = result.truths[t];
  }
  j["truths"] = truths;
  ordered_json weights;
  for (std::size_t w = 0; w < data.worker_count(); ++w) {
    weights[data.workers()[w]] = result.weights[w];
  }
  j["weights"] = weights;
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << j.dump(2) << '\n';
    std::cout << "wrote " << out_path << '\n';
  }
  return result.converged ? 0 : 1;
}

int cmd_pay(const std::string& input, const std::string& params_path,
            std::uint64_t seed, const std::string& out_dir, bool clamp) {
  const auto data = theseus::DataMatrix::from_csv_file(input);
  std::ifstream params_in(params_path);
  if (!params_in) throw std::runtime_error("cannot open " + params_path);
  const auto j = ordered_json::parse(params_in);

  theseus::PaymentParams params;
  params.budget = j.at("budget").get<double>();
  std::vector<std::string> ids;
  for (const auto& w : j.at("workers")) {
    ids.push_back(w.at("id").get<std::string>());
    params.workers.push_back(
        {w.at("a").get<double>(), w.at("b").get<double>()});
  }
  params.validate();
  const auto record = theseus::compute_payments(data, ids, params, seed,
                                                {.clamp_at_zero = clamp});
  if (out_dir.empty()) {
    record.to_csv(std::cout);
    std::cout << record.summary_json() << '\n';
  } else {
    std::filesystem::create_directories(out_dir);
    std::ofstream csv(out_dir + "/payments.csv", std::ios::binary);
    record.to_csv(csv);
    std::ofstream summary(out_dir + "/payment_summary.json", std::ios::binary);
    summary << record.summary_json() << '\n';
    std::cout << "wrote " << out_dir << "/payments.csv and " << out_dir
              << "/payment_summary.json\n";
  }
  return 0;
}

// Grid check of the constructed equilibrium: no participant may gain from any
// strategy on a grid over her range or from dropping out, and every excluded
// worker must strictly lose by participating.
int cmd_verify_bne(const ConfigCli& cli, int grid, int calibrations) {
  const auto config = build_config(cli);
  const theseus::UniformQualityDistribution dist(config.delta_lo,
                                                 config.delta_hi);
  double worst_gain = -1e300;
  int feasible = 0;
  for (int k = 0; k < calibrations; ++k) {
    const auto pop = theseus::sample_population(
        config.workers, dist, {config.delta_bar_lo, config.delta_bar_hi},
        config.cost_bounds,
        theseus::derive_seed(config.seed, k, theseus::Stream::Population));
    theseus::CalibrationReport cal;
    if (config.scenario == theseus::Scenario::Complete) {
      cal = theseus::calibrate_complete(
          pop, dist, config.targets, config.budget,
          theseus::derive_seed(config.seed, k, theseus::Stream::Thresholds));
    } else {
      cal = theseus::calibrate_incomplete(
          pop.size(), config.cost_bounds, dist, config.targets, config.budget,
          theseus::derive_seed(config.seed, k, theseus::Stream::Thresholds));
    }
    if (!cal.feasible) continue;
    ++feasible;
    theseus::StrategyProfile profile;
    double ref_moment = 0.0;
    if (config.scenario == theseus::Scenario::Complete) {
      ref_moment = dist.truncated_second_moment(*cal.delta_t);
      profile = theseus::bne_profile_complete(pop, *cal.delta_t);
    } else {
      ref_moment = dist.truncated_second_moment(*cal.delta_h);
      profile = theseus::bne_profile_incomplete(pop, *cal.delta_l, *cal.delta_h,
                                                *cal.params, dist);
    }
    for (std::size_t i = 0; i < pop.size(); ++i) {
      const auto& pay = cal.params->workers[i];
      if (profile.strategies[i]) {
        const double at_eq = theseus::expected_utility(
            pop[i], *profile.strategies[i], pay, ref_moment);
        worst_gain = std::max(worst_gain, 0.0 - at_eq);  // dropping out
        for (int g = 0; g <= grid; ++g) {
          const double delta =
              pop[i].delta_lo +
              (pop[i].delta_hi - pop[i].delta_lo) * g / grid;
          const double u =
              theseus::expected_utility(pop[i], delta, pay, ref_moment);
          worst_gain = std::max(worst_gain, u - at_eq);
        }
      } else {
        // participation at her best in-range strategy must strictly lose
        const double u =
            theseus::expected_utility(pop[i], pop[i].delta_lo, pay, ref_moment);
        if (u >= 0.0) {
          std::cout << "FAIL: excluded worker " << pop[i].id
                    << " would gain by participating (utility " << u << ")\n";
          return 1;
        }
      }
    }
  }
  std::cout << "calibrations checked: " << feasible << "/" << calibrations
            << "\nworst deviation gain: " << worst_gain << '\n';
  if (worst_gain > 1e-9) {
    std::cout << "FAIL: profitable deviation found\n";
    return 1;
  }
  std::cout << "PASS: no deviation gains more than 1e-9\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Peer-prediction payment calibration and truth-discovery simulation"};
  app.require_subcommand(1);

  ConfigCli calibrate_cli;
  auto* calibrate = app.add_subcommand(
      "calibrate", "print a calibration report and the feasible interval");
  add_config_options(calibrate, calibrate_cli);

  ConfigCli simulate_cli;
  std::string out_dir;
  bool serial = false;
  auto* simulate =
      app.add_subcommand("simulate", "run a Monte-Carlo setting sweep");
  add_config_options(simulate, simulate_cli);
  simulate->add_option("--out-dir", out_dir, "output directory")->required();
  simulate->add_flag("--serial", serial, "disable OpenMP trial parallelism");

  std::string agg_input, agg_out;
  double agg_tolerance = 1e-6;
  int agg_max_iterations = 100;
  bool agg_parallel = false;
  auto* aggregate = app.add_subcommand(
      "aggregate", "run CRH truth discovery on a readings CSV");
  aggregate->add_option("--input", agg_input, "CSV: worker_id,task_id,value")
      ->required();
  aggregate->add_option("--tolerance", agg_tolerance, "convergence tolerance");
  aggregate->add_option("--max-iterations", agg_max_iterations,
                        "iteration cap");
  aggregate->add_flag("--parallel", agg_parallel, "use the OpenMP kernels");
  aggregate->add_option("--out", agg_out, "write JSON here instead of stdout");

  std::string pay_input, pay_params, pay_out_dir;
  std::uint64_t pay_seed = 1;
  bool pay_clamp = false;
  auto* pay = app.add_subcommand(
      "pay", "compute peer-prediction payments for a readings CSV");
  pay->add_option("--input", pay_input, "CSV: worker_id,task_id,value")
      ->required();
  pay->add_option("--params", pay_params,
                  "JSON: {budget, workers: [{id, a, b}]}")
      ->required();
  pay->add_option("--seed", pay_seed, "reference-draw seed");
  pay->add_option("--out-dir", pay_out_dir,
                  "write payments.csv + payment_summary.json here");
  pay->add_flag("--clamp", pay_clamp, "clamp negative payments at zero");

  ConfigCli verify_cli;
  int verify_grid = 100;
  int verify_calibrations = 100;
  auto* verify = app.add_subcommand(
      "verify-bne", "best-response grid check for randomized calibrations");
  add_config_options(verify, verify_cli);
  verify->add_option("--grid", verify_grid, "deviation grid points");
  verify->add_option("--calibrations", verify_calibrations,
                     "number of randomized calibrations");

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate->parsed()) return cmd_calibrate(calibrate_cli);
    if (simulate->parsed()) return cmd_simulate(simulate_cli, out_dir, serial);
    if (aggregate->parsed()) {
      return cmd_aggregate(agg_input, agg_tolerance, agg_max_iterations,
                           agg_parallel, agg_out);
    }
    if (pay->parsed()) {
      return cmd_pay(pay_input, pay_params, pay_seed, pay_out_dir, pay_clamp);
    }
    if (verify->parsed()) {
      return cmd_verify_bne(verify_cli, verify_grid, verify_calibrations);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
