#ifndef THESEUS_EXPERIMENTS_HPP
#define THESEUS_EXPERIMENTS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "theseus/calibration.hpp"
#include "theseus/metrics.hpp"
#include "theseus/population.hpp"
#include "theseus/truth_discovery.hpp"

namespace theseus {

inline constexpr const char* kVersion = "0.1.0";

enum class Scenario { Complete, Incomplete };
enum class Mechanism { Theseus, MaxStd, RandomStd };
enum class SweepAxis { None, Workers, Tasks };

std::string to_string(Mechanism m);
Mechanism mechanism_from_string(const std::string& s);

struct ExperimentConfig {
  Scenario scenario = Scenario::Complete;
  std::vector<Mechanism> mechanisms = {Mechanism::Theseus, Mechanism::RandomStd,
                                       Mechanism::MaxStd};
  SweepAxis sweep = SweepAxis::Workers;
  std::size_t workers = 130;  // fixed count when not the sweep axis
  std::size_t workers_min = 120, workers_max = 150, workers_step = 10;
  std::size_t tasks = 30;
  std::size_t tasks_min = 10, tasks_max = 40, tasks_step = 10;
  double delta_lo = 0.1, delta_hi = 4.0;  // quality distribution support
  double delta_bar_lo = 5.0, delta_bar_hi = 10.0;
  double truth_lo = 0.0, truth_hi = 10.0;
  GuaranteeTargets targets;
  double budget = 50000.0;
  CostBounds cost_bounds{0.5, 1.5, 15.0, 20.0};
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  std::vector<double> error_grid = {0.5, 1.0, 2.0, 5.0};
  double td_tolerance = 1e-6;
  int td_max_iterations = 100;
  bool clamp_payments = false;
  int threads = 0;  // 0: OpenMP default

  void validate() const;
  // Key-value text file; `#` starts a comment, keys mirror the fields above.
  static ExperimentConfig from_file(const std::string& path);
  void apply_key_value(const std::string& key, const std::string& value);
  // Table presets I..IV: worker sweep / task sweep x complete / incomplete.
  void apply_setting(const std::string& id);
  std::vector<std::size_t> sweep_values() const;
  std::string to_json() const;  // config echo for the run manifest
};

// Non-strategic comparison profiles: MaxStd plays every worker's delta_hi,
// RandomStd draws uniformly from each worker's range. Everyone participates.
StrategyProfile baseline_profile(Mechanism mechanism, const Population& workers,
                                 std::uint64_t seed);

// One full simulated round for the leading configured mechanism:
// population -> calibration/BNE (or baseline profile) -> ground truths ->
// sensing data -> truth discovery -> payments -> report. Deterministic per
// (config.seed, trial_index).
TrialReport run_trial(const ExperimentConfig& config,
                      std::uint64_t trial_index);
TrialReport run_trial(const ExperimentConfig& config, Mechanism mechanism,
                      std::uint64_t trial_index);

struct ErrorCurvePoint {
  double alpha = 0.0;
  double error_prob = 0.0;  // empirical Pr(MAE >= alpha)
  double mean_bound = 0.0;      // mean capped analytic bound across trials
  double mean_raw_bound = 0.0;  // same without the cap at 1
  bool bound_pass = false;      // error_prob <= mean_bound + 3 binomial SE
};

struct PointSummary {
  double sweep_value = 0.0;
  Mechanism mechanism = Mechanism::Theseus;
  std::size_t trials = 0;
  std::size_t included = 0;  // trials contributing an MAE
  std::size_t excluded_no_participants = 0;
  std::size_t excluded_infeasible = 0;
  std::size_t fallback_count = 0;  // trials without the ratio guarantee
  double mean_mae = 0.0;
  double std_mae = 0.0;
  double participant_mean = 0.0;
  std::optional<double> total_payment_mean;
  std::optional<double> ir_pass_rate;
  std::optional<double> budget_pass_rate;
  std::vector<ErrorCurvePoint> error_curve;
};

struct SettingSummary {
  std::vector<PointSummary> points;
};

// Sweep driver: every (sweep point, mechanism) cell runs config.trials
// independent trials. In Parallel mode trials run under OpenMP; per-trial
// seeding plus index-ordered aggregation keeps the summary byte-identical to
// the serial run.
SettingSummary run_setting(const ExperimentConfig& config,
                           ExecutionMode mode = ExecutionMode::Serial);

// sweep_value,mechanism,mean_mae,std_mae,participant_mean,
// total_payment_mean,ir_pass_rate,budget_pass_rate
void write_results_csv(const SettingSummary& summary, std::ostream& out);
void write_manifest_json(const ExperimentConfig& config,
                         const SettingSummary& summary, std::ostream& out);

// Runs the setting and writes results.csv plus manifest.json under out_dir.
void run_simulate(const ExperimentConfig& config, const std::string& out_dir,
                  ExecutionMode mode);

}  // namespace theseus

#endif  // THESEUS_EXPERIMENTS_HPP
