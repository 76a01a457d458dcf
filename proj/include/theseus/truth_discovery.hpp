#ifndef THESEUS_TRUTH_DISCOVERY_HPP
#define THESEUS_TRUTH_DISCOVERY_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "theseus/data_matrix.hpp"

namespace theseus {

enum class ExecutionMode { Serial, Parallel };

struct ConvergenceConfig {
  double tolerance = 1e-6;  // max per-task absolute truth change
  int max_iterations = 100;
  // When set, initial truths are drawn uniformly within each task's reading
  // span instead of the per-task mean.
  std::optional<std::uint64_t> init_seed;
};

struct AggregationResult {
  std::vector<double> truths;   // per task
  std::vector<double> weights;  // per participant, finite and >= 0
  int iterations = 0;
  bool converged = false;
  bool weight_floor_hit = false;  // a weight was clipped at zero
};

// Weight rule of the iterative loop: a per-reading distance d(.) plus a map
// from the per-worker distance sums to weights. The loop itself is agnostic
// to the specific pair.
class WeightRule {
 public:
  virtual ~WeightRule() = default;
  virtual double distance(double reading, double truth) const = 0;
  virtual void weights(std::span<const double> distance_sums,
                       std::span<double> out) const = 0;
};

// Squared distance; weight log(total / own) with the own sum floored at
// 1e-12 before the logarithm and the total taken over the floored sums.
class CrhWeightRule final : public WeightRule {
 public:
  static constexpr double kFloor = 1e-12;
  double distance(double reading, double truth) const override;
  void weights(std::span<const double> distance_sums,
               std::span<double> out) const override;
};

const WeightRule& crh_rule();

// Per-participant weights for given truth estimates under the CRH rule.
std::vector<double> crh_weights(const DataMatrix& data,
                                std::span<const double> truths);

// Weighted per-task estimates; throws std::runtime_error when all weights
// are zero or any weight is negative.
std::vector<double> weighted_truths(const DataMatrix& data,
                                    std::span<const double> weights);

// Alternates weight calculation and truth estimation until the max absolute
// truth change drops below the tolerance or the iteration cap is reached.
// Initial truths are the per-task unweighted mean unless an init seed is
// given. Serial and Parallel modes produce bit-identical results.
AggregationResult run_truth_discovery(const DataMatrix& data,
                                      const WeightRule& rule,
                                      const ConvergenceConfig& config = {},
                                      ExecutionMode mode =
                                          ExecutionMode::Serial);

}  // namespace theseus

#endif  // THESEUS_TRUTH_DISCOVERY_HPP
