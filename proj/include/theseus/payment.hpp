#ifndef THESEUS_PAYMENT_HPP
#define THESEUS_PAYMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "theseus/data_matrix.hpp"

namespace theseus {

struct PerWorkerPayment {
  double a = 0.0;  // slope on the mean squared peer deviation, > 0
  double b = 0.0;  // intercept, > 0
};

// Payment parameters aligned by index with the announced worker set.
struct PaymentParams {
  std::vector<PerWorkerPayment> workers;
  double budget = 0.0;

  void validate() const;  // throws std::invalid_argument on a non-positive entry
};

struct PaymentRecord {
  std::vector<std::string> worker_ids;  // the announced worker set
  std::vector<double> payments;         // 0 for non-participants
  // Reference worker id per participant; empty for drop-outs and for the
  // lone participant of a no-peer round.
  std::vector<std::optional<std::string>> references;
  double total = 0.0;
  int negative_count = 0;
  bool no_peer = false;  // exactly one participant, paid b with no deviation term

  void to_csv(std::ostream& out) const;  // worker_id,reference_id,payment
  std::string summary_json() const;      // total, negative_count, no_peer
};

struct PaymentOptions {
  // Clamp realized payments at zero. Departs from the analyzed mechanism
  // (whose equilibrium algebra needs the raw linear-in-deviation value), so
  // off by default.
  bool clamp_at_zero = false;
};

// Peer-prediction payment round: every participant is compared against a
// uniformly drawn other participant; p_s = b_s - a_s * mean_m (x_m^s - x_m^r)^2.
// `all_workers` is the announced worker set; params are aligned with it.
// Workers absent from `data` dropped out and are paid zero. Reference draws
// are deterministic per seed and independent of the sensing noise streams.
PaymentRecord compute_payments(const DataMatrix& data,
                               const std::vector<std::string>& all_workers,
                               const PaymentParams& params, std::uint64_t seed,
                               const PaymentOptions& options = {});

// E[p_s] = b - a (delta_own^2 + ref_second_moment) under the Gaussian model.
double expected_payment(double a, double b, double delta_own,
                        double ref_second_moment);

}  // namespace theseus

#endif  // THESEUS_PAYMENT_HPP
