#include "theseus/payment.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "theseus/rng.hpp"

namespace theseus {

void PaymentParams::validate() const {
  for (const auto& w : workers) {
    if (!(w.a > 0.0) || !(w.b > 0.0)) {
      throw std::invalid_argument("payment parameters must be positive");
    }
  }
  if (!(budget > 0.0)) {
    throw std::invalid_argument("budget must be positive");
  }
}

PaymentRecord compute_payments(const DataMatrix& data,
                               const std::vector<std::string>& all_workers,
                               const PaymentParams& params, std::uint64_t seed,
                               const PaymentOptions& options) {
  if (params.workers.size() != all_workers.size()) {
    throw std::invalid_argument("payment params must cover every worker");
  }
  std::unordered_map<std::string, std::size_t> participant_index;
  for (std::size_t i = 0; i < data.worker_count(); ++i) {
    participant_index.emplace(data.workers()[i], i);
  }
  std::size_t announced_participants = 0;
  for (const auto& id : all_workers) {
    if (participant_index.count(id)) ++announced_participants;
  }
  if (announced_participants != data.worker_count()) {
    throw std::invalid_argument(
        "data contains a participant missing from the announced worker set");
  }

  const std::size_t P = data.worker_count();
  const std::size_t M = data.task_count();
  PaymentRecord record;
  record.worker_ids = all_workers;
  record.payments.assign(all_workers.size(), 0.0);
  record.references.assign(all_workers.size(), std::nullopt);
  record.no_peer = P == 1;

  Rng rng(seed);
  for (std::size_t i = 0; i < all_workers.size(); ++i) {
    const auto it = participant_index.find(all_workers[i]);
    if (it == participant_index.end()) continue;  // dropped out, pays zero
    const std::size_t s = it->second;
    const PerWorkerPayment& pw = params.workers[i];

    double payment;
    if (P == 1) {
      payment = pw.b;  // no peer exists; flagged via no_peer
    } else {
      std::size_t r = rng.uniform_index(P - 1);
      if (r >= s) ++r;
      double mean_sq = 0.0;
      for (std::size_t t = 0; t < M; ++t) {
        const double d = data.at(s, t) - data.at(r, t);
        mean_sq += d * d;
      }
      mean_sq /= static_cast<double>(M);
      payment = pw.b - pw.a * mean_sq;
      record.references[i] = data.workers()[r];
    }
    if (payment < 0.0) {
      ++record.negative_count;
      if (options.clamp_at_zero) payment = 0.0;
    }
    record.payments[i] = payment;
    record.total += payment;
  }
  return record;
}

double expected_payment(double a, double b, double delta_own,
                        double ref_second_moment) {
  return b - a * (delta_own * delta_own + ref_second_moment);
}

void PaymentRecord::to_csv(std::ostream& out) const {
  out << "worker_id,reference_id,payment\n";
  char buf[32];
  for (std::size_t i = 0; i < worker_ids.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", payments[i]);
    out << worker_ids[i] << ',' << (references[i] ? *references[i] : "") << ','
        << buf << '\n';
  }
}

std::string PaymentRecord::summary_json() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", total);
  std::ostringstream out;
  out << "{\"total\": " << buf << ", \"negative_count\": " << negative_count
      << ", \"no_peer\": " << (no_peer ? "true" : "false") << "}";
  return out.str();
}

}  // namespace theseus
