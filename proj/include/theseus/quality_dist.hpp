#ifndef THESEUS_QUALITY_DIST_HPP
#define THESEUS_QUALITY_DIST_HPP

#include <memory>
#include <string>

namespace theseus {

// Common prior over workers' best-achievable noise levels. Values are
// immutable after construction and safe for concurrent reads.
//
// A(cap) and R(cap) are the second and first moments conditioned on the
// draw falling in [support_lo, cap]. Both are evaluated by adaptive Simpson
// quadrature of the pdf (relative tolerance 1e-10), so any family that
// implements pdf/cdf/quantile gets them for free.
class QualityDistribution {
 public:
  virtual ~QualityDistribution() = default;

  virtual std::string kind() const = 0;
  virtual double support_lo() const = 0;
  virtual double support_hi() const = 0;

  // Zero outside the support, boundaries included.
  virtual double pdf(double x) const = 0;
  virtual double cdf(double x) const = 0;
  // Throws std::domain_error unless p is in [0, 1].
  virtual double quantile(double p) const = 0;

  // E[d | d <= cap]. cap must lie in (support_lo, support_hi]; at cap ==
  // support_lo the conditioning event has zero mass and this throws
  // std::domain_error.
  double truncated_first_moment(double cap) const;
  // E[d^2 | d <= cap], same domain as truncated_first_moment.
  double truncated_second_moment(double cap) const;

 private:
  double truncated_moment(double cap, int power) const;
};

class UniformQualityDistribution final : public QualityDistribution {
 public:
  // Requires 0 < lo < hi.
  UniformQualityDistribution(double lo, double hi);

  std::string kind() const override { return "uniform"; }
  double support_lo() const override { return lo_; }
  double support_hi() const override { return hi_; }

  double pdf(double x) const override;
  double cdf(double x) const override;
  double quantile(double p) const override;

 private:
  double lo_;
  double hi_;
};

}  // namespace theseus

#endif  // THESEUS_QUALITY_DIST_HPP
