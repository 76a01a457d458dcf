#include "theseus/quality_dist.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace theseus {

namespace {

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb,
                        double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = simpson(a, b, fa, fm, fb);
  const double eps = rel_tol * (std::abs(whole) + 1.0);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, eps, 48);
}

constexpr double kQuadratureRelTol = 1e-10;

}  // namespace

double QualityDistribution::truncated_moment(double cap, int power) const {
  const double lo = support_lo();
  const double hi = support_hi();
  if (cap <= lo) {
    throw std::domain_error(
        "truncated moment: cap at or below the support lower end has zero "
        "conditioning mass");
  }
  if (cap > hi) {
    throw std::domain_error("truncated moment: cap above the support");
  }
  const double mass = cdf(cap) - cdf(lo);
  if (mass <= 0.0) {
    throw std::domain_error("truncated moment: zero mass below cap");
  }
  auto integrand = [this, power](double u) {
    return (power == 1 ? u : u * u) * pdf(u);
  };
  return integrate(integrand, lo, cap, kQuadratureRelTol) / mass;
}

double QualityDistribution::truncated_first_moment(double cap) const {
  return truncated_moment(cap, 1);
}

double QualityDistribution::truncated_second_moment(double cap) const {
  return truncated_moment(cap, 2);
}

UniformQualityDistribution::UniformQualityDistribution(double lo, double hi)
    : lo_(lo), hi_(hi) {
  if (!(lo > 0.0) || !(hi > lo)) {
    throw std::invalid_argument(
        "uniform quality distribution requires 0 < lo < hi");
  }
}

double UniformQualityDistribution::pdf(double x) const {
  if (x < lo_ || x > hi_) return 0.0;
  return 1.0 / (hi_ - lo_);
}

double UniformQualityDistribution::cdf(double x) const {
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  return (x - lo_) / (hi_ - lo_);
}

double UniformQualityDistribution::quantile(double p) const {
  if (p < 0.0 || p > 1.0 || std::isnan(p)) {
    throw std::domain_error("quantile: p outside [0, 1]");
  }
  return lo_ + p * (hi_ - lo_);
}

}  // namespace theseus
