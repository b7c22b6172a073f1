#include "enrichci/normal.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace enrichci::normal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Below this point erfc starts to lose precision to subnormals; switch to
// the asymptotic expansion of the Mills ratio.
constexpr double kLogCdfAsymptotic = -35.0;

double log1mexp(double x) noexcept {
  // log(1 - exp(x)) for x <= 0.
  return x > -0.6931471805599453 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

}  // namespace

double pdf(double x) noexcept {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double log_pdf(double x) noexcept {
  if (std::isinf(x)) return -kInf;
  return -0.5 * x * x - kLogSqrt2Pi;
}

double cdf(double x) noexcept {
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

double sf(double x) noexcept {
  return 0.5 * std::erfc(x * kInvSqrt2);
}

double log_cdf(double x) noexcept {
  if (x == -kInf) return -kInf;
  if (x > 5.0) return std::log1p(-sf(x));
  if (x > kLogCdfAsymptotic) return std::log(cdf(x));
  const double r = 1.0 / (x * x);
  // 1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - 945/x^10
  const double series = 1.0 + r * (-1.0 + r * (3.0 + r * (-15.0 + r * (105.0 - 945.0 * r))));
  return log_pdf(x) - std::log(-x) + std::log(series);
}

double prob(double a, double b) noexcept {
  if (!(a < b)) return 0.0;
  if (a >= 0.0) return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
  if (b <= 0.0) return 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
  // Opposite signs: erf terms add in magnitude, no cancellation.
  return 0.5 * (std::erf(b * kInvSqrt2) - std::erf(a * kInvSqrt2));
}

double log_prob(double a, double b) noexcept {
  if (!(a < b)) return -kInf;
  if (a > 0.0) {
    const double la = log_cdf(-a);
    const double lb = log_cdf(-b);
    return la + log1mexp(lb - la);
  }
  if (b < 0.0) {
    const double la = log_cdf(a);
    const double lb = log_cdf(b);
    return lb + log1mexp(la - lb);
  }
  return std::log(prob(a, b));
}

double truncated_mean_shift(double a, double b) noexcept {
  const double log_z = log_prob(a, b);
  const double la = log_pdf(a);
  const double lb = log_pdf(b);
  if (la == lb) return 0.0;
  if (la > lb) return std::exp(la + log1mexp(lb - la) - log_z);
  return -std::exp(lb + log1mexp(la - lb) - log_z);
}

double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw std::domain_error("normal quantile: probability outside [0, 1]");
  }
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

}  // namespace enrichci::normal
