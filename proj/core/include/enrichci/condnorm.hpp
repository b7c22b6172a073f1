#pragma once

#include "enrichci/quadrature.hpp"

#include <array>
#include <limits>

namespace enrichci {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Law of the precision-weighted pooled estimate
//   w * X1 + (1 - w) * X2,   w = tau1 / (tau1 + tau2),
// where X1 ~ N(delta, sigma1^2) is conditioned on lower < X1 < upper and
// X2 ~ N(delta, sigma2^2) is independent of it.
//
// The density is
//   phi((x - delta) / s12) / s12
//     * [Phi((upper - x) / r) - Phi((lower - x) / r)]
//     / [Phi((upper - delta) / sigma1) - Phi((lower - delta) / sigma1)]
// with s12 = sigma1 sigma2 / sqrt(sigma1^2 + sigma2^2) and r = (sigma1 / sigma2) s12.
//
// Values are immutable; every member function is const and thread-safe.
class ConditionalNormal {
 public:
  // Throws std::domain_error for non-positive or non-finite scales, lower >= upper,
  // or when the selection probability is below 1e-300.
  ConditionalNormal(double delta, double sigma1, double sigma2, double lower = -kInfinity,
                    double upper = kInfinity);

  // Same scales and bounds, different parameter value.
  [[nodiscard]] ConditionalNormal with_delta(double delta) const;

  [[nodiscard]] double delta() const noexcept { return delta_; }
  [[nodiscard]] double sigma1() const noexcept { return sigma1_; }
  [[nodiscard]] double sigma2() const noexcept { return sigma2_; }
  [[nodiscard]] double lower() const noexcept { return lower_; }
  [[nodiscard]] double upper() const noexcept { return upper_; }
  [[nodiscard]] double tau1() const noexcept { return tau1_; }
  [[nodiscard]] double tau2() const noexcept { return tau2_; }
  [[nodiscard]] double sigma12() const noexcept { return sigma12_; }
  [[nodiscard]] double ratio() const noexcept { return ratio_; }
  // Weight of the stage 1 estimate in the pooled estimate.
  [[nodiscard]] double stage1_weight() const noexcept { return tau1_ / (tau1_ + tau2_); }
  [[nodiscard]] bool untruncated() const noexcept {
    return lower_ == -kInfinity && upper_ == kInfinity;
  }
  // log P(lower < X1 < upper) under delta.
  [[nodiscard]] double log_selection_probability() const noexcept { return log_selection_; }

  [[nodiscard]] double pdf(double x) const;
  [[nodiscard]] double cdf(double x) const;
  [[nodiscard]] double quantile(double q) const;
  // Closed form conditional expectation.
  [[nodiscard]] double mean() const noexcept;
  // Closed form conditional variance: w^2 Var(X1 | lower < X1 < upper) + (1 - w)^2 sigma2^2.
  [[nodiscard]] double variance() const noexcept;
  // Integral of t * pdf(t) over [a, b]; a and b may be infinite.
  [[nodiscard]] double partial_moment(double a, double b) const;

  // Interval carrying all but a negligible (< 1e-20) share of the mass.
  [[nodiscard]] std::array<double, 2> support() const noexcept;

  // {mass, centred first moment} over [a, b]: integrals of pdf(t) and of
  // (t - mean()) pdf(t). Used by the test-inversion solvers.
  [[nodiscard]] std::array<double, 2> centred_moments(double a, double b,
                                                    const quadrature::Tolerance& tol = {}) const;

  // Density without argument validation; x must be finite.
  [[nodiscard]] double density(double x) const noexcept;

 private:
  double delta_;
  double sigma1_;
  double sigma2_;
  double lower_;
  double upper_;
  double tau1_;
  double tau2_;
  double sigma12_;
  double ratio_;
  double spread_;  // ratio * sigma12, the scale of X1 given the pooled value
  double log_selection_;
  double log_norm_;  // log(sigma12) + log_selection
  double mean_;
};

}  // namespace enrichci
