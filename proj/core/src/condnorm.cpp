#include "enrichci/condnorm.hpp"

#include "enrichci/errors.hpp"
#include "enrichci/normal.hpp"
#include "enrichci/roots.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace enrichci {

namespace {

// log(1e-300)
constexpr double kMinLogSelection = -690.77552789821368;
constexpr double kSupportHalfWidth = 12.0;

const quadrature::Tolerance kQuad{1e-10, 1e-8, 256};

}  // namespace

ConditionalNormal::ConditionalNormal(double delta, double sigma1, double sigma2, double lower,
                                     double upper)
    : delta_(delta), sigma1_(sigma1), sigma2_(sigma2), lower_(lower), upper_(upper) {
  if (!std::isfinite(delta)) throw std::domain_error("ConditionalNormal: delta must be finite");
  if (!(sigma1 > 0.0) || !std::isfinite(sigma1) || !(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw std::domain_error("ConditionalNormal: stage standard errors must be positive and finite");
  }
  if (std::isnan(lower) || std::isnan(upper) || !(lower < upper)) {
    throw std::domain_error("ConditionalNormal: truncation bounds require lower < upper");
  }
  tau1_ = 1.0 / (sigma1 * sigma1);
  tau2_ = 1.0 / (sigma2 * sigma2);
  sigma12_ = 1.0 / std::sqrt(tau1_ + tau2_);
  ratio_ = sigma1 / sigma2;
  spread_ = ratio_ * sigma12_;

  const double a = (lower - delta) / sigma1;
  const double b = (upper - delta) / sigma1;
  log_selection_ = normal::log_prob(a, b);
  if (!(log_selection_ >= kMinLogSelection)) {
    std::ostringstream msg;
    msg << "ConditionalNormal: selection probability below 1e-300 (delta = " << delta
        << ", bounds = (" << lower << ", " << upper << "), sigma1 = " << sigma1 << ")";
    throw std::domain_error(msg.str());
  }
  log_norm_ = std::log(sigma12_) + log_selection_;
  mean_ = delta + normal::truncated_mean_shift(a, b) * sigma1 * stage1_weight();
}

ConditionalNormal ConditionalNormal::with_delta(double delta) const {
  return ConditionalNormal(delta, sigma1_, sigma2_, lower_, upper_);
}

double ConditionalNormal::density(double x) const noexcept {
  const double z = (x - delta_) / sigma12_;
  const double a = (lower_ - x) / spread_;
  const double b = (upper_ - x) / spread_;
  const double window = normal::prob(a, b);
  if (window > 1e-280) return std::exp(normal::log_pdf(z) - log_norm_) * window;
  return std::exp(normal::log_pdf(z) + normal::log_prob(a, b) - log_norm_);
}

double ConditionalNormal::pdf(double x) const {
  if (!std::isfinite(x)) throw std::domain_error("ConditionalNormal::pdf: argument must be finite");
  return density(x);
}

double ConditionalNormal::mean() const noexcept { return mean_; }

double ConditionalNormal::variance() const noexcept {
  const double a = (lower_ - delta_) / sigma1_;
  const double b = (upper_ - delta_) / sigma1_;
  auto edge = [this](double z) {
    return std::isinf(z) ? 0.0 : z * std::exp(normal::log_pdf(z) - log_selection_);
  };
  const double shift = normal::truncated_mean_shift(a, b);
  const double stage1 = std::max(0.0, sigma1_ * sigma1_ * (1.0 + edge(a) - edge(b) - shift * shift));
  const double w = stage1_weight();
  return w * w * stage1 + (1.0 - w) * (1.0 - w) * sigma2_ * sigma2_;
}

std::array<double, 2> ConditionalNormal::support() const noexcept {
  return {mean_ - kSupportHalfWidth * sigma12_, mean_ + kSupportHalfWidth * sigma12_};
}

double ConditionalNormal::cdf(double x) const {
  if (std::isnan(x)) throw std::domain_error("ConditionalNormal::cdf: argument is NaN");
  if (x == -kInfinity) return 0.0;
  if (x == kInfinity) return 1.0;
  const auto [lo, hi] = support();
  auto f = [this](double t) { return density(t); };
  double value;
  if (x <= mean_) {
    const double from = std::min(lo, x - kSupportHalfWidth * sigma12_);
    value = quadrature::integrate_scalar(f, from, x, kQuad).value[0];
  } else {
    const double to = std::max(hi, x + kSupportHalfWidth * sigma12_);
    value = 1.0 - quadrature::integrate_scalar(f, x, to, kQuad).value[0];
  }
  return std::clamp(value, 0.0, 1.0);
}

double ConditionalNormal::quantile(double q) const {
  if (!(q > 0.0 && q < 1.0)) {
    throw std::domain_error("ConditionalNormal::quantile: probability must lie in (0, 1)");
  }
  auto g = [&](double x) { return cdf(x) - q; };
  // Start from a normal approximation and expand geometrically.
  const double guess = mean_ + sigma12_ * normal::quantile(q);
  double step = 0.5 * sigma12_;
  double a = guess - step;
  double b = guess + step;
  double ga = g(a);
  double gb = g(b);
  for (int i = 0; i < 60 && ga > 0.0; ++i) {
    step *= 2.0;
    b = a;
    gb = ga;
    a = guess - step;
    ga = g(a);
  }
  for (int i = 0; i < 60 && gb < 0.0; ++i) {
    step *= 2.0;
    a = b;
    ga = gb;
    b = guess + step;
    gb = g(b);
  }
  roots::Options opt;
  opt.value_tol = 1e-11;
  opt.width_tol = 1e-12;
  return roots::solve(g, a, b, ga, gb, opt).x;
}

std::array<double, 2> ConditionalNormal::centred_moments(double a, double b,
                                                         const quadrature::Tolerance& tol) const {
  if (std::isnan(a) || std::isnan(b) || a > b) {
    throw std::domain_error("ConditionalNormal: integration bounds require a <= b");
  }
  const auto [lo, hi] = support();
  const double from = std::max(a, lo);
  const double to = std::min(b, hi);
  if (!(from < to)) return {0.0, 0.0};
  auto f = [this](double t) {
    const double d = density(t);
    return quadrature::Vec<2>{d, (t - mean_) * d};
  };
  const auto r = quadrature::integrate<2>(f, from, to, tol);
  return r.value;
}

double ConditionalNormal::partial_moment(double a, double b) const {
  if (std::isnan(a) || std::isnan(b) || a > b) {
    throw std::domain_error("ConditionalNormal::partial_moment: requires a <= b");
  }
  if (a == b) return 0.0;
  const auto [mass, centred] = centred_moments(a, b);
  return mean_ * mass + centred;
}

}  // namespace enrichci
