#include "enrichci/intervals.hpp"

#include "enrichci/errors.hpp"
#include "enrichci/normal.hpp"
#include "enrichci/roots.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <utility>

namespace enrichci {

namespace {

// Tighter than the public defaults: Newton needs residuals well below the
// 1e-7 contract to converge cleanly.
const quadrature::Tolerance kSolverQuad{1e-12, 1e-10, 256};

constexpr double kLowerTailFloor = 1e-8;
constexpr double kBracketStart = 10.0;  // in units of sigma12
constexpr double kBracketLimit = 40.0;

void check_umau_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw std::domain_error("UMPU test requires 0 < alpha < 0.5");
  }
}

void check_tost_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("C-TOST interval requires 0 < alpha < 1");
  }
}

// Root of a nondecreasing function h of the standardized offset
// s = (delta - observed) / sigma12. Starts at `guess`, walks outward with a
// doubling step until the sign changes, never leaving |s| <= kBracketLimit.
// Points where the conditional model cannot be built (selection probability
// underflow) are skipped by shrinking the step.
template <class H>
double invert_increasing(H&& h, double guess, std::string_view which) {
  auto fail = [&](std::string_view why) {
    std::ostringstream msg;
    msg << "inversion failed for " << which << ": " << why;
    throw NumericalError(msg.str());
  };
  auto eval = [&](double s) -> std::optional<double> {
    try {
      return h(s);
    } catch (const std::domain_error&) {
      return std::nullopt;
    }
  };

  double prev = std::clamp(guess, -kBracketStart, kBracketStart);
  auto hp = eval(prev);
  if (!hp) {
    prev = 0.0;
    hp = eval(prev);
    if (!hp) fail("model undefined at the observed value");
  }
  if (*hp == 0.0) return prev;
  const double dir = *hp > 0.0 ? -1.0 : 1.0;
  double step = 1.0;
  double s = prev;
  double hs = *hp;
  bool bracketed = false;
  while (step >= 1e-6) {
    const double next = std::clamp(prev + dir * step, -kBracketLimit, kBracketLimit);
    if (next == prev) break;
    const auto hn = eval(next);
    if (!hn) {
      step *= 0.5;
      continue;
    }
    if ((*hn > 0.0) != (*hp > 0.0) || *hn == 0.0) {
      s = next;
      hs = *hn;
      bracketed = true;
      break;
    }
    prev = next;
    hp = hn;
    step *= 2.0;
  }
  if (!bracketed) fail("no sign change within +/- 40 standard errors of the observed value");

  roots::Options opt;
  opt.width_tol = 1e-11;
  opt.value_tol = 0.0;
  return roots::solve(h, prev, s, *hp, hs, opt).x;
}

// Critical values along a sequence of nearby deltas, warm-starting Newton
// from the previous solution shifted by the change in conditional mean.
class CriticalValueTracker {
 public:
  CriticalValueTracker(const ConditionalNormal& family, double alpha)
      : family_(family), alpha_(alpha) {}

  CriticalPair at(double delta) {
    const ConditionalNormal model = family_.with_delta(delta);
    std::optional<CriticalPair> guess;
    if (last_) {
      const double shift = model.mean() - last_mean_;
      guess = CriticalPair{last_->c1 + shift, last_->c2 + shift};
    }
    const CriticalPair pair = solve_umpu_fast(model, alpha_, guess);
    last_ = pair;
    last_mean_ = model.mean();
    return pair;
  }

 private:
  const ConditionalNormal& family_;
  double alpha_;
  std::optional<CriticalPair> last_;
  double last_mean_ = 0.0;
};

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::naive:
      return "naive";
    case Method::umau:
      return "umau";
    case Method::tost:
      return "tost";
  }
  return "naive";
}

Method parse_method(std::string_view name) {
  if (name == "naive") return Method::naive;
  if (name == "umau") return Method::umau;
  if (name == "tost") return Method::tost;
  throw std::invalid_argument("unknown interval method '" + std::string(name) + "'");
}

UmpuResiduals umpu_residuals(const ConditionalNormal& model, double alpha, CriticalPair pair) {
  const auto [mass, centred] = model.centred_moments(pair.c1, pair.c2, kSolverQuad);
  const double partial = model.mean() * mass + centred;
  return {mass - (1.0 - alpha), partial - (1.0 - alpha) * model.mean()};
}

CriticalPair solve_umpu(const ConditionalNormal& model, double alpha) {
  check_umau_alpha(alpha);
  const double mu = model.mean();
  const double keep = 1.0 - alpha;

  struct Eval {
    double c1;
    double c2;
  };
  Eval last{};
  // I(c1) - (1 - alpha) E[X], parameterized by the lower tail probability.
  auto excess = [&](double tail) {
    const double c1 = model.quantile(tail);
    const double c2 = model.quantile(tail + keep);
    last = {c1, c2};
    return model.partial_moment(c1, c2) - keep * mu;
  };

  const double lo = kLowerTailFloor;
  const double hi = alpha * (1.0 - kLowerTailFloor);
  const double f_lo = excess(lo);
  const double f_hi = excess(hi);
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    std::ostringstream msg;
    msg << "UMPU bracket has no sign change: I(" << lo << ") - (1-alpha)mean = " << f_lo
        << ", I(" << hi << ") - (1-alpha)mean = " << f_hi << " (delta = " << model.delta()
        << ", alpha = " << alpha << ")";
    throw NumericalError(msg.str());
  }
  roots::Options opt;
  opt.value_tol = 1e-12 * std::max(1.0, std::abs(mu));
  opt.width_tol = 1e-14;
  const auto root = roots::solve(excess, lo, hi, f_lo, f_hi, opt);
  excess(root.x);
  return {last.c1, last.c2};
}

CriticalPair solve_umpu_fast(const ConditionalNormal& model, double alpha,
                             std::optional<CriticalPair> guess) {
  check_umau_alpha(alpha);
  const double mu = model.mean();
  const double sd = std::sqrt(model.variance());
  const double keep = 1.0 - alpha;
  const double tol = 1e-11;

  double c1;
  double c2;
  if (guess && guess->c1 < guess->c2) {
    c1 = guess->c1;
    c2 = guess->c2;
  } else {
    const double z = normal::quantile(1.0 - 0.5 * alpha);
    c1 = mu - z * sd;
    c2 = mu + z * sd;
  }

  auto residual = [&](double a, double b) {
    const auto [mass, centred] = model.centred_moments(a, b, kSolverQuad);
    return std::pair{mass - keep, centred / sd};
  };
  auto norm = [](std::pair<double, double> r) { return std::abs(r.first) + std::abs(r.second); };

  auto r = residual(c1, c2);
  for (int it = 0; it < 40; ++it) {
    if (std::abs(r.first) <= tol && std::abs(r.second) <= tol) return {c1, c2};
    const double f1 = model.density(c1);
    const double f2 = model.density(c2);
    const double det = f1 * f2 * (c1 - c2) / sd;
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) break;
    // Jacobian of (mass - keep, centred / sd) in (c1, c2):
    //   [ -f1,                 f2               ]
    //   [ -(c1 - mu) f1 / sd,  (c2 - mu) f2 / sd ]
    const double j11 = -f1;
    const double j12 = f2;
    const double j21 = -(c1 - mu) * f1 / sd;
    const double j22 = (c2 - mu) * f2 / sd;
    const double d1 = -(j22 * r.first - j12 * r.second) / det;
    const double d2 = -(-j21 * r.first + j11 * r.second) / det;

    double t = 1.0;
    bool improved = false;
    for (int k = 0; k < 30; ++k, t *= 0.5) {
      const double n1 = c1 + t * d1;
      const double n2 = c2 + t * d2;
      if (!(n1 < n2) || !std::isfinite(n1) || !std::isfinite(n2)) continue;
      const auto rn = residual(n1, n2);
      if (norm(rn) < norm(r) || (std::abs(rn.first) <= tol && std::abs(rn.second) <= tol)) {
        c1 = n1;
        c2 = n2;
        r = rn;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (std::abs(r.first) <= 1e-9 && std::abs(r.second) <= 1e-9) return {c1, c2};
  return solve_umpu(model, alpha);
}

IntervalEstimate umau_ci(const ConditionalNormal& family, double observed, double alpha,
                         std::string target) {
  check_umau_alpha(alpha);
  if (!std::isfinite(observed)) throw std::domain_error("umau_ci: observed value must be finite");
  const double scale = family.sigma12();
  const double z = normal::quantile(1.0 - 0.5 * alpha);

  CriticalValueTracker lower_track(family, alpha);
  auto h_lower = [&](double s) {
    return (lower_track.at(observed + scale * s).c2 - observed) / scale;
  };
  const double lower = observed + scale * invert_increasing(h_lower, -z, "C-UMAU lower endpoint");

  CriticalValueTracker upper_track(family, alpha);
  auto h_upper = [&](double s) {
    return (upper_track.at(observed + scale * s).c1 - observed) / scale;
  };
  const double upper = observed + scale * invert_increasing(h_upper, z, "C-UMAU upper endpoint");

  return {lower, upper, Method::umau, alpha, std::move(target)};
}

IntervalEstimate ctost_ci(const ConditionalNormal& family, double observed, double alpha,
                          std::string target) {
  check_tost_alpha(alpha);
  if (!std::isfinite(observed)) throw std::domain_error("ctost_ci: observed value must be finite");
  const double scale = family.sigma12();
  const double z = normal::quantile(1.0 - 0.5 * alpha);

  // F_delta(observed) decreases in delta, so 1 - F increases.
  auto survival_at = [&](double s) {
    return 1.0 - family.with_delta(observed + scale * s).cdf(observed);
  };
  const double lower = observed + scale * invert_increasing(
                                              [&](double s) { return survival_at(s) - 0.5 * alpha; },
                                              -z, "C-TOST lower endpoint");
  const double upper =
      observed + scale * invert_increasing(
                             [&](double s) { return survival_at(s) - (1.0 - 0.5 * alpha); }, z,
                             "C-TOST upper endpoint");
  return {lower, upper, Method::tost, alpha, std::move(target)};
}

IntervalEstimate naive_ci(double observed, double se, double alpha, std::string target) {
  if (!(se > 0.0) || !std::isfinite(se)) throw std::domain_error("naive_ci: se must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("naive_ci: alpha must lie in (0, 1)");
  const double half = normal::quantile(1.0 - 0.5 * alpha) * se;
  return {observed - half, observed + half, Method::naive, alpha, std::move(target)};
}

}  // namespace enrichci
