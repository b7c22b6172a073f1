#pragma once

#include "enrichci/errors.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace enrichci::roots {

struct Options {
  // Stop once |f(x)| <= value_tol ...
  double value_tol = 0.0;
  // ... or the bracket is no wider than width_tol * max(1, |x|).
  double width_tol = 1e-12;
  int max_iterations = 200;
};

struct Root {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
};

// Brent-Dekker: inverse quadratic / secant steps inside a bracket with a
// bisection fallback. Requires f(a) and f(b) of opposite sign (or zero).
template <class F>
Root solve(F&& f, double a, double b, double fa, double fb, const Options& opt = {}) {
  if (fa == 0.0) return {a, fa, 0};
  if (fb == 0.0) return {b, fb, 0};
  if ((fa > 0.0) == (fb > 0.0)) {
    std::ostringstream msg;
    msg << "root bracket [" << a << ", " << b << "] has no sign change (f = " << fa << ", " << fb
        << ")";
    throw NumericalError(msg.str());
  }
  double c = a;
  double fc = fa;
  double d = b - a;
  double e = d;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol = 0.5 * opt.width_tol * std::max(1.0, std::abs(b));
    const double m = 0.5 * (c - b);
    if (std::abs(fb) <= opt.value_tol || std::abs(m) <= tol || fb == 0.0) return {b, fb, it};

    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double p;
      double q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) {
        q = -q;
      } else {
        p = -p;
      }
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = d;
      }
    } else {
      d = m;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol ? d : (m > 0.0 ? tol : -tol);
    fb = f(b);
  }
  std::ostringstream msg;
  msg << "root finder did not converge in " << opt.max_iterations << " iterations near x = " << b;
  throw NumericalError(msg.str());
}

template <class F>
Root solve(F&& f, double a, double b, const Options& opt = {}) {
  const double fa = f(a);
  const double fb = f(b);
  return solve(f, a, b, fa, fb, opt);
}

}  // namespace enrichci::roots
