#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace enrichci::quadrature {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
struct Result {
  Vec<N> value{};
  Vec<N> abs_error{};
  int evaluations = 0;
  bool converged = false;
};

struct Tolerance {
  double abs = 1e-10;
  double rel = 1e-8;
  int max_segments = 256;
};

namespace detail {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
using Gauss = boost::math::quadrature::gauss<double, 10>;

template <std::size_t N>
struct Segment {
  double a;
  double b;
  Vec<N> value;
  Vec<N> error;
  double worst;
};

// One 21-point Kronrod / 10-point Gauss pass on [a, b]. The error estimate
// is the QUADPACK scaling of |K - G| against the absolute variation.
template <std::size_t N, class F>
Segment<N> gk21(F& f, double a, double b) {
  const auto& xk = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss::weights();
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  std::array<Vec<N>, 21> fx;
  fx[0] = f(center);
  for (std::size_t i = 1; i < xk.size(); ++i) {
    fx[2 * i - 1] = f(center - half * xk[i]);
    fx[2 * i] = f(center + half * xk[i]);
  }

  Segment<N> seg{a, b, {}, {}, 0.0};
  for (std::size_t c = 0; c < N; ++c) {
    double kron = fx[0][c] * wk[0];
    double gauss = 0.0;
    for (std::size_t i = 1; i < xk.size(); ++i) {
      const double pair = fx[2 * i - 1][c] + fx[2 * i][c];
      kron += pair * wk[i];
      if (i % 2 == 1) gauss += pair * wg[i / 2];
    }
    const double mean = 0.5 * kron;
    double asc = wk[0] * std::abs(fx[0][c] - mean);
    for (std::size_t i = 1; i < xk.size(); ++i) {
      asc += wk[i] * (std::abs(fx[2 * i - 1][c] - mean) + std::abs(fx[2 * i][c] - mean));
    }
    kron *= half;
    gauss *= half;
    asc *= std::abs(half);
    double err = std::abs(kron - gauss);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    err = std::max(err, 50.0 * 2.2e-16 * std::abs(kron));
    seg.value[c] = kron;
    seg.error[c] = err;
    seg.worst = std::max(seg.worst, err);
  }
  return seg;
}

}  // namespace detail

// Globally adaptive integration of a vector-valued integrand over a finite
// interval: the segment with the largest error estimate is bisected until
// every component meets max(abs, rel * |value|).
template <std::size_t N, class F>
Result<N> integrate(F&& f, double a, double b, const Tolerance& tol = {}) {
  Result<N> out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::vector<detail::Segment<N>> segs;
  segs.reserve(16);
  segs.push_back(detail::gk21<N>(f, a, b));
  out.evaluations = 21;

  auto accept = [&](const Vec<N>& value, const Vec<N>& error) {
    for (std::size_t c = 0; c < N; ++c) {
      if (error[c] > std::max(tol.abs, tol.rel * std::abs(value[c]))) return false;
    }
    return true;
  };

  while (true) {
    Vec<N> total{};
    Vec<N> err{};
    for (const auto& s : segs) {
      for (std::size_t c = 0; c < N; ++c) {
        total[c] += s.value[c];
        err[c] += s.error[c];
      }
    }
    out.value = total;
    out.abs_error = err;
    if (accept(total, err)) {
      out.converged = true;
      return out;
    }
    if (static_cast<int>(segs.size()) >= tol.max_segments) return out;

    auto worst = std::max_element(segs.begin(), segs.end(),
                                  [](const auto& x, const auto& y) { return x.worst < y.worst; });
    const double lo = worst->a;
    const double hi = worst->b;
    const double mid = 0.5 * (lo + hi);
    if (!(mid > std::min(lo, hi) && mid < std::max(lo, hi))) return out;
    *worst = detail::gk21<N>(f, lo, mid);
    segs.push_back(detail::gk21<N>(f, mid, hi));
    out.evaluations += 42;
  }
}

template <class F>
Result<1> integrate_scalar(F&& f, double a, double b, const Tolerance& tol = {}) {
  return integrate<1>([&](double x) { return Vec<1>{f(x)}; }, a, b, tol);
}

}  // namespace enrichci::quadrature
