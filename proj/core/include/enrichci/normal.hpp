#pragma once

// Standard normal helpers with tail-safe differences and logarithms.

namespace enrichci::normal {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double pdf(double x) noexcept;
double log_pdf(double x) noexcept;

double cdf(double x) noexcept;
// Upper tail 1 - cdf(x), computed without cancellation.
double sf(double x) noexcept;

// log cdf(x), accurate for x far into the lower tail.
double log_cdf(double x) noexcept;

// cdf(b) - cdf(a) for a <= b, picking the complementary form when both
// arguments share a sign. Infinite arguments are allowed.
double prob(double a, double b) noexcept;

// log(cdf(b) - cdf(a)); finite whenever the difference is representable
// in log space even if it underflows as a double.
double log_prob(double a, double b) noexcept;

// (pdf(a) - pdf(b)) / (cdf(b) - cdf(a)): the standardized mean shift of a
// normal truncated to (a, b).
double truncated_mean_shift(double a, double b) noexcept;

double quantile(double p);

}  // namespace enrichci::normal
