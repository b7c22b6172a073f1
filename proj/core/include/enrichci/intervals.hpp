#pragma once

#include "enrichci/condnorm.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace enrichci {

enum class Method { naive, umau, tost };

std::string_view to_string(Method m) noexcept;
// Throws std::invalid_argument on an unknown name.
Method parse_method(std::string_view name);

// Acceptance region [c1, c2] of the conditional two-sided UMPU test.
struct CriticalPair {
  double c1 = 0.0;
  double c2 = 0.0;
};

struct IntervalEstimate {
  double lower = 0.0;
  double upper = 0.0;
  Method method = Method::naive;
  double alpha = 0.05;
  std::string target;

  [[nodiscard]] double width() const noexcept { return upper - lower; }
  [[nodiscard]] bool contains(double value) const noexcept {
    return lower <= value && value <= upper;
  }
};

// Residuals of the two defining equations of the UMPU acceptance region:
//   size:     P(c1 <= X <= c2) - (1 - alpha)
//   moment:   E[X 1{c1 <= X <= c2}] - (1 - alpha) E[X]
struct UmpuResiduals {
  double size = 0.0;
  double moment = 0.0;
};

UmpuResiduals umpu_residuals(const ConditionalNormal& model, double alpha, CriticalPair pair);

// Reference solver. With F the conditional cdf at the model's delta, finds
// c1 such that the partial moment over [c1, F^-1(F(c1) + 1 - alpha)] equals
// (1 - alpha) times the mean, by bracketed root-finding on the lower tail
// probability F(c1) in (1e-8, alpha (1 - 1e-8)). Requires 0 < alpha < 0.5.
CriticalPair solve_umpu(const ConditionalNormal& model, double alpha);

// Newton iteration on both defining equations jointly, started from `guess`
// (or an equal-tail normal approximation). Falls back to solve_umpu when it
// fails to converge. This is the path used during interval inversion.
CriticalPair solve_umpu_fast(const ConditionalNormal& model, double alpha,
                             std::optional<CriticalPair> guess = std::nullopt);

// Conditional UMAU interval: lower solves C2(lower) = observed, upper solves
// C1(upper) = observed. `family` supplies the scales and truncation bounds;
// its delta is ignored.
IntervalEstimate umau_ci(const ConditionalNormal& family, double observed, double alpha,
                         std::string target = {});

// Conditional two one-sided tests: F_lower(observed) = 1 - alpha/2 and
// F_upper(observed) = alpha/2. Requires 0 < alpha < 1.
IntervalEstimate ctost_ci(const ConditionalNormal& family, double observed, double alpha,
                          std::string target = {});

// observed -/+ z_{1 - alpha/2} se.
IntervalEstimate naive_ci(double observed, double se, double alpha, std::string target = {});

}  // namespace enrichci
