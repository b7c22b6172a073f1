#include "enrichci/designs.hpp"

#include "enrichci/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace enrichci {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::vector<int> range_set(int first, int last) {
  std::vector<int> out;
  for (int m = first; m <= last; ++m) out.push_back(m);
  return out;
}

double share_of(const TrialDesign& design, std::span<const int> members) {
  double share = 0.0;
  for (int m : members) share += design.p[m - 1];
  return share;
}

void check_stage1(const TrialDesign& design, const Stage1Summary& s1) {
  if (static_cast<int>(s1.means.size()) != design.k) {
    throw ConfigError("stage 1 summary needs one mean per subpopulation");
  }
  for (double v : s1.means) {
    if (!std::isfinite(v)) throw ConfigError("stage 1 means must be finite");
  }
}

void require_two(const TrialDesign& design, std::string_view rule) {
  if (design.k != 2) {
    throw ConfigError(std::string(rule) + " is defined for exactly two subpopulations");
  }
}

// Target for the selected set, constrained through its own stage-1 mean.
TargetBounds selected_target(const TrialDesign& design, const Stage1Summary& s1,
                             std::vector<int> members, double lower, double upper) {
  TargetBounds t;
  const double share = share_of(design, members);
  t.stage1_statistic = population_mean(design, members, s1.means);
  t.target.members = std::move(members);
  t.lower = lower;
  t.upper = upper;
  t.se1 = design.stage1_se(share);
  t.se2 = design.stage2_se(1.0);
  return t;
}

// When the full population continues past a threshold `full_cut` on its
// stage-1 mean, conditioning on the other subpopulations turns that event
// into a lower bound on each subpopulation mean.
void add_co_primary(const TrialDesign& design, const Stage1Summary& s1, double full_cut,
                    InterimDecision& decision) {
  for (int m = 1; m <= design.k; ++m) {
    double rest = 0.0;
    for (int j = 1; j <= design.k; ++j) {
      if (j != m) rest += design.p[j - 1] * s1.means[j - 1];
    }
    const double pm = design.p[m - 1];
    TargetBounds t;
    t.target.members = {m};
    t.target.co_primary = true;
    t.lower = (full_cut - rest) / pm;
    t.upper = kInfinity;
    t.se1 = design.stage1_se(pm);
    t.se2 = design.stage2_se(pm);
    t.stage1_statistic = s1.means[m - 1];
    decision.targets.push_back(std::move(t));
  }
}

}  // namespace

void TrialDesign::validate() const {
  require(k >= 1, "k must be at least 1");
  require(static_cast<int>(p.size()) == k, "p must have k entries");
  double total = 0.0;
  for (double v : p) {
    require(std::isfinite(v) && v > 0.0, "p entries must be positive");
    total += v;
  }
  require(std::abs(total - 1.0) <= 1e-12, "p must sum to 1");
  require(n1 > 0, "n1 must be a positive integer");
  require(n2 > 0, "n2 must be a positive integer");
  require(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
  require(alpha > 0.0 && alpha < 0.5, "alpha must lie in (0, 0.5)");
}

double TrialDesign::stage1_se(double share) const {
  return 2.0 * sigma / std::sqrt(share * n1);
}

double TrialDesign::stage2_se(double share) const {
  return 2.0 * sigma / std::sqrt(share * n2);
}

double Stage1Summary::full_mean(const TrialDesign& design) const {
  return std::inner_product(design.p.begin(), design.p.end(), means.begin(), 0.0);
}

std::string Target::id(int k) const {
  if (!co_primary && static_cast<int>(members.size()) == k) return "full";
  std::string out;
  for (int m : members) {
    if (!out.empty()) out += '+';
    out += 'S' + std::to_string(m);
  }
  return out;
}

ConditionalNormal TargetBounds::family() const {
  return ConditionalNormal(stage1_statistic, se1, se2, lower, upper);
}

std::string InterimDecision::label(int k) const {
  if (stopped()) return "stop";
  if (static_cast<int>(selected.size()) == k) return "full";
  std::string out = "enrich";
  for (int m : selected) out += '_' + std::to_string(m);
  return out;
}

const TargetBounds& InterimDecision::bounds_for(const std::string& target_id, int k) const {
  for (const auto& t : targets) {
    if (t.target.id(k) == target_id) return t;
  }
  throw ContractError("target '" + target_id + "' is not part of this decision");
}

std::string_view to_string(RuleKind kind) noexcept {
  switch (kind) {
    case RuleKind::d1:
      return "d1";
    case RuleKind::d2:
      return "d2";
    case RuleKind::kimani2015:
      return "kimani2015";
    case RuleKind::kimani2018:
      return "kimani2018";
  }
  return "d2";
}

RuleKind parse_rule_kind(std::string_view name) {
  if (name == "d1" || name == "D1") return RuleKind::d1;
  if (name == "d2" || name == "D2") return RuleKind::d2;
  if (name == "kimani2015") return RuleKind::kimani2015;
  if (name == "kimani2018") return RuleKind::kimani2018;
  throw ConfigError("unknown rule type '" + std::string(name) + "'");
}

void DecisionRule::validate(const TrialDesign& design) const {
  require(std::isfinite(threshold), "rule.threshold must be finite");
  switch (kind) {
    case RuleKind::d1:
    case RuleKind::d2:
    case RuleKind::kimani2015:
      require_two(design, to_string(kind));
      break;
    case RuleKind::kimani2018:
      require(design.k >= 2, "kimani2018 needs at least two subpopulations");
      break;
  }
  if (co_primary) {
    require(kind == RuleKind::d1 || kind == RuleKind::d2,
            "co_primary is only supported for the d1 and d2 rules");
  }
}

double population_mean(const TrialDesign& design, std::span<const int> members,
                       std::span<const double> means) {
  double num = 0.0;
  double den = 0.0;
  for (int m : members) {
    num += design.p[m - 1] * means[m - 1];
    den += design.p[m - 1];
  }
  return num / den;
}

double target_effect(const TrialDesign& design, const Target& target,
                     std::span<const double> deltas) {
  return population_mean(design, target.members, deltas);
}

InterimDecision apply_d1(const TrialDesign& design, const Stage1Summary& s1, double z_star,
                         bool co_primary) {
  require_two(design, "d1");
  check_stage1(design, s1);
  const double p1 = design.p[0];
  const double p2 = design.p[1];
  const double d1 = s1.means[0];
  const double d2 = s1.means[1];
  const double full_cut = 2.0 * design.sigma * z_star / std::sqrt(design.n1);

  InterimDecision out;
  const double z_full = s1.full_mean(design) / design.stage1_se(1.0);
  if (z_full > z_star) {
    out.selected = {1, 2};
    out.targets.push_back(selected_target(design, s1, {1, 2}, full_cut, kInfinity));
    if (co_primary) add_co_primary(design, s1, full_cut, out);
    return out;
  }
  const double z1 = d1 / design.stage1_se(p1);
  const double z2 = d2 / design.stage1_se(p2);
  if (z1 >= z2) {
    out.selected = {1};
    out.targets.push_back(selected_target(design, s1, {1}, std::sqrt(p2 / p1) * d2,
                                          (full_cut - p2 * d2) / p1));
  } else {
    out.selected = {2};
    out.targets.push_back(selected_target(design, s1, {2}, std::sqrt(p1 / p2) * d1,
                                          (full_cut - p1 * d1) / p2));
  }
  return out;
}

InterimDecision apply_d2(const TrialDesign& design, const Stage1Summary& s1, double delta_star,
                         bool co_primary) {
  require_two(design, "d2");
  check_stage1(design, s1);
  const double p1 = design.p[0];
  const double p2 = design.p[1];
  const double d1 = s1.means[0];
  const double d2 = s1.means[1];

  InterimDecision out;
  if (s1.full_mean(design) > delta_star) {
    out.selected = {1, 2};
    out.targets.push_back(selected_target(design, s1, {1, 2}, delta_star, kInfinity));
    if (co_primary) add_co_primary(design, s1, delta_star, out);
    return out;
  }
  if (std::max(d1, d2) <= delta_star) return out;
  if (d1 >= d2) {
    out.selected = {1};
    out.targets.push_back(
        selected_target(design, s1, {1}, delta_star, (delta_star - p2 * d2) / p1));
  } else {
    out.selected = {2};
    out.targets.push_back(
        selected_target(design, s1, {2}, delta_star, (delta_star - p1 * d1) / p2));
  }
  return out;
}

InterimDecision apply_kimani2015(const TrialDesign& design, const Stage1Summary& s1,
                                 double delta_star) {
  require_two(design, "kimani2015");
  check_stage1(design, s1);
  const double p2 = design.p[1];
  const double v = s1.means[0] - s1.full_mean(design);

  InterimDecision out;
  AuxiliaryConstraint aux{"S1-full", v, -kInfinity, kInfinity};
  if (v > delta_star) {
    out.selected = {1};
    out.targets.push_back(
        selected_target(design, s1, {1}, s1.means[1] + delta_star / p2, kInfinity));
    aux.lower = delta_star;
  } else {
    out.selected = {1, 2};
    TargetBounds t = selected_target(design, s1, {1, 2}, -kInfinity, kInfinity);
    t.unaltered = true;
    out.targets.push_back(std::move(t));
    aux.upper = delta_star;
  }
  out.auxiliary = aux;
  return out;
}

InterimDecision apply_kimani2018(const TrialDesign& design, const Stage1Summary& s1,
                                 double delta_star) {
  if (design.k < 2) throw ConfigError("kimani2018 needs at least two subpopulations");
  check_stage1(design, s1);
  const int k = design.k;

  // Cumulative prevalences and prevalence-weighted sums of the nested sets.
  std::vector<double> share(k + 1, 0.0);
  std::vector<double> weighted(k + 1, 0.0);
  for (int m = 1; m <= k; ++m) {
    share[m] = share[m - 1] + design.p[m - 1];
    weighted[m] = weighted[m - 1] + design.p[m - 1] * s1.means[m - 1];
  }

  InterimDecision out;
  int chosen = 0;
  for (int m = k; m >= 1; --m) {
    if (weighted[m] / share[m] > delta_star) {
      chosen = m;
      break;
    }
  }
  if (chosen == 0) return out;

  double upper = kInfinity;
  for (int j = chosen + 1; j <= k; ++j) {
    const double cap = (share[j] * delta_star - (weighted[j] - weighted[chosen])) / share[chosen];
    upper = std::min(upper, cap);
  }
  out.selected = range_set(1, chosen);
  out.targets.push_back(selected_target(design, s1, out.selected, delta_star, upper));
  return out;
}

InterimDecision decide(const TrialDesign& design, const DecisionRule& rule,
                       const Stage1Summary& s1) {
  switch (rule.kind) {
    case RuleKind::d1:
      return apply_d1(design, s1, rule.threshold, rule.co_primary);
    case RuleKind::d2:
      return apply_d2(design, s1, rule.threshold, rule.co_primary);
    case RuleKind::kimani2015:
      return apply_kimani2015(design, s1, rule.threshold);
    case RuleKind::kimani2018:
      return apply_kimani2018(design, s1, rule.threshold);
  }
  throw ConfigError("unknown decision rule");
}

double stage2_estimate(const TrialDesign& design, const Target& target, const Stage2Summary& s2) {
  if (!target.co_primary && s2.selected_mean) return *s2.selected_mean;
  for (int m : target.members) {
    if (m < 1 || m > static_cast<int>(s2.means.size()) || !std::isfinite(s2.means[m - 1])) {
      throw ContractError("stage 2 summary lacks the mean for subpopulation " +
                          std::to_string(m));
    }
  }
  return population_mean(design, target.members, s2.means);
}

double pooled_estimate(const TargetBounds& bounds, double stage1, double stage2) {
  const double t1 = 1.0 / (bounds.se1 * bounds.se1);
  const double t2 = 1.0 / (bounds.se2 * bounds.se2);
  return (t1 * stage1 + t2 * stage2) / (t1 + t2);
}

double pooled_estimate(const TrialDesign& design, const InterimDecision& decision,
                       const Stage1Summary& s1, const Stage2Summary& s2,
                       const std::string& target_id) {
  const TargetBounds& b = decision.bounds_for(target_id, design.k);
  return pooled_estimate(b, population_mean(design, b.target.members, s1.means),
                         stage2_estimate(design, b.target, s2));
}

IntervalEstimate target_interval(const TargetBounds& bounds, double observed, double alpha,
                                 Method method, std::string target_id) {
  const ConditionalNormal family = bounds.family();
  if (method == Method::naive || bounds.unaltered || family.untruncated()) {
    IntervalEstimate ci = naive_ci(observed, family.sigma12(), alpha, std::move(target_id));
    ci.method = method;
    return ci;
  }
  if (method == Method::umau) return umau_ci(family, observed, alpha, std::move(target_id));
  return ctost_ci(family, observed, alpha, std::move(target_id));
}

std::vector<IntervalEstimate> confidence_intervals(const TrialDesign& design,
                                                   const InterimDecision& decision,
                                                   const Stage1Summary& s1,
                                                   const Stage2Summary& s2,
                                                   std::span<const Method> methods) {
  if (decision.stopped()) {
    throw ContractError("no estimand: the trial stopped for futility at the interim");
  }
  std::vector<IntervalEstimate> out;
  for (const auto& b : decision.targets) {
    const std::string id = b.target.id(design.k);
    const double observed =
        pooled_estimate(b, population_mean(design, b.target.members, s1.means),
                        stage2_estimate(design, b.target, s2));
    for (Method m : methods) out.push_back(target_interval(b, observed, design.alpha, m, id));
  }
  return out;
}

}  // namespace enrichci
