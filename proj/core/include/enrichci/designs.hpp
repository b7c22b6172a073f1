#pragma once

#include "enrichci/condnorm.hpp"
#include "enrichci/intervals.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace enrichci {

// Two-stage enrichment trial. Stage 1 enrolls n1 patients from the full
// population in proportions p; stage 2 enrolls n2 patients from the selected
// subpopulations in proportion p_m / p_selected. Half of every stratum is
// randomized to treatment.
struct TrialDesign {
  int k = 2;
  std::vector<double> p{0.5, 0.5};
  int n1 = 0;
  int n2 = 0;
  double sigma = 1.0;
  double alpha = 0.05;

  // Throws ConfigError naming the offending field.
  void validate() const;

  // Standard error of a stage-1 mean difference over the given share of the population.
  [[nodiscard]] double stage1_se(double share) const;
  [[nodiscard]] double stage2_se(double share) const;
};

// Per-subpopulation treatment-minus-control mean differences.
struct Stage1Summary {
  std::vector<double> means;

  [[nodiscard]] double full_mean(const TrialDesign& design) const;
};

struct Stage2Summary {
  // Indexed by subpopulation; entries for unselected subpopulations are ignored.
  std::vector<double> means;
  // Mean difference over the whole selected population, when reported
  // directly. Otherwise derived from `means` with weights p_m / p_selected.
  std::optional<double> selected_mean;
};

// The estimand Delta_S for a set S of subpopulations (1-based members).
// Named "full" when S covers every subpopulation, otherwise "S1", "S1+S3", ...
struct Target {
  std::vector<int> members;
  bool co_primary = false;

  [[nodiscard]] std::string id(int k) const;
};

struct TargetBounds {
  Target target;
  double lower = -kInfinity;
  double upper = kInfinity;
  double se1 = 1.0;
  double se2 = 1.0;
  // Realized stage-1 statistic the bounds constrain.
  double stage1_statistic = 0.0;
  // Selection constrains only an auxiliary statistic independent of the
  // target's stage-1 estimate; the conditional law is the unconditional one.
  bool unaltered = false;

  // Conditional model of the pooled estimate; delta is a placeholder for
  // callers that only need the family.
  [[nodiscard]] ConditionalNormal family() const;
};

// Constraint on an auxiliary statistic (decision rules outside the plain
// interval-on-the-estimator class).
struct AuxiliaryConstraint {
  std::string statistic;
  double value = 0.0;
  double lower = -kInfinity;
  double upper = kInfinity;
};

struct InterimDecision {
  std::vector<int> selected;  // empty means futility stop
  std::vector<TargetBounds> targets;
  std::optional<AuxiliaryConstraint> auxiliary;

  [[nodiscard]] bool stopped() const noexcept { return selected.empty(); }
  // "full", "stop" or "enrich_1", "enrich_1_2", ...
  [[nodiscard]] std::string label(int k) const;
  [[nodiscard]] const TargetBounds& bounds_for(const std::string& target_id, int k) const;
};

enum class RuleKind { d1, d2, kimani2015, kimani2018 };

std::string_view to_string(RuleKind kind) noexcept;
RuleKind parse_rule_kind(std::string_view name);

struct DecisionRule {
  RuleKind kind = RuleKind::d2;
  // Z* for D1, Delta* otherwise.
  double threshold = 0.0;
  // Add per-subpopulation targets when the full population continues (D1, D2).
  bool co_primary = false;

  void validate(const TrialDesign& design) const;
};

// Continue with the full population when the stage-1 Z statistic exceeds
// z_star, else enrich to the subpopulation with the larger Z (ties go to 1).
InterimDecision apply_d1(const TrialDesign& design, const Stage1Summary& s1, double z_star,
                         bool co_primary = false);

// Full population if its mean exceeds delta_star; else the subpopulation with
// the larger mean if that exceeds delta_star; else stop for futility.
InterimDecision apply_d2(const TrialDesign& design, const Stage1Summary& s1, double delta_star,
                         bool co_primary = false);

// Enrich to subpopulation 1 when its mean exceeds the full-population mean
// by more than delta_star; otherwise continue with the full population.
InterimDecision apply_kimani2015(const TrialDesign& design, const Stage1Summary& s1,
                                 double delta_star);

// Select the largest prefix {1..m} whose pooled stage-1 mean exceeds delta_star.
InterimDecision apply_kimani2018(const TrialDesign& design, const Stage1Summary& s1,
                                 double delta_star);

InterimDecision decide(const TrialDesign& design, const DecisionRule& rule,
                       const Stage1Summary& s1);

// Mean of the stage-1 (or stage-2) differences over a set of subpopulations,
// weighted by prevalence.
double population_mean(const TrialDesign& design, std::span<const int> members,
                       std::span<const double> means);

// True effect Delta_S of a set of subpopulations.
double target_effect(const TrialDesign& design, const Target& target,
                     std::span<const double> deltas);

// Precision-weighted combination of the stage-1 and stage-2 estimates.
double pooled_estimate(const TrialDesign& design, const InterimDecision& decision,
                       const Stage1Summary& s1, const Stage2Summary& s2,
                       const std::string& target_id);

double pooled_estimate(const TargetBounds& bounds, double stage1, double stage2);

// Stage-2 estimate for a target.
double stage2_estimate(const TrialDesign& design, const Target& target, const Stage2Summary& s2);

// One interval per (target, method), targets in decision order.
std::vector<IntervalEstimate> confidence_intervals(const TrialDesign& design,
                                                   const InterimDecision& decision,
                                                   const Stage1Summary& s1,
                                                   const Stage2Summary& s2,
                                                   std::span<const Method> methods);

IntervalEstimate target_interval(const TargetBounds& bounds, double observed, double alpha,
                                 Method method, std::string target_id);

}  // namespace enrichci
