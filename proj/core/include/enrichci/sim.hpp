#pragma once

#include "enrichci/designs.hpp"
#include "enrichci/intervals.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace enrichci {

struct Scenario {
  TrialDesign design;
  DecisionRule rule;
  std::vector<double> true_deltas;
  std::int64_t replicates = 1;
  std::uint64_t seed = 0;
  std::vector<Method> methods{Method::naive, Method::umau, Method::tost};

  // Throws ConfigError.
  void validate() const;
};

// Generator for one replicate. Replicate i of a given seed always sees the
// same stream, whichever thread runs it.
using ReplicateRng = std::mt19937_64;
ReplicateRng replicate_rng(std::uint64_t seed, std::uint64_t index);

// Stage-1 mean differences: independent N(delta_m, (2 sigma / sqrt(p_m n1))^2).
Stage1Summary draw_stage1(const Scenario& scenario, ReplicateRng& rng);

// Stage-2 mean differences for every selected subpopulation, each with
// n2 p_m / p_selected patients, and their prevalence-weighted combination.
// Throws ContractError for a futility stop.
Stage2Summary draw_stage2(const Scenario& scenario, const InterimDecision& decision,
                          ReplicateRng& rng);

struct MethodSummary {
  Method method = Method::naive;
  std::int64_t covered = 0;
  double coverage = 0.0;
  double mean_width = 0.0;
  // mean_width / naive mean_width over the same replicates.
  double width_ratio = 1.0;
  // Half-width of the 95% binomial band around `coverage`.
  double mc_halfwidth = 0.0;
};

struct BranchSummary {
  // Decision label ("full", "enrich_1", ...), "overall" for all continuing
  // trials, or the co-primary target id.
  std::string branch;
  std::int64_t count = 0;
  double proportion = 0.0;
  double proportion_se = 0.0;
  // One entry per requested method, in request order.
  std::vector<MethodSummary> methods;

  [[nodiscard]] const MethodSummary& method(Method m) const;
};

struct SimResult {
  std::int64_t replicates = 0;
  // Every observed decision, "full" first, then enrichments, then "stop".
  std::vector<BranchSummary> branches;
  // Pooled over every trial that continued to stage 2.
  BranchSummary overall;
  // Per-subpopulation rows when the rule has co-primary analysis enabled.
  std::vector<BranchSummary> co_primary;

  [[nodiscard]] const BranchSummary* branch(const std::string& label) const;
};

struct RunOptions {
  // 0: hardware concurrency capped by ENRICH_CI_THREADS.
  unsigned threads = 0;
};

unsigned default_thread_count();

// Results are identical for any thread count.
SimResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

// coverage -/+ 1.96 sqrt(coverage (1 - coverage) / n).
std::pair<double, double> mc_error_band(double coverage, std::int64_t n);

}  // namespace enrichci
