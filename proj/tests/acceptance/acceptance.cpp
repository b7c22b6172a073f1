// Acceptance checks. Usage: enrichci_acceptance [table1|table2|table3|table4|properties|all]
// [--fast]. One PASS/FAIL line per check; exit status 1 if any check fails.
// --fast runs the simulation tables at 20,000 replicates with bands widened
// from 0.5 to 1.0 percentage points.

#include "enrichci/cli.hpp"
#include "enrichci/normal.hpp"
#include "enrichci/sim.hpp"
#include "properties.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace enrichci;

namespace {

struct Tier {
  std::int64_t replicates = 100000;
  double band = 0.005;
};

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s  %-58s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
}

void info(const std::string& name, const std::string& detail) {
  std::printf("INFO  %-58s %s\n", name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * x);
  return buf;
}

std::string num(double x, int decimals = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

void within(const std::string& name, double value, double target, double tol, bool percent) {
  const bool ok = std::abs(value - target) <= tol;
  const std::string v = percent ? pct(value) : num(value);
  const std::string t = percent ? pct(target) : num(target);
  const std::string b = percent ? num(100.0 * tol, 1) + " pp" : num(tol, 2);
  report(ok, name, v + " (target " + t + " +/- " + b + ")");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Scenario rosenblum(RuleKind kind, double threshold, std::vector<double> deltas, bool co_primary,
                   std::int64_t replicates, std::uint64_t seed) {
  Scenario s;
  s.design = TrialDesign{2, {0.5, 0.5}, 244, 244, 8.0, 0.05};
  s.rule = DecisionRule{kind, threshold, co_primary};
  s.true_deltas = std::move(deltas);
  s.replicates = replicates;
  s.seed = seed;
  return s;
}

// Estimated proportion within 3 Monte Carlo standard errors of its exact value.
void near_exact(const std::string& name, double estimate, double exact, std::int64_t n) {
  const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(n));
  report(std::abs(estimate - exact) <= 3.0 * se, name,
         pct(estimate) + " (exact " + pct(exact) + ", 3 SE = " + num(300.0 * se, 2) + " pp)");
}

void table1() {
  const auto start = std::chrono::steady_clock::now();
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::cmd_example(out, err);
  const double elapsed = seconds_since(start);
  report(code == cli::kExitOk, "table1: nine intervals within 0.001",
         code == cli::kExitOk ? "all cells match" : err.str());

  const TrialDesign design{2, {0.5, 0.5}, 200, 100, 0.36, 0.05};
  const Stage1Summary s1{{0.113, 0.013}};
  const Stage2Summary s2{{0.155, -0.064}, 0.045};
  const auto decision = decide(design, DecisionRule{RuleKind::d2, 0.025, true}, s1);
  const double want[3] = {0.057, 0.127, -0.013};
  const char* ids[3] = {"full", "S1", "S2"};
  bool ok = true;
  std::string got;
  for (int t = 0; t < 3; ++t) {
    const double v = pooled_estimate(design, decision, s1, s2, ids[t]);
    ok = ok && std::abs(v - want[t]) <= 0.0005;
    got += std::string(ids[t]) + "=" + num(v) + " ";
  }
  report(ok, "table1: pooled estimates 0.057/0.127/-0.013", got);
  report(elapsed < 1.0, "table1: runtime under 1 s", num(elapsed, 3) + " s");
}

void table2(const Tier& tier) {
  const auto start = std::chrono::steady_clock::now();
  const auto r = run_scenario(rosenblum(RuleKind::d1, 1.0, {0.0, 0.0}, false, tier.replicates,
                                        20240601));
  const double elapsed = seconds_since(start);
  const std::vector<std::string> branches{"full", "enrich_1", "enrich_2"};
  const double proportions[3] = {0.1590, 0.4200, 0.4210};
  const double ratios[3] = {1.27, 1.12, 1.12};
  for (int i = 0; i < 3; ++i) {
    const BranchSummary* b = r.branch(branches[i]);
    if (b == nullptr) {
      report(false, "table2: branch " + branches[i], "never observed");
      continue;
    }
    within("table2: proportion " + branches[i], b->proportion, proportions[i], tier.band, true);
    within("table2: umau coverage " + branches[i], b->method(Method::umau).coverage, 0.95,
           tier.band, true);
    within("table2: tost coverage " + branches[i], b->method(Method::tost).coverage, 0.95,
           tier.band, true);
    within("table2: umau width ratio " + branches[i], b->method(Method::umau).width_ratio,
           ratios[i], 0.02, false);
    info("table2: tost width ratio " + branches[i], num(b->method(Method::tost).width_ratio));
  }
  // Under a null effect the full-population Z is standard normal, and ties
  // between the subpopulations have probability zero.
  const double go_full = normal::sf(1.0);
  const double exact[3] = {go_full, 0.5 * (1.0 - go_full), 0.5 * (1.0 - go_full)};
  for (int i = 0; i < 3; ++i) {
    const BranchSummary* b = r.branch(branches[i]);
    near_exact("table2: proportion " + branches[i] + " vs closed form",
               b != nullptr ? b->proportion : 0.0, exact[i], r.replicates);
  }
  if (const BranchSummary* full = r.branch("full")) {
    const double c = full->method(Method::naive).coverage;
    report(c < 0.90, "table2: naive full-population coverage below 90%", pct(c));
  }
  report(elapsed < 600.0, "table2: runtime under 10 min",
         num(elapsed, 1) + " s on " + std::to_string(default_thread_count()) + " threads");
}

void table3(const Tier& tier) {
  const auto r = run_scenario(rosenblum(RuleKind::d2, 1.0, {0.0, 0.0}, false, tier.replicates,
                                        20240602));
  const BranchSummary* stop = r.branch("stop");
  within("table3: stop proportion", stop != nullptr ? stop->proportion : 0.0, 0.5726, tier.band,
         true);
  // Stop exactly when both stage-1 means are at most the threshold.
  const double stop_exact = std::pow(normal::cdf(1.0 / (16.0 / std::sqrt(122.0))), 2);
  near_exact("table3: stop proportion vs closed form", stop != nullptr ? stop->proportion : 0.0,
             stop_exact, r.replicates);
  within("table3: overall umau coverage", r.overall.method(Method::umau).coverage, 0.9492,
         tier.band, true);
  within("table3: overall umau width ratio", r.overall.method(Method::umau).width_ratio, 1.22,
         0.02, false);
  info("table3: overall tost coverage", pct(r.overall.method(Method::tost).coverage));
}

void table4(const Tier& tier) {
  struct Row {
    std::string name;
    std::vector<double> deltas;
  };
  const std::vector<Row> rows{{"(0.5,0.5)", {0.5, 0.5}},
                              {"(0.5,0.2)", {0.5, 0.2}},
                              {"(0.5,0)", {0.5, 0.0}}};
  std::uint64_t seed = 20240603;
  for (const auto& row : rows) {
    const auto r = run_scenario(rosenblum(RuleKind::d2, 1.0, row.deltas, true, tier.replicates,
                                          seed++));
    for (const auto& target : r.co_primary) {
      for (Method m : {Method::umau, Method::tost}) {
        within("table4 " + row.name + ": " + std::string(to_string(m)) + " coverage " +
                   target.branch,
               target.method(m).coverage, 0.95, tier.band, true);
      }
      if (row.deltas[1] == 0.0) {
        const double c = target.method(Method::naive).coverage;
        report(c < 0.92, "table4 " + row.name + ": naive coverage " + target.branch + " below 92%",
               pct(c));
      } else {
        info("table4 " + row.name + ": naive coverage " + target.branch,
             pct(target.method(Method::naive).coverage));
      }
    }
  }
  // Reference values for the co-primary naive coverages match this null scenario.
  const auto r = run_scenario(rosenblum(RuleKind::d2, 1.0, {0.0, 0.0}, true, tier.replicates,
                                        seed));
  for (const auto& target : r.co_primary) {
    info("table4 (0,0): naive coverage " + target.branch,
         pct(target.method(Method::naive).coverage));
  }
}

void properties() {
  auto show = [](const std::string& name, const props::Outcome& o) {
    report(o.pass, "properties: " + name,
           o.detail.empty() ? std::to_string(o.violations) + " violations in " +
                                  std::to_string(o.checked) + " checks"
                            : o.detail);
  };
  show("monotonicity (50 models)", props::monotonicity(50, 101));
  show("critical pair residuals <= 1e-7", props::umpu_residuals(50, 102, 1e-7));
  show("test inversion duality", props::duality(50, 103));
  show("endpoint monotonicity", props::endpoint_monotonicity(50, 104));
  show("untruncated reduction (100 cases)", props::untruncated_reduction(100, 105, 1e-6));
  show("conditional coverage (3 x 20000 draws)", props::conditional_coverage(20000, 106));
  show("decision partitions (1e5 draws)", props::decision_partitions(100000, 107));
  show("sufficient statistics vs patients (50k)",
       props::sufficient_statistic_fidelity(50000, 108));
}

}  // namespace

int main(int argc, char** argv) {
  std::string which = "all";
  Tier tier;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--fast") {
      tier = Tier{20000, 0.01};
    } else {
      which = arg;
    }
  }
  const std::map<std::string, std::function<void()>> criteria{
      {"table1", table1},
      {"table2", [&] { table2(tier); }},
      {"table3", [&] { table3(tier); }},
      {"table4", [&] { table4(tier); }},
      {"properties", properties},
  };
  try {
    if (which == "all") {
      for (const auto& [name, fn] : criteria) fn();
    } else if (auto it = criteria.find(which); it != criteria.end()) {
      it->second();
    } else {
      std::cerr << "unknown criterion '" << which << "'\n";
      return 2;
    }
  } catch (const std::exception& e) {
    report(false, which, std::string("error: ") + e.what());
  }
  std::printf("%s: %d failing check(s)\n", which.c_str(), failures);
  return failures == 0 ? 0 : 1;
}
