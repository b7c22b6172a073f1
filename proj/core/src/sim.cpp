#include "enrichci/sim.hpp"

#include "enrichci/errors.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace enrichci {

namespace {

constexpr std::size_t kMethodCount = 3;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t slot(Method m) { return static_cast<std::size_t>(m); }

struct TargetOutcome {
  bool co_primary = false;
  std::string id;
  std::array<double, kMethodCount> width{};
  std::array<bool, kMethodCount> covered{};
};

struct Outcome {
  std::vector<int> selected;
  std::vector<TargetOutcome> targets;
};

Outcome simulate_one(const Scenario& sc, const std::vector<Method>& methods, std::int64_t index) {
  ReplicateRng rng = replicate_rng(sc.seed, static_cast<std::uint64_t>(index));
  const Stage1Summary s1 = draw_stage1(sc, rng);
  const InterimDecision decision = decide(sc.design, sc.rule, s1);
  Outcome out;
  out.selected = decision.selected;
  if (decision.stopped()) return out;

  const Stage2Summary s2 = draw_stage2(sc, decision, rng);
  for (const auto& b : decision.targets) {
    TargetOutcome t;
    t.co_primary = b.target.co_primary;
    t.id = b.target.id(sc.design.k);
    const double truth = target_effect(sc.design, b.target, sc.true_deltas);
    const double observed =
        pooled_estimate(b, population_mean(sc.design, b.target.members, s1.means),
                        stage2_estimate(sc.design, b.target, s2));
    for (Method m : methods) {
      const IntervalEstimate ci = target_interval(b, observed, sc.design.alpha, m, t.id);
      t.width[slot(m)] = ci.width();
      t.covered[slot(m)] = ci.contains(truth);
    }
    out.targets.push_back(std::move(t));
  }
  return out;
}

// Running sums for one row of the result table.
struct Tally {
  std::int64_t count = 0;
  std::array<std::int64_t, kMethodCount> covered{};
  std::array<double, kMethodCount> width{};

  void add(const TargetOutcome& t) {
    ++count;
    for (std::size_t i = 0; i < kMethodCount; ++i) {
      covered[i] += t.covered[i] ? 1 : 0;
      width[i] += t.width[i];
    }
  }

  BranchSummary summarize(std::string label, std::int64_t total,
                          const std::vector<Method>& methods) const {
    BranchSummary row;
    row.branch = std::move(label);
    row.count = count;
    row.proportion = static_cast<double>(count) / static_cast<double>(total);
    row.proportion_se = std::sqrt(row.proportion * (1.0 - row.proportion) / total);
    for (Method m : methods) {
      MethodSummary s;
      s.method = m;
      if (count > 0) {
        const std::size_t i = slot(m);
        s.covered = covered[i];
        s.coverage = static_cast<double>(covered[i]) / static_cast<double>(count);
        s.mean_width = width[i] / static_cast<double>(count);
        const double naive = width[slot(Method::naive)];
        s.width_ratio = naive > 0.0 ? width[i] / naive : 1.0;
        s.mc_halfwidth = 1.96 * std::sqrt(s.coverage * (1.0 - s.coverage) / count);
      }
      row.methods.push_back(s);
    }
    return row;
  }
};

std::string label_of(const std::vector<int>& selected, int k) {
  InterimDecision d;
  d.selected = selected;
  return d.label(k);
}

// "full" first, then enrichments in lexicographic order of the selected set, "stop" last.
bool branch_before(const std::vector<int>& a, const std::vector<int>& b, int k) {
  auto rank = [k](const std::vector<int>& s) {
    if (s.empty()) return 2;
    return static_cast<int>(s.size()) == k ? 0 : 1;
  };
  if (rank(a) != rank(b)) return rank(a) < rank(b);
  return a < b;
}

}  // namespace

void Scenario::validate() const {
  design.validate();
  rule.validate(design);
  if (static_cast<int>(true_deltas.size()) != design.k) {
    throw ConfigError("deltas must have k entries");
  }
  for (double d : true_deltas) {
    if (!std::isfinite(d)) throw ConfigError("deltas must be finite");
  }
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (methods.empty()) throw ConfigError("methods must not be empty");
}

const MethodSummary& BranchSummary::method(Method m) const {
  for (const auto& s : methods) {
    if (s.method == m) return s;
  }
  throw ContractError("method '" + std::string(to_string(m)) + "' was not simulated");
}

const BranchSummary* SimResult::branch(const std::string& label) const {
  for (const auto& b : branches) {
    if (b.branch == label) return &b;
  }
  return nullptr;
}

ReplicateRng replicate_rng(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return ReplicateRng(seq);
}

Stage1Summary draw_stage1(const Scenario& scenario, ReplicateRng& rng) {
  const TrialDesign& d = scenario.design;
  Stage1Summary s1;
  s1.means.resize(d.k);
  for (int m = 0; m < d.k; ++m) {
    std::normal_distribution<double> dist(scenario.true_deltas[m], d.stage1_se(d.p[m]));
    s1.means[m] = dist(rng);
  }
  return s1;
}

Stage2Summary draw_stage2(const Scenario& scenario, const InterimDecision& decision,
                          ReplicateRng& rng) {
  if (decision.stopped()) throw ContractError("no stage 2 after a futility stop");
  const TrialDesign& d = scenario.design;
  double selected_share = 0.0;
  for (int m : decision.selected) selected_share += d.p[m - 1];

  Stage2Summary s2;
  s2.means.assign(d.k, std::numeric_limits<double>::quiet_NaN());
  double pooled = 0.0;
  for (int m : decision.selected) {
    const double pm = d.p[m - 1];
    std::normal_distribution<double> dist(scenario.true_deltas[m - 1],
                                          d.stage2_se(pm / selected_share));
    s2.means[m - 1] = dist(rng);
    pooled += pm / selected_share * s2.means[m - 1];
  }
  s2.selected_mean = pooled;
  return s2;
}

unsigned default_thread_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ENRICH_CI_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

SimResult run_scenario(const Scenario& scenario, const RunOptions& options) {
  scenario.validate();
  std::vector<Method> methods = scenario.methods;
  std::vector<Method> computed = methods;
  if (std::find(computed.begin(), computed.end(), Method::naive) == computed.end()) {
    computed.push_back(Method::naive);
  }

  const std::int64_t n = scenario.replicates;
  std::vector<Outcome> outcomes(static_cast<std::size_t>(n));
  const unsigned threads = std::max<unsigned>(
      1, std::min<std::int64_t>(options.threads ? options.threads : default_thread_count(), n));

  std::atomic<std::int64_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex error_mutex;
  std::int64_t failed_index = -1;
  std::string failure;
  constexpr std::int64_t kChunk = 64;

  auto worker = [&] {
    while (!abort.load(std::memory_order_relaxed)) {
      const std::int64_t begin = next.fetch_add(kChunk);
      if (begin >= n) return;
      const std::int64_t end = std::min(n, begin + kChunk);
      for (std::int64_t i = begin; i < end; ++i) {
        try {
          outcomes[static_cast<std::size_t>(i)] = simulate_one(scenario, computed, i);
        } catch (const std::exception& e) {
          std::lock_guard lock(error_mutex);
          if (failed_index < 0 || i < failed_index) {
            failed_index = i;
            failure = e.what();
          }
          abort = true;
          return;
        }
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed_index >= 0) {
    std::ostringstream msg;
    msg << "replicate " << failed_index << " (seed " << scenario.seed << ") failed: " << failure;
    throw NumericalError(msg.str());
  }

  // Reduce in replicate order so floating-point sums do not depend on scheduling.
  const int k = scenario.design.k;
  auto order = [k](const std::vector<int>& a, const std::vector<int>& b) {
    return branch_before(a, b, k);
  };
  std::map<std::vector<int>, Tally, decltype(order)> by_branch(order);
  std::map<std::string, Tally> by_subpopulation;
  Tally continuing;
  for (const Outcome& o : outcomes) {
    Tally& branch = by_branch[o.selected];
    if (o.selected.empty()) {
      ++branch.count;
      continue;
    }
    for (const TargetOutcome& t : o.targets) {
      if (t.co_primary) {
        by_subpopulation[t.id].add(t);
      } else {
        branch.add(t);
        continuing.add(t);
      }
    }
  }

  SimResult result;
  result.replicates = n;
  for (const auto& [selected, tally] : by_branch) {
    result.branches.push_back(tally.summarize(label_of(selected, k), n, methods));
  }
  result.overall = continuing.summarize("overall", n, methods);
  for (const auto& [id, tally] : by_subpopulation) {
    result.co_primary.push_back(tally.summarize(id, n, methods));
  }
  return result;
}

std::pair<double, double> mc_error_band(double coverage, std::int64_t n) {
  if (n < 1) throw std::domain_error("mc_error_band: n must be at least 1");
  if (!(coverage >= 0.0 && coverage <= 1.0)) {
    throw std::domain_error("mc_error_band: coverage must lie in [0, 1]");
  }
  const double half = 1.96 * std::sqrt(coverage * (1.0 - coverage) / static_cast<double>(n));
  return {coverage - half, coverage + half};
}

}  // namespace enrichci
