#include "enrichci/cli.hpp"

#include "enrichci/errors.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

namespace enrichci::cli {

using nlohmann::json;

namespace {

const json& field(const json& config, const char* key) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  const auto it = config.find(key);
  if (it == config.end() || it->is_null()) {
    throw ConfigError(std::string("missing required field '") + key + "'");
  }
  return *it;
}

double number(const json& value, const std::string& key) {
  if (!value.is_number()) throw ConfigError("field '" + key + "' must be a number");
  return value.get<double>();
}

std::int64_t integer(const json& value, const std::string& key) {
  if (!value.is_number_integer()) throw ConfigError("field '" + key + "' must be an integer");
  return value.get<std::int64_t>();
}

std::vector<double> numbers(const json& value, const std::string& key) {
  if (!value.is_array()) throw ConfigError("field '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : value) out.push_back(number(v, key));
  return out;
}

// Errors thrown by the library, mapped onto the exit-code contract.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

std::string optional_fixed(double value, bool present) {
  return present ? format_fixed(value) : std::string();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("malformed number '" + text + "' in simulation CSV");
  }
  return v;
}

Stage2Summary parse_stage2(const json& config, int k) {
  Stage2Summary s2;
  s2.means.assign(k, std::numeric_limits<double>::quiet_NaN());
  if (const auto it = config.find("stage2"); it != config.end() && !it->is_null()) {
    if (!it->is_array() || static_cast<int>(it->size()) != k) {
      throw ConfigError("field 'stage2' must be an array with k entries (null for unselected)");
    }
    for (int m = 0; m < k; ++m) {
      if (!(*it)[m].is_null()) s2.means[m] = number((*it)[m], "stage2");
    }
  }
  if (const auto it = config.find("stage2_selected"); it != config.end() && !it->is_null()) {
    s2.selected_mean = number(*it, "stage2_selected");
  }
  return s2;
}

void require_stage2(const InterimDecision& decision, const Stage2Summary& s2, int k) {
  for (const auto& t : decision.targets) {
    if (!t.target.co_primary && s2.selected_mean) continue;
    for (int m : t.target.members) {
      if (!std::isfinite(s2.means[m - 1])) {
        throw ConfigError("field 'stage2' lacks the mean for subpopulation " + std::to_string(m) +
                          " needed by target " + t.target.id(k));
      }
    }
  }
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

TrialDesign parse_design(const json& config) {
  TrialDesign d;
  d.p = numbers(field(config, "p"), "p");
  d.k = static_cast<int>(d.p.size());
  if (const auto it = config.find("k"); it != config.end() && !it->is_null()) {
    const auto k = integer(*it, "k");
    if (k != d.k) throw ConfigError("field 'k' does not match the length of 'p'");
  }
  d.n1 = static_cast<int>(integer(field(config, "n1"), "n1"));
  d.n2 = static_cast<int>(integer(field(config, "n2"), "n2"));
  d.sigma = number(field(config, "sigma"), "sigma");
  if (const auto it = config.find("alpha"); it != config.end() && !it->is_null()) {
    d.alpha = number(*it, "alpha");
  }
  d.validate();
  return d;
}

DecisionRule parse_rule(const json& config, const TrialDesign& design) {
  const json& r = field(config, "rule");
  DecisionRule rule;
  const json& type = field(r, "type");
  if (!type.is_string()) throw ConfigError("field 'rule.type' must be a string");
  rule.kind = parse_rule_kind(type.get<std::string>());
  rule.threshold = number(field(r, "threshold"), "rule.threshold");
  if (const auto it = config.find("co_primary"); it != config.end() && !it->is_null()) {
    if (!it->is_boolean()) throw ConfigError("field 'co_primary' must be true or false");
    rule.co_primary = it->get<bool>();
  }
  rule.validate(design);
  return rule;
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::istringstream in(list);
  std::string name;
  while (std::getline(in, name, ',')) {
    if (name.empty()) continue;
    const Method m = parse_method(name);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw ConfigError("methods must name at least one of naive, umau, tost");
  return out;
}

namespace {

std::vector<Method> methods_from(const json& config, const Overrides& overrides) {
  if (overrides.methods) return parse_methods(*overrides.methods);
  const auto it = config.find("methods");
  if (it == config.end() || it->is_null()) return {Method::naive, Method::umau, Method::tost};
  if (it->is_string()) return parse_methods(it->get<std::string>());
  if (!it->is_array()) throw ConfigError("field 'methods' must be an array of names");
  std::string joined;
  for (const auto& v : *it) {
    if (!v.is_string()) throw ConfigError("field 'methods' must be an array of names");
    joined += v.get<std::string>() + ",";
  }
  return parse_methods(joined);
}

}  // namespace

Scenario parse_scenario(const json& config, const Overrides& overrides) {
  Scenario s;
  s.design = parse_design(config);
  s.rule = parse_rule(config, s.design);
  if (overrides.co_primary) {
    s.rule.co_primary = true;
    s.rule.validate(s.design);
  }
  s.true_deltas = numbers(field(config, "deltas"), "deltas");
  if (overrides.replicates) {
    s.replicates = *overrides.replicates;
  } else {
    s.replicates = integer(field(config, "replicates"), "replicates");
  }
  if (overrides.seed) {
    s.seed = *overrides.seed;
  } else {
    const json& seed = field(config, "seed");
    if (!seed.is_number_unsigned()) throw ConfigError("field 'seed' must be a non-negative integer");
    s.seed = seed.get<std::uint64_t>();
  }
  s.methods = methods_from(config, overrides);
  s.validate();
  return s;
}

std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value)) return value > 0 ? "inf" : (value < 0 ? "-inf" : "nan");
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void write_intervals_csv(std::ostream& out, const InterimDecision& decision, int k,
                         const std::vector<IntervalEstimate>& intervals) {
  out << "decision," << decision.label(k) << '\n';
  if (decision.stopped()) return;
  out << "target,method,lower,upper\n";
  for (const auto& ci : intervals) {
    out << ci.target << ',' << to_string(ci.method) << ',' << format_fixed(ci.lower) << ','
        << format_fixed(ci.upper) << '\n';
  }
}

void write_simulation_csv(std::ostream& out, const SimResult& result) {
  out << kSimulationHeader << '\n';
  auto rows = [&out](const BranchSummary& b) {
    if (b.methods.empty() || b.branch == "stop") {
      out << b.branch << ',' << format_fixed(b.proportion) << ",none,,,,\n";
      return;
    }
    for (const auto& m : b.methods) {
      const bool any = b.count > 0;
      out << b.branch << ',' << format_fixed(b.proportion) << ',' << to_string(m.method) << ','
          << optional_fixed(m.coverage, any) << ',' << optional_fixed(m.mean_width, any) << ','
          << optional_fixed(m.width_ratio, any) << ',' << optional_fixed(m.mc_halfwidth, any)
          << '\n';
    }
  };
  for (const auto& b : result.branches) rows(b);
  rows(result.overall);
  for (const auto& b : result.co_primary) rows(b);
}

SimResult parse_simulation_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSimulationHeader) {
    throw ConfigError("simulation CSV header mismatch");
  }
  SimResult result;
  BranchSummary* current = nullptr;
  std::string current_name;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 7) throw ConfigError("simulation CSV row needs 7 cells: " + line);
    const std::string& name = cells[0];
    if (current == nullptr || name != current_name) {
      std::vector<BranchSummary>* bucket = &result.branches;
      if (name == "overall") {
        current = &result.overall;
      } else {
        if (!name.empty() && name[0] == 'S') bucket = &result.co_primary;
        bucket->emplace_back();
        current = &bucket->back();
      }
      current->branch = name;
      current->proportion = parse_double(cells[1]);
      current_name = name;
    }
    if (cells[2] == "none") continue;
    MethodSummary m;
    m.method = parse_method(cells[2]);
    if (!cells[3].empty()) {
      m.coverage = parse_double(cells[3]);
      m.mean_width = parse_double(cells[4]);
      m.width_ratio = parse_double(cells[5]);
      m.mc_halfwidth = parse_double(cells[6]);
    }
    current->methods.push_back(m);
  }
  return result;
}

int cmd_ci(const json& config, const Overrides& overrides, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TrialDesign design = parse_design(config);
    DecisionRule rule = parse_rule(config, design);
    if (overrides.co_primary) {
      rule.co_primary = true;
      rule.validate(design);
    }
    const std::vector<Method> methods = methods_from(config, overrides);
    Stage1Summary s1;
    s1.means = numbers(field(config, "stage1"), "stage1");
    if (static_cast<int>(s1.means.size()) != design.k) {
      throw ConfigError("field 'stage1' must have k entries");
    }
    const InterimDecision decision = decide(design, rule, s1);
    if (decision.stopped()) {
      write_intervals_csv(out, decision, design.k, {});
      return kExitOk;
    }
    const Stage2Summary s2 = parse_stage2(config, design.k);
    require_stage2(decision, s2, design.k);
    const auto intervals = confidence_intervals(design, decision, s1, s2, methods);
    write_intervals_csv(out, decision, design.k, intervals);
    return kExitOk;
  });
}

int cmd_simulate(const json& config, const Overrides& overrides, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    const Scenario scenario = parse_scenario(config, overrides);
    write_simulation_csv(out, run_scenario(scenario));
    return kExitOk;
  });
}

ExampleReference published_example() {
  ExampleReference ref;
  ref.cells = {{
      {{{-0.024, 0.138}, {0.012, 0.242}, {-0.128, 0.102}}},
      {{{-0.079, 0.131}, {-0.028, 0.240}, {-0.200, 0.093}}},
      {{{-0.078, 0.132}, {-0.025, 0.240}, {-0.198, 0.094}}},
  }};
  ref.pooled = {0.057, 0.127, -0.013};
  return ref;
}

int cmd_example(std::ostream& out, std::ostream& err, const ExampleReference& reference) {
  return guarded(err, [&] {
    const TrialDesign design{2, {0.5, 0.5}, 200, 100, 0.36, 0.05};
    const DecisionRule rule{RuleKind::d2, 0.025, true};
    const Stage1Summary s1{{0.113, 0.013}};
    Stage2Summary s2{{0.155, -0.064}, 0.045};
    const InterimDecision decision = decide(design, rule, s1);

    const std::array<std::string, 3> targets{"full", "S1", "S2"};
    const std::array<Method, 3> methods{Method::naive, Method::umau, Method::tost};
    const auto intervals = confidence_intervals(design, decision, s1, s2, methods);

    out << "Worked example: sigma=0.36, p=(0.5, 0.5), n1=200, n2=100, rule d2 with threshold "
           "0.025\n";
    out << "decision: " << decision.label(design.k) << "\n\n";

    std::vector<std::string> failures;
    out << "pooled estimates:";
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const double value = pooled_estimate(design, decision, s1, s2, targets[t]);
      out << "  " << targets[t] << ' ' << format_fixed(value, 3);
      if (std::abs(value - reference.pooled[t]) > 0.0005) {
        failures.push_back("pooled " + targets[t] + ": " + format_fixed(value, 6) +
                           " vs " + format_fixed(reference.pooled[t], 3));
      }
    }
    out << "\n\n";

    out << std::left << std::setw(8) << "method";
    for (const auto& t : targets) out << std::setw(20) << t;
    out << '\n';
    for (std::size_t m = 0; m < methods.size(); ++m) {
      out << std::setw(8) << to_string(methods[m]);
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto& ci = intervals[t * methods.size() + m];
        out << std::setw(20)
            << "(" + format_fixed(ci.lower, 3) + ", " + format_fixed(ci.upper, 3) + ")";
        const auto& want = reference.cells[m][t];
        if (std::abs(ci.lower - want[0]) > reference.tolerance ||
            std::abs(ci.upper - want[1]) > reference.tolerance) {
          failures.push_back(std::string(to_string(methods[m])) + " " + targets[t] + ": (" +
                             format_fixed(ci.lower) + ", " + format_fixed(ci.upper) +
                             ") vs (" + format_fixed(want[0], 3) + ", " +
                             format_fixed(want[1], 3) + ")");
        }
      }
      out << '\n';
    }
    out << '\n';
    if (failures.empty()) {
      out << "check: all 9 intervals within " << format_fixed(reference.tolerance, 4)
          << " of the published values: pass\n";
      return kExitOk;
    }
    for (const auto& f : failures) {
      out << "check: FAIL " << f << '\n';
      err << "mismatch: " << f << '\n';
    }
    return kExitNumerical;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional confidence intervals for two-stage adaptive enrichment trials",
               "enrich_ci"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> replicates;
  std::optional<std::string> methods;
  bool co_primary = false;

  auto* ci = app.add_subcommand("ci", "Intervals from stage-wise summary statistics");
  auto* sim = app.add_subcommand("simulate", "Monte Carlo coverage study");
  auto* example = app.add_subcommand("example", "Reproduce the worked example");
  for (auto* sub : {ci, sim}) {
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--methods", methods, "Comma separated subset of naive,umau,tost");
    sub->add_flag("--co-primary", co_primary, "Add subpopulation targets on full continuation");
  }
  for (auto* sub : {ci, sim, example}) {
    sub->add_option("--out", out_path, "Write the table here instead of stdout");
  }
  sim->add_option("--seed", seed, "Override the config seed");
  sim->add_option("--replicates", replicates, "Override the replicate count")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  std::ofstream file;
  std::ostream* sink = &out;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      err << "configuration error: cannot open output file '" << out_path << "'\n";
      return kExitConfig;
    }
    sink = &file;
  }

  if (example->parsed()) return cmd_example(*sink, err);

  Overrides overrides{seed, replicates, methods, co_primary};
  json config;
  const int load = guarded(err, [&] {
    config = load_config(config_path);
    return kExitOk;
  });
  if (load != kExitOk) return load;
  if (ci->parsed()) return cmd_ci(config, overrides, *sink, err);
  return cmd_simulate(config, overrides, *sink, err);
}

}  // namespace enrichci::cli
