#pragma once

#include "enrichci/designs.hpp"
#include "enrichci/sim.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace enrichci::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitConfig = 2;

// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> replicates;
  std::optional<std::string> methods;  // comma separated
  bool co_primary = false;
};

// Config readers. Throw ConfigError naming the missing or invalid key.
TrialDesign parse_design(const nlohmann::json& config);
DecisionRule parse_rule(const nlohmann::json& config, const TrialDesign& design);
std::vector<Method> parse_methods(const std::string& list);
Scenario parse_scenario(const nlohmann::json& config, const Overrides& overrides = {});

// Fixed-point, locale-independent rendering.
std::string format_fixed(double value, int decimals = 6);

// CSV writers and the matching reader for simulation output.
inline constexpr const char* kSimulationHeader =
    "branch,proportion,method,coverage,mean_width,width_ratio,mc_halfwidth";
void write_intervals_csv(std::ostream& out, const InterimDecision& decision, int k,
                         const std::vector<IntervalEstimate>& intervals);
void write_simulation_csv(std::ostream& out, const SimResult& result);
SimResult parse_simulation_csv(std::istream& in);

// Each command reports errors on `err` and returns an exit code.
int cmd_ci(const nlohmann::json& config, const Overrides& overrides, std::ostream& out,
           std::ostream& err);
int cmd_simulate(const nlohmann::json& config, const Overrides& overrides, std::ostream& out,
                 std::ostream& err);

// Reference cells for the worked example: rows naive/umau/tost, columns
// full/S1/S2, each {lower, upper}.
struct ExampleReference {
  double tolerance = 0.001;
  std::array<std::array<std::array<double, 2>, 3>, 3> cells{};
  std::array<double, 3> pooled{};
};
ExampleReference published_example();

int cmd_example(std::ostream& out, std::ostream& err,
                const ExampleReference& reference = published_example());

// Full command-line entry point (subcommands ci, simulate, example).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace enrichci::cli
