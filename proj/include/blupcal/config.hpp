#pragma once

#include "blupcal/model_core.hpp"
#include "blupcal/sim_engine.hpp"

#include <istream>
#include <string>
#include <vector>

namespace blupcal {

/// Parsed simulation/oracle configuration.
///
/// Flat TOML-style text:
///
///     methods = ["naive", "blup_oracle"]
///     [scenario]
///     family = "linear"
///     J = 7
///     rho = [0.1, 0.3]      # a list value makes the field a grid axis
///     [grid]
///     n = [50, 100, 500]
///     [run]
///     brute_force_n = 1000000
///
/// `grid = "published"` under [run] expands the published factor levels for
/// the scenario's family instead of the explicit axes.
struct SimulationConfig {
  Scenario base;
  std::vector<GridAxis> axes;
  std::vector<std::string> methods;
  bool published_grid = false;
  int brute_force_n = 0;

  std::vector<Scenario> scenarios() const;
};

/// Throws ConfigError with line-level context.
SimulationConfig parse_config(std::istream& in, bool require_methods = true);
SimulationConfig load_config(const std::string& path, bool require_methods = true);

}  // namespace blupcal
