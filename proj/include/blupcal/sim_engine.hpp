#pragma once

#include "blupcal/model_core.hpp"
#include "blupcal/two_stage.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace blupcal {

struct GeneratedDataset {
  VectorXd x;  // latent exposure
  ReplicatePanel panel;
  OutcomePanel outcomes;
  std::string scenario_id;
  int rep_index = 0;

  /// FNV-1a over the raw bytes of x, W, the mask, y and C.
  std::uint64_t checksum() const;
};

/// Engine for replication `rep_index` of a scenario. Each (seed, scenario id,
/// replication, stream) tuple gets its own generator, so results never depend
/// on the order in which replications run.
std::mt19937_64 substream(std::uint64_t seed, std::string_view scenario_id, std::uint64_t rep_index,
                          std::uint64_t stream);

GeneratedDataset generate_dataset(const Scenario& scenario, int rep_index);

/// Pipeline the harness runs for a method label such as "blup_oracle": the
/// oracle receives the generating variance components (conditioned on C for
/// the "_condc" variant) and every BLUP arm receives the true gamma1.
PipelineSpec harness_pipeline(const Scenario& scenario, std::string_view label);

struct MonteCarloOptions {
  int threads = 1;
  bool keep_records = false;
};

struct MethodOutcome {
  bool ok = false;  // estimate returned without throwing
  bool converged = false;
  std::uint64_t dataset_checksum = 0;
  VectorXd coefficients;
  VectorXd se;
  VectorXd ci_lower;
  VectorXd ci_upper;
  std::string error;
};

struct ReplicationRecord {
  int rep_index = 0;
  std::vector<MethodOutcome> methods;
};

struct MonteCarloResult {
  std::vector<McSummary> summaries;  // one per method, input order
  std::vector<ReplicationRecord> records;  // filled when keep_records
  int failed_replications = 0;  // every method failed
};

MonteCarloResult run_monte_carlo_detailed(const Scenario& scenario,
                                          const std::vector<PipelineSpec>& methods,
                                          const MonteCarloOptions& options = {});

std::vector<McSummary> run_monte_carlo(const Scenario& scenario,
                                       const std::vector<PipelineSpec>& methods,
                                       const MonteCarloOptions& options = {});

/// Grid axis: a Scenario field name and its levels.
using GridAxis = std::pair<std::string, std::vector<double>>;

/// Cartesian product of the axes over `base`, first axis outermost.
std::vector<Scenario> expand_grid(const Scenario& base, const std::vector<GridAxis>& axes);

/// Published design for the base's family: rho x rho_xc x gamma1 x n with
/// n in {50,100,500} (linear) or {100,200,500} (logistic).
std::vector<Scenario> scenario_grid(const Scenario& base);

/// Base scenario with the published parameter values for a family.
Scenario published_base(Family family);

/// Sets a numeric Scenario field by name; returns false for unknown names.
bool set_numeric_field(Scenario& scenario, std::string_view name, double value);

}  // namespace blupcal
