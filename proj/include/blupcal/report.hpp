#pragma once

#include "blupcal/agreement.hpp"
#include "blupcal/model_core.hpp"
#include "blupcal/two_stage.hpp"

#include <json.hpp>

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace blupcal {

struct ScenarioResult {
  Scenario scenario;
  std::vector<McSummary> summaries;
  int failed_replications = 0;
};

inline constexpr const char* kSummaryHeader =
    "scenario_id,family,n,J,gamma1,rho,rho_xc,p_miss,method,parameter,true_value,mean_estimate,"
    "mean_asymptotic_se,empirical_se,relative_bias_pct,coverage_pct,n_reps,n_converged";

/// Fixed "%.10g" formatting; NaN prints as "nan".
std::string format_number(double v);

void write_summary_csv(const std::vector<ScenarioResult>& results, std::ostream& out);

/// Exposure-slope metric per (family, rho, rho_xc, method, gamma1, n), the
/// facets of the bias and coverage figures.
void write_figdata_bias_csv(const std::vector<ScenarioResult>& results, std::ostream& out);
void write_figdata_coverage_csv(const std::vector<ScenarioResult>& results, std::ostream& out);

/// Published naive exposure-slope means for the linear design, keyed by
/// (gamma1, rho, rho_xc, n).
std::optional<double> published_naive_slope(double gamma1, double rho, double rho_xc, int n);

/// Plain-text comparison of every linear Monte Carlo cell with its analytic
/// limit. Naive cells whose published mean sits away from both the analytic
/// limit and our Monte Carlo mean are flagged "DIVERGES".
void write_run_report(const std::vector<ScenarioResult>& results, std::ostream& out);

struct AnalysisContext {
  std::string method;  // "blup" or "naive"
  Family family = Family::linear;
  double gamma1 = 1.0;
  std::vector<std::string> covariate_names;
  int dropped_replicate_only = 0;
  int dropped_outcome_only = 0;
};

nlohmann::json analysis_json(const TwoStageDetail& detail, const AnalysisContext& context);
nlohmann::json agreement_json(const AgreementReport& report);

/// "<0.001" below the threshold, otherwise three decimals.
std::string p_value_text(double p);

}  // namespace blupcal
