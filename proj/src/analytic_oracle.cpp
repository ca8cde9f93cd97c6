#include "blupcal/analytic_oracle.hpp"

#include "blupcal/errors.hpp"
#include "blupcal/sim_engine.hpp"

namespace blupcal {

namespace {
void require_linear(const Scenario& s, const char* op) {
  if (s.family != Family::linear)
    throw ConfigError(std::string(op) + ": closed form is for the linear family; use brute_force_limit");
}
}  // namespace

double replicate_mean_variance(const Scenario& s) {
  const double sx2 = s.sigma_x * s.sigma_x;
  const double su2 = s.sigma_u * s.sigma_u;
  return s.gamma1 * s.gamma1 * sx2 + su2 * (1.0 + (s.J - 1) * s.rho) / s.J;
}

PopulationMoments proxy_moments(const Scenario& s, double scale) {
  const double sx2 = s.sigma_x * s.sigma_x;
  const double cov_xc = s.rho_xc * s.sigma_x * s.sigma_c;
  PopulationMoments m;
  m.var_proxy = scale * scale * replicate_mean_variance(s);
  m.cov_proxy_x = scale * s.gamma1 * sx2;
  m.cov_proxy_c = scale * s.gamma1 * cov_xc;
  m.var_c = s.sigma_c * s.sigma_c;
  m.cov_y_proxy = s.beta_x * m.cov_proxy_x + s.beta_c * m.cov_proxy_c;
  m.cov_y_c = s.beta_x * cov_xc + s.beta_c * m.var_c;
  return m;
}

SlopeLimits population_slopes(const PopulationMoments& m) {
  const double det = m.var_proxy * m.var_c - m.cov_proxy_c * m.cov_proxy_c;
  if (!(det > 0.0) || !(m.var_proxy > 0.0))
    throw IdentifiabilityError("population Gram matrix of (proxy, C) is not positive definite");
  return {(m.var_c * m.cov_y_proxy - m.cov_proxy_c * m.cov_y_c) / det,
          (m.var_proxy * m.cov_y_c - m.cov_proxy_c * m.cov_y_proxy) / det};
}

double naive_slope_limit(const Scenario& s) {
  require_linear(s, "naive_slope_limit");
  if (s.rho_xc == 0.0)
    return s.beta_x * s.gamma1 * s.sigma_x * s.sigma_x / replicate_mean_variance(s);
  return population_slopes(proxy_moments(s, 1.0)).beta_x;
}

SlopeLimits blup_slope_limit(const Scenario& s, BlupSource source) {
  require_linear(s, "blup_slope_limit");
  const VarianceComponents vc = s.true_components();
  double shrinkage;
  if (source == BlupSource::oracle) {
    if (s.rho_xc == 0.0) return {s.beta_x, s.beta_c};
    shrinkage = s.gamma1 * s.gamma1 * vc.sigma_x2 / replicate_mean_variance(s);
  } else {
    shrinkage = vc.v_b() / (vc.v_b() + vc.v_w() / s.J);
  }
  return population_slopes(proxy_moments(s, shrinkage / s.gamma1));
}

TwoStageFit brute_force_limit(const Scenario& scenario, const PipelineSpec& spec, int n) {
  Scenario big = scenario;
  big.n = n;
  big.id = scenario.label() + "_bruteforce";
  const GeneratedDataset data = generate_dataset(big, 0);
  return estimate(data.panel, data.outcomes, spec);
}

}  // namespace blupcal
