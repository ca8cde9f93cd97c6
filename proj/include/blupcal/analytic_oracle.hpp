#pragma once

#include "blupcal/lme.hpp"
#include "blupcal/model_core.hpp"
#include "blupcal/two_stage.hpp"

namespace blupcal {

/// Second moments needed for the population least-squares fit of Y on
/// (1, proxy, C) where proxy = scale * (mean of W - its mean).
struct PopulationMoments {
  double var_proxy = 0.0;
  double cov_proxy_x = 0.0;
  double cov_proxy_c = 0.0;
  double var_c = 0.0;
  double cov_y_proxy = 0.0;
  double cov_y_c = 0.0;
};

struct SlopeLimits {
  double beta_x = 0.0;
  double beta_c = 0.0;
};

/// Variance of a subject's replicate mean over J replicates.
double replicate_mean_variance(const Scenario& scenario);

PopulationMoments proxy_moments(const Scenario& scenario, double scale);

/// Solves the 2x2 population normal equations for the proxy and C slopes.
SlopeLimits population_slopes(const PopulationMoments& moments);

/// Probability limit of the naive stage-2 exposure slope (linear family).
double naive_slope_limit(const Scenario& scenario);

/// Probability limits of the BLUP-corrected slopes (linear family). The
/// empirical source uses the REML limits (v_b, v_w) of the generating process.
SlopeLimits blup_slope_limit(const Scenario& scenario, BlupSource source);

/// One replication at a large sample size; the empirical limit for any
/// family and a cross-check for the closed forms.
TwoStageFit brute_force_limit(const Scenario& scenario, const PipelineSpec& spec, int n = 1000000);

}  // namespace blupcal
