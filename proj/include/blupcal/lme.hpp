#pragma once

#include "blupcal/model_core.hpp"

namespace blupcal {

/// Random-intercept fit of the replicate model
///   W_ij = A_i' gamma + b_i + e_ij,  Var(b_i) = tau2,  Var(e_ij) = sigma2.
/// tau2 identifies v_b and sigma2 identifies v_w of the measurement model.
struct LmeFit {
  VectorXd fixed_effects;  // gamma; element 0 is the intercept
  double tau2_hat = 0.0;
  double sigma2_hat = 0.0;
  double log_restricted_likelihood = 0.0;
  bool converged = false;
  int n_iterations = 0;

  double gamma0_hat() const { return fixed_effects(0); }
};

enum class BlupSource { oracle, empirical };

struct BlupVector {
  VectorXd x_hat;      // corrected exposure, deviation from the exposure mean
  VectorXd shrinkage;  // per-subject factor in [0,1]
  VectorXd center;     // fitted E[mean W_i | A_i]
  BlupSource source = BlupSource::oracle;
};

struct RemlOptions {
  double log_ratio_lower = -30.0;
  double log_ratio_upper = 30.0;
  double tolerance = 1e-10;
  int max_iterations = 200;
};

/// Closed-form one-way random-effects fit from between/within mean squares.
/// Requires a fully observed panel with J >= 2, n >= 2 and no stage-1
/// covariates beyond the intercept.
LmeFit fit_balanced_anova(const ReplicatePanel& panel);

/// REML fit for unbalanced panels and subject-level stage-1 covariates.
/// Fixed effects and sigma2 are profiled out; the remaining scalar
/// log(tau2/sigma2) is located by grid bracketing plus golden-section search.
LmeFit fit_reml_profiled(const ReplicatePanel& panel, const RemlOptions& options = {});

/// Restricted log-likelihood at (tau2, sigma2), fixed effects at their GLS
/// value. Includes the 2*pi constant.
double restricted_log_likelihood(const ReplicatePanel& panel, double tau2, double sigma2);

/// BLUP of X from known variance components. For subject i with J_i observed
/// replicates the shrinkage on (mean_i - gamma0) is
///   gamma1^2 sigma_x2 J_i / (v_w + J_i v_b).
BlupVector blup_oracle(const ReplicatePanel& panel, const VarianceComponents& vc);

/// BLUP of X from a fitted random-intercept model, shrinkage
/// tau2 / (tau2 + sigma2 / J_i), rescaled by 1 / gamma1.
BlupVector blup_empirical(const ReplicatePanel& panel, const LmeFit& fit, double gamma1 = 1.0);

}  // namespace blupcal
