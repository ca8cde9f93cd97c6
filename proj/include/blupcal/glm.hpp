#pragma once

#include "blupcal/model_core.hpp"

#include <string>
#include <utility>

namespace blupcal {

struct GlmFit {
  VectorXd coefficients;
  MatrixXd covariance;  // asymptotic covariance of the coefficients
  Family family = Family::linear;
  bool converged = false;
  int n_iterations = 0;
  double dispersion = 1.0;  // RSS / (n - q) for the linear family, 1 for logistic
  double deviance = 0.0;
  std::string diagnostic;

  VectorXd standard_errors() const { return covariance.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

struct IrlsOptions {
  int max_iterations = 50;
  double coefficient_tolerance = 1e-8;
  double deviance_tolerance = 1e-10;
  double divergence_norm = 1e3;
};

/// Least squares through a column-pivoted QR of the design.
/// Throws SingularDesignError naming the first dependent column.
GlmFit fit_linear_ols(const MatrixXd& design, const VectorXd& y);

/// Bernoulli maximum likelihood with the logit link by Newton/IRLS.
/// Separation shows up as converged = false with a diagnostic.
GlmFit fit_logistic_irls(const MatrixXd& design, const VectorXd& y, const IrlsOptions& options = {});

struct WaldBounds {
  VectorXd lower;
  VectorXd upper;
};

WaldBounds wald_interval(const GlmFit& fit, double level = 0.95);

}  // namespace blupcal
