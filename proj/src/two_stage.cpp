#include "blupcal/two_stage.hpp"

#include "blupcal/errors.hpp"

#include <cmath>

namespace blupcal {

namespace {

constexpr std::string_view kCondSuffix = "_condc";

// E[X | W, C] up to a constant: the BLUP deviation plus the covariate part of
// the stage-1 mean.
VectorXd calibrated_exposure(const BlupVector& b, double mean_w, double gamma1) {
  return b.x_hat + (b.center.array() - mean_w).matrix() / gamma1;
}

}  // namespace

void PipelineSpec::validate() const {
  if (gamma1 == 0.0 || !std::isfinite(gamma1))
    throw ConfigError("pipeline: gamma1 must be finite and nonzero");
  if (method == Method::blup_oracle) {
    if (!vc_override) throw ConfigError("pipeline: blup_oracle requires variance components");
    vc_override->validate();
  }
}

std::string PipelineSpec::label() const {
  std::string out(to_string(method));
  if (condition_on_c) out += kCondSuffix;
  return out;
}

PipelineSpec parse_pipeline_label(std::string_view label) {
  PipelineSpec spec;
  if (label.size() > kCondSuffix.size() && label.ends_with(kCondSuffix)) {
    spec.condition_on_c = true;
    label.remove_suffix(kCondSuffix.size());
  }
  spec.method = parse_method(label);
  if (spec.condition_on_c && spec.method == Method::naive)
    throw ConfigError("method 'naive' has no conditioned variant");
  return spec;
}

MatrixXd make_design(const VectorXd& exposure, const MatrixXd& covariates) {
  if (covariates.rows() != exposure.size())
    throw DataError("make_design: exposure has " + std::to_string(exposure.size()) +
                    " rows but covariates have " + std::to_string(covariates.rows()));
  const Eigen::Index n = exposure.size();
  MatrixXd d(n, 2 + covariates.cols());
  d.col(0).setOnes();
  d.col(1) = exposure;
  d.rightCols(covariates.cols()) = covariates;
  return d;
}

TwoStageDetail estimate_detailed(const ReplicatePanel& panel, const OutcomePanel& outcomes,
                                 const PipelineSpec& spec) {
  spec.validate();
  if (panel.n() != outcomes.n()) throw DataError("replicate and outcome panels differ in length");
  for (int i = 0; i < panel.n(); ++i)
    if (panel.subject_ids()[i] != outcomes.subject_ids()[i])
      throw DataError("replicate and outcome panels are not aligned at row " + std::to_string(i));

  // Listwise deletion of subjects with a missing outcome or covariate.
  std::vector<int> keep;
  keep.reserve(panel.n());
  for (int i = 0; i < outcomes.n(); ++i) {
    bool ok = std::isfinite(outcomes.y()(i));
    for (int c = 0; c < outcomes.p() && ok; ++c) ok = std::isfinite(outcomes.covariates()(i, c));
    if (ok) keep.push_back(i);
  }
  const bool dropped = static_cast<int>(keep.size()) != panel.n();
  const ReplicatePanel used_panel = dropped ? panel.select_rows(keep) : panel;
  const OutcomePanel used_outcomes = dropped ? outcomes.select_rows(keep) : outcomes;
  if (spec.family == Family::logistic) used_outcomes.require_binary();

  TwoStageDetail out;
  out.fit.method = spec.method;
  out.fit.n_used = used_panel.n();
  bool stage1_ok = true;

  switch (spec.method) {
    case Method::naive:
      out.exposure = used_panel.subject_means();
      break;
    case Method::blup_oracle: {
      if (spec.condition_on_c) {
        MatrixXd a(used_panel.n(), 1 + used_outcomes.p());
        a.col(0).setOnes();
        a.rightCols(used_outcomes.p()) = used_outcomes.covariates();
        const BlupVector b = blup_oracle(used_panel.with_stage1_covariates(std::move(a)), *spec.vc_override);
        out.exposure = calibrated_exposure(b, spec.vc_override->gamma0, spec.vc_override->gamma1);
      } else {
        out.exposure = blup_oracle(used_panel, *spec.vc_override).x_hat;
      }
      break;
    }
    case Method::blup_empirical: {
      ReplicatePanel stage1_panel = used_panel;
      if (spec.condition_on_c) {
        MatrixXd a(used_panel.n(), 1 + used_outcomes.p());
        a.col(0).setOnes();
        a.rightCols(used_outcomes.p()) = used_outcomes.covariates();
        stage1_panel = used_panel.with_stage1_covariates(std::move(a));
      }
      const bool balanced = stage1_panel.fully_observed() && stage1_panel.max_replicates() >= 2 &&
                            !stage1_panel.stage1_covariates();
      LmeFit fit = balanced ? fit_balanced_anova(stage1_panel) : fit_reml_profiled(stage1_panel);
      out.stage1 = fit;
      if (!fit.converged) {
        stage1_ok = false;
        out.fit.diagnostic = "stage-1 REML did not converge";
        // Use the returned components anyway so the caller still sees numbers.
        fit.converged = true;
      }
      const BlupVector b = blup_empirical(stage1_panel, fit, spec.gamma1);
      out.exposure = spec.condition_on_c ? calibrated_exposure(b, b.center.mean(), spec.gamma1) : b.x_hat;
      break;
    }
  }

  const MatrixXd design = make_design(out.exposure, used_outcomes.covariates());
  out.stage2 = spec.family == Family::linear ? fit_linear_ols(design, used_outcomes.y())
                                             : fit_logistic_irls(design, used_outcomes.y());
  const WaldBounds ci = wald_interval(out.stage2, 0.95);
  out.fit.coefficients = out.stage2.coefficients;
  out.fit.asymptotic_se = out.stage2.standard_errors();
  out.fit.ci_lower = ci.lower;
  out.fit.ci_upper = ci.upper;
  out.fit.converged = stage1_ok && out.stage2.converged;
  if (!out.stage2.converged) out.fit.diagnostic = out.stage2.diagnostic;
  return out;
}

TwoStageFit estimate(const ReplicatePanel& panel, const OutcomePanel& outcomes,
                     const PipelineSpec& spec) {
  return estimate_detailed(panel, outcomes, spec).fit;
}

}  // namespace blupcal
