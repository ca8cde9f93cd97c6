#pragma once

#include "blupcal/glm.hpp"
#include "blupcal/lme.hpp"
#include "blupcal/model_core.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace blupcal {

struct PipelineSpec {
  Method method = Method::blup_empirical;
  double gamma1 = 1.0;
  std::optional<VarianceComponents> vc_override;  // required for blup_oracle
  Family family = Family::linear;
  // Stage-1 BLUP conditions on the outcome covariates C as subject-level
  // fixed effects (regression-calibration style). Off by default.
  bool condition_on_c = false;

  void validate() const;
  /// "naive", "blup_oracle", "blup_empirical", with "_condc" appended when
  /// condition_on_c is set.
  std::string label() const;
};

/// Inverse of PipelineSpec::label for the method part; family, gamma1 and
/// vc_override keep their defaults.
PipelineSpec parse_pipeline_label(std::string_view label);

/// D = (1, exposure proxy, C).
MatrixXd make_design(const VectorXd& exposure, const MatrixXd& covariates);

struct TwoStageDetail {
  TwoStageFit fit;
  std::optional<LmeFit> stage1;  // set for blup_empirical
  GlmFit stage2;
  VectorXd exposure;  // proxy used in stage 2
};

TwoStageDetail estimate_detailed(const ReplicatePanel& panel, const OutcomePanel& outcomes,
                                 const PipelineSpec& spec);

TwoStageFit estimate(const ReplicatePanel& panel, const OutcomePanel& outcomes,
                     const PipelineSpec& spec);

}  // namespace blupcal
