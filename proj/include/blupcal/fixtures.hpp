#pragma once

#include "blupcal/model_core.hpp"

#include <cstdint>
#include <ostream>
#include <string>

namespace blupcal {

/// Synthetic two-device cohort: replicate daily totals from a reference
/// device (A, unbiased up to an offset) and a second device (B, rescaled and
/// noisier), plus subject-level outcomes. Subject-mean marginals of both
/// devices are matched exactly to the targets by an affine rescale; the
/// between-device correlation of subject means is planted in the population.
struct DevicePairSpec {
  int n = 980;
  int J = 7;
  double p_miss = 0.05;
  double rho = 0.1;
  double mean_a = 598.6;
  double sd_a = 120.5;
  double mean_b = 654.9;
  double sd_b = 97.6;
  double target_r = 0.64;
  double reliability_a = 0.85;     // share of device-A subject-mean variance from X
  double bmi_per_hour = 0.8;       // outcome slope per hour of the latent exposure
  double obese_log_odds_per_hour = 0.41;
  std::uint64_t seed = 2016;
};

struct DevicePairFixture {
  ReplicatePanel device_a;
  ReplicatePanel device_b;
  // subject_id plus columns bmi, obese, age, male
  std::vector<std::string> subject_ids;
  MatrixXd outcome_columns;
  double planted_r = 0.0;
};

DevicePairFixture generate_device_pair(const DevicePairSpec& spec);

void write_fixture_outcomes(const DevicePairFixture& fixture, std::ostream& out);

}  // namespace blupcal
