#pragma once

#include "blupcal/model_core.hpp"

namespace blupcal {

struct DeviceSummary {
  int n = 0;
  double min = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double max = 0.0;
};

/// Agreement between two devices on subject-level mean values.
/// Differences are device A minus device B.
struct AgreementReport {
  DeviceSummary device_a;
  DeviceSummary device_b;
  int n_subjects = 0;
  double pearson_r = 0.0;
  double pearson_p = 0.0;
  double mean_difference = 0.0;
  double sd_difference = 0.0;
  double loa_lower = 0.0;
  double loa_upper = 0.0;
};

DeviceSummary summarize_values(const VectorXd& values);

/// Pearson correlation and two-sided p-value from Student's t with n-2 df.
std::pair<double, double> pearson(const VectorXd& a, const VectorXd& b);

/// Compares subject means over the subjects present in both panels.
AgreementReport compare_devices(const ReplicatePanel& a, const ReplicatePanel& b);

}  // namespace blupcal
