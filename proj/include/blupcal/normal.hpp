#pragma once

namespace blupcal {

inline constexpr double kZ975 = 1.959963984540054;

/// Standard normal quantile (Wichura's AS241, relative error ~1e-16).
double normal_quantile(double p);

double normal_cdf(double x);

/// Two-sided p-value of a Wald z statistic.
double two_sided_p(double z);

}  // namespace blupcal
