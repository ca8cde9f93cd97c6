#include "blupcal/agreement.hpp"

#include "blupcal/errors.hpp"
#include "blupcal/normal.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <vector>

namespace blupcal {

DeviceSummary summarize_values(const VectorXd& values) {
  const Eigen::Index n = values.size();
  if (n < 2) throw DataError("device summary needs at least two subjects");
  std::vector<double> sorted(values.data(), values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  DeviceSummary s;
  s.n = static_cast<int>(n);
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.mean = values.mean();
  s.sd = std::sqrt((values.array() - s.mean).square().sum() / static_cast<double>(n - 1));
  return s;
}

std::pair<double, double> pearson(const VectorXd& a, const VectorXd& b) {
  const Eigen::Index n = a.size();
  if (b.size() != n || n < 3) throw DataError("pearson: need two aligned vectors of length >= 3");
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double sab = (da * db).sum();
  const double saa = da.square().sum();
  const double sbb = db.square().sum();
  if (!(saa > 0.0) || !(sbb > 0.0)) throw DataError("pearson: a device has zero variance");
  const double r = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
  if (std::fabs(r) == 1.0) return {r, 0.0};
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  const boost::math::students_t dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  return {r, p};
}

AgreementReport compare_devices(const ReplicatePanel& a, const ReplicatePanel& b) {
  std::unordered_map<std::string, int> b_row;
  for (int i = 0; i < b.n(); ++i) b_row.emplace(b.subject_ids()[i], i);
  std::vector<double> ma, mb;
  for (int i = 0; i < a.n(); ++i) {
    auto it = b_row.find(a.subject_ids()[i]);
    if (it == b_row.end()) continue;
    ma.push_back(a.subject_mean(i));
    mb.push_back(b.subject_mean(it->second));
  }
  if (ma.empty()) throw DataError("compare: the two devices share no subject ids");
  const Eigen::Map<const VectorXd> va(ma.data(), static_cast<Eigen::Index>(ma.size()));
  const Eigen::Map<const VectorXd> vb(mb.data(), static_cast<Eigen::Index>(mb.size()));

  AgreementReport report;
  report.n_subjects = static_cast<int>(ma.size());
  report.device_a = summarize_values(va);
  report.device_b = summarize_values(vb);
  std::tie(report.pearson_r, report.pearson_p) = pearson(va, vb);
  const DeviceSummary diff = summarize_values(va - vb);
  report.mean_difference = diff.mean;
  report.sd_difference = diff.sd;
  report.loa_lower = diff.mean - kZ975 * diff.sd;
  report.loa_upper = diff.mean + kZ975 * diff.sd;
  return report;
}

}  // namespace blupcal
