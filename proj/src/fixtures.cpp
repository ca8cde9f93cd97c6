#include "blupcal/fixtures.hpp"

#include "blupcal/csv_io.hpp"
#include "blupcal/errors.hpp"
#include "blupcal/sim_engine.hpp"

#include <cmath>
#include <random>

namespace blupcal {

namespace {

// Affine map of every replicate value so that the subject means have exactly
// the requested mean and SD.
ReplicatePanel rescale_to(const ReplicatePanel& panel, double mean, double sd) {
  const VectorXd& m = panel.subject_means();
  const double current_mean = m.mean();
  const double current_sd =
      std::sqrt((m.array() - current_mean).square().sum() / static_cast<double>(m.size() - 1));
  const double scale = sd / current_sd;
  MatrixXd values = ((panel.values().array() - current_mean) * scale + mean).matrix();
  return ReplicatePanel(panel.subject_ids(), std::move(values), panel.observed());
}

}  // namespace

DevicePairFixture generate_device_pair(const DevicePairSpec& spec) {
  if (spec.n < 3 || spec.J < 2) throw ConfigError("fixture: need n >= 3 and J >= 2");
  if (!(spec.reliability_a > spec.target_r * spec.target_r && spec.reliability_a < 1.0))
    throw ConfigError("fixture: reliability_a must lie in (target_r^2, 1)");

  const double sx2 = spec.reliability_a * spec.sd_a * spec.sd_a;
  const double gamma_b = spec.target_r * spec.sd_a * spec.sd_b / sx2;
  const double mean_factor = (1.0 + (spec.J - 1) * spec.rho) / spec.J;
  const double su2_a = (spec.sd_a * spec.sd_a - sx2) / mean_factor;
  const double su2_b = (spec.sd_b * spec.sd_b - gamma_b * gamma_b * sx2) / mean_factor;
  if (!(su2_b > 0.0)) throw ConfigError("fixture: targets leave no room for device-B error");

  auto rng = substream(spec.seed, "device_pair_fixture", 0, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double sx = std::sqrt(sx2);
  const double shared = std::sqrt(spec.rho);
  const double own = std::sqrt(1.0 - spec.rho);

  const int n = spec.n;
  const int J = spec.J;
  MatrixXd wa(n, J), wb(n, J);
  MaskMatrix mask(n, J);
  MatrixXd outcomes(n, 4);
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    ids.push_back("S" + std::to_string(10000 + i));
    const double x = sx * normal(rng);
    const double za = normal(rng);
    const double zb = normal(rng);
    for (int j = 0; j < J; ++j) {
      wa(i, j) = spec.mean_a + x + std::sqrt(su2_a) * (shared * za + own * normal(rng));
      wb(i, j) = spec.mean_b + gamma_b * x + std::sqrt(su2_b) * (shared * zb + own * normal(rng));
    }
    bool any = false;
    while (!any) {
      for (int j = 0; j < J; ++j) {
        mask(i, j) = uniform(rng) >= spec.p_miss;
        any |= mask(i, j);
      }
    }
    const double age = 77.0 + 6.6 * normal(rng);
    const double male = uniform(rng) < 0.447 ? 1.0 : 0.0;
    const double hours = x / 60.0;
    const double bmi = 27.0 + spec.bmi_per_hour * hours + 0.05 * (age - 77.0) - 0.4 * male + 4.0 * normal(rng);
    const double eta = -1.25 + spec.obese_log_odds_per_hour * hours - 0.03 * (age - 77.0) + 0.1 * male;
    const double obese = uniform(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    outcomes.row(i) << bmi, obese, age, male;
  }

  DevicePairFixture out{
      rescale_to(ReplicatePanel(ids, wa, mask), spec.mean_a, spec.sd_a),
      rescale_to(ReplicatePanel(ids, wb, mask), spec.mean_b, spec.sd_b),
      ids, std::move(outcomes), spec.target_r};
  return out;
}

void write_fixture_outcomes(const DevicePairFixture& fixture, std::ostream& out) {
  out << "subject_id,bmi,obese,age,male\n";
  for (std::size_t i = 0; i < fixture.subject_ids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << fixture.subject_ids[i] << ',' << format_exact(fixture.outcome_columns(r, 0)) << ','
        << fixture.outcome_columns(r, 1) << ',' << format_exact(fixture.outcome_columns(r, 2)) << ','
        << fixture.outcome_columns(r, 3) << '\n';
  }
}

}  // namespace blupcal
