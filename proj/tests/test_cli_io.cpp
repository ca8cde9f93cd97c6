#include <doctest.h>

#include "blupcal/agreement.hpp"
#include "blupcal/config.hpp"
#include "blupcal/csv_io.hpp"
#include "blupcal/errors.hpp"
#include "blupcal/fixtures.hpp"
#include "blupcal/normal.hpp"
#include "blupcal/report.hpp"
#include "blupcal/sim_engine.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstring>
#include <random>
#include <set>
#include <sstream>

using namespace blupcal;

namespace {

SimulationConfig parse(const std::string& text, bool require_methods = true) {
  std::istringstream in(text);
  return parse_config(in, require_methods);
}

std::string config_error(const std::string& text) {
  try {
    (void)parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string data_error(const std::string& text) {
  std::istringstream in(text);
  try {
    (void)read_replicates(in);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config: scalar values, lists and the grid table") {
  const SimulationConfig cfg = parse(R"(
methods = ["naive", "blup_oracle"]   # two arms
[scenario]
n = 200
rho = [0.1, 0.3]
[grid]
gamma1 = [1, 2]
)");
  CHECK(cfg.methods == std::vector<std::string>{"naive", "blup_oracle"});
  CHECK(cfg.base.n == 200);
  const auto scenarios = cfg.scenarios();
  REQUIRE(scenarios.size() == 4);
  CHECK(scenarios[0].rho == 0.1);
  CHECK(scenarios[0].gamma1 == 1.0);
  CHECK(scenarios[1].gamma1 == 2.0);
  CHECK(scenarios[3].rho == 0.3);
}

TEST_CASE("config: published grid and family defaults") {
  const SimulationConfig lin = parse("methods = [\"naive\"]\n[run]\ngrid = \"published\"\n");
  CHECK(lin.scenarios().size() == 24);
  const SimulationConfig logi =
      parse("methods = [\"naive\"]\n[scenario]\nbeta_c = 0.2\nfamily = \"logistic\"\n[run]\ngrid = \"published\"\n");
  const auto s = logi.scenarios();
  CHECK(s.size() == 24);
  CHECK(s[0].family == Family::logistic);
  CHECK(s[0].beta_x == doctest::Approx(0.1));
  CHECK(s[0].beta_c == doctest::Approx(0.2));
  std::set<int> ns;
  for (const auto& x : s) ns.insert(x.n);
  CHECK(ns == std::set<int>{100, 200, 500});
}

TEST_CASE("config: errors carry line numbers") {
  CHECK(config_error("methods = [\"naive\"]\n[scenario]\nbogus = 1\n").find("line 3") != std::string::npos);
  CHECK(config_error("methods = [\"naive\"]\nn = abc\n").find("line 2") != std::string::npos);
  CHECK(config_error("methods = [\"naive\"]\n[weird]\n").find("line 2") != std::string::npos);
  CHECK(config_error("methods = [\"naive\"]\nn = 10.5\n").find("line 2") != std::string::npos);
  CHECK(config_error("methods = [\"simex\"]\n").find("line 1") != std::string::npos);
  CHECK(config_error("methods = [\"naive\"]\nn = 5\nn = 6\n").find("duplicate") != std::string::npos);
  CHECK_FALSE(config_error("[scenario]\nn = 50\n").empty());
  CHECK_FALSE(config_error("methods = [\"naive\"]\nrho = 1.2\n").empty());
  CHECK_NOTHROW(parse("[scenario]\nn = 50\n", false));
}

TEST_CASE("replicate CSV round-trips bit for bit") {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> z;
  std::bernoulli_distribution miss(0.3);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + trial, J = 1 + trial % 6;
    MatrixXd w(n, J);
    MaskMatrix m(n, J);
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) {
      ids.push_back("s" + std::to_string(i * 7 + 3));
      for (int j = 0; j < J; ++j) {
        w(i, j) = z(rng) * std::pow(10.0, trial % 7 - 3);
        m(i, j) = !miss(rng);
      }
      m(i, J - 1) = true;  // keeps J as the panel width
    }
    const ReplicatePanel panel(ids, w, m);
    std::stringstream buf;
    write_replicates(panel, buf);
    const ReplicatePanel back = read_replicates(buf);
    REQUIRE(back.n() == n);
    REQUIRE(back.max_replicates() == J);
    CHECK(back.subject_ids() == ids);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < J; ++j) {
        CHECK(back.observed()(i, j) == m(i, j));
        if (m(i, j)) {
          const double a = back.values()(i, j), b = w(i, j);
          CHECK(std::memcmp(&a, &b, sizeof a) == 0);
        }
      }
  }
}

TEST_CASE("replicate CSV validation") {
  CHECK(data_error("id,rep,value\n1,1,2\n").find("header") != std::string::npos);
  CHECK(data_error("subject_id,replicate_index,value\n1,0,2\n").find("positive") != std::string::npos);
  CHECK(data_error("subject_id,replicate_index,value\n1,1.5,2\n").find("positive") != std::string::npos);
  CHECK(data_error("subject_id,replicate_index,value\n1,1,2\n1,1,3\n").find("duplicate") != std::string::npos);
  CHECK(data_error("subject_id,replicate_index,value\n1,1,NA\n2,1,3\n").find("zero observed") != std::string::npos);
  CHECK(data_error("subject_id,replicate_index,value\n1,1,abc\n").find(":2") != std::string::npos);
  CHECK(data_error("subject_id,replicate_index,value\n1,1\n").find("fields") != std::string::npos);
  CHECK(data_error("subject_id,replicate_index,value\n").find("no replicate") != std::string::npos);
  CHECK_FALSE(data_error("").empty());

  std::istringstream ok("\xEF\xBB\xBFsubject_id,replicate_index,value\r\na,2,1.5\r\na,1,\r\nb,1,2\n");
  const ReplicatePanel p = read_replicates(ok);
  CHECK(p.max_replicates() == 2);
  CHECK(p.observed_count(0) == 1);
  CHECK(p.subject_mean(0) == 1.5);
  CHECK_FALSE(p.observed()(1, 1));
}

TEST_CASE("outcome CSV and alignment") {
  std::istringstream in("subject_id,bmi,age,male\na,25,40,1\nb,NA,50,0\nc,30,60,1\nz,22,30,0\n");
  const OutcomePanel o = read_outcomes(in, "bmi", {"age", "male"});
  CHECK(o.n() == 4);
  CHECK(std::isnan(o.y()(1)));
  CHECK(o.covariates()(2, 0) == 60.0);
  CHECK(o.covariate_names() == std::vector<std::string>{"age", "male"});

  std::istringstream bad("subject_id,bmi\na,1\n");
  CHECK_THROWS_WITH_AS(read_outcomes(bad, "bmi", {"age"}), doctest::Contains("age"), DataError);
  std::istringstream dup("subject_id,bmi\na,1\na,2\n");
  CHECK_THROWS_AS(read_outcomes(dup, "bmi", {}), DataError);

  std::istringstream reps("subject_id,replicate_index,value\nc,1,1\nc,2,2\nq,1,5\na,1,3\n");
  const AlignedPanels al = align_panels(read_replicates(reps), o);
  CHECK(al.replicates.subject_ids() == std::vector<std::string>{"c", "a"});
  CHECK(al.outcomes.subject_ids() == std::vector<std::string>{"c", "a"});
  CHECK(al.dropped_replicate_only == 1);
  CHECK(al.dropped_outcome_only == 2);

  std::istringstream none("subject_id,replicate_index,value\nx,1,1\n");
  CHECK_THROWS_AS(align_panels(read_replicates(none), o), DataError);
}

TEST_CASE("agreement statistics") {
  VectorXd a(6), b(6);
  a << 1, 2, 3, 4, 5, 6;
  b << 2, 1, 4, 3, 6, 7;
  const auto [r, p] = pearson(a, b);
  const double ma = a.mean(), mb = b.mean();
  const double sab = ((a.array() - ma) * (b.array() - mb)).sum();
  const double ref = sab / std::sqrt((a.array() - ma).square().sum() * (b.array() - mb).square().sum());
  CHECK(r == doctest::Approx(ref).epsilon(1e-14));
  const double t = ref * std::sqrt(4.0 / (1 - ref * ref));
  const boost::math::students_t dist(4.0);
  CHECK(p == doctest::Approx(2.0 * boost::math::cdf(boost::math::complement(dist, t))).epsilon(1e-12));

  const DeviceSummary s = summarize_values(a);
  CHECK(s.median == 3.5);
  CHECK(s.sd == doctest::Approx(std::sqrt(17.5 / 5.0)));

  const ReplicatePanel pa(a), pb(b);
  const AgreementReport rep = compare_devices(pa, pb);
  CHECK(rep.n_subjects == 6);
  CHECK(rep.mean_difference == doctest::Approx((a - b).mean()));
  CHECK(rep.loa_upper - rep.mean_difference == doctest::Approx(kZ975 * rep.sd_difference));
}

TEST_CASE("fixture plants its marginals and correlation") {
  DevicePairSpec spec;
  const DevicePairFixture f = generate_device_pair(spec);
  const AgreementReport rep = compare_devices(f.device_a, f.device_b);
  CHECK(rep.device_a.mean == doctest::Approx(598.6).epsilon(1e-9));
  CHECK(rep.device_a.sd == doctest::Approx(120.5).epsilon(1e-9));
  CHECK(rep.device_b.mean == doctest::Approx(654.9).epsilon(1e-9));
  CHECK(rep.device_b.sd == doctest::Approx(97.6).epsilon(1e-9));
  CHECK(std::fabs(rep.pearson_r - 0.64) < 0.03);
  CHECK(f.planted_r == doctest::Approx(0.64));
  CHECK(f.outcome_columns.rows() == spec.n);
  CHECK(f.outcome_columns.cols() == 4);
  std::ostringstream out;
  write_fixture_outcomes(f, out);
  CHECK(out.str().rfind("subject_id,bmi,obese,age,male\n", 0) == 0);
}

TEST_CASE("report formats") {
  CHECK(p_value_text(0.0004) == "<0.001");
  CHECK(p_value_text(0.0123) == "0.012");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(1.5) == "1.5");
  CHECK(published_naive_slope(1.0, 0.1, 0.0, 500) == doctest::Approx(2.834));
  CHECK_FALSE(published_naive_slope(1.0, 0.1, 0.0, 200).has_value());

  Scenario s;
  s.gamma1 = 1.0;
  s.rho = 0.1;
  s.rho_xc = 0.0;
  McSummary naive;
  naive.method = "naive";
  naive.n_reps = naive.n_converged = 1000;
  naive.parameters = {{"beta0", 10, 10, 0.1, 0.1, 0, 95},
                      {"beta_x", 2.95, 2.7903, 0.04, 0.04, 5.4, 10},
                      {"beta_c", 3, 3, 0.1, 0.1, 0, 95}};
  const std::vector<ScenarioResult> results{{s, {naive}, 0}};

  std::ostringstream summary;
  write_summary_csv(results, summary);
  CHECK(summary.str().rfind(std::string(kSummaryHeader) + "\n", 0) == 0);
  CHECK(summary.str().find("linear_n500_J7_g1_rho0.1_rxc0,linear,500,7,1,0.1,0,0,naive,beta_x,2.95,2.7903") !=
        std::string::npos);

  std::ostringstream bias;
  write_figdata_bias_csv(results, bias);
  CHECK(bias.str() == "family,rho,rho_xc,method,gamma1,n,relative_bias_pct\nlinear,0.1,0,naive,1,500,5.4\n");

  std::ostringstream report;
  write_run_report(results, report);
  CHECK(report.str().find("DIVERGES:") != std::string::npos);
  CHECK(report.str().find("divergent_cells 1") != std::string::npos);

  // A Monte Carlo mean sitting at the published value is a failure of ours, not a divergence.
  ScenarioResult off = results[0];
  off.summaries[0].parameters[1].mean_estimate = 2.834;
  std::ostringstream report2;
  write_run_report({off}, report2);
  CHECK(report2.str().find("DIVERGES:") == std::string::npos);
  CHECK(report2.str().find("CHECK:") != std::string::npos);
}
