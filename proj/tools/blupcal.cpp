// blupcal: BLUP-based measurement-error correction for replicate exposures.
//
//   blupcal simulate --config grid.toml --out results/ [--threads k]
//   blupcal analyze  --replicates w.csv --outcomes y.csv --outcome bmi ...
//   blupcal compare  --device-a a.csv --device-b b.csv --out agreement.json
//   blupcal oracle   --config grid.toml [--brute-force 1000000]
//   blupcal make-fixture --out-dir fixture/

#include "blupcal/agreement.hpp"
#include "blupcal/analytic_oracle.hpp"
#include "blupcal/config.hpp"
#include "blupcal/csv_io.hpp"
#include "blupcal/errors.hpp"
#include "blupcal/fixtures.hpp"
#include "blupcal/report.hpp"
#include "blupcal/sim_engine.hpp"
#include "blupcal/two_stage.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using namespace blupcal;

namespace {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kPartialFailure = 4 };

int default_threads() {
  if (const char* env = std::getenv("BLUPCAL_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto comma = text.find(',', start);
    std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int run_simulate(const std::string& config_path, const std::string& out_dir, int threads) {
  const SimulationConfig cfg = load_config(config_path);
  const std::vector<Scenario> scenarios = cfg.scenarios();
  fs::create_directories(out_dir);

  std::vector<ScenarioResult> results;
  bool partial = false;
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    const Scenario& s = scenarios[k];
    std::cerr << "[" << (k + 1) << "/" << scenarios.size() << "] " << s.label() << '\n';
    ScenarioResult result{s, {}, 0};
    try {
      std::vector<PipelineSpec> specs;
      for (const auto& label : cfg.methods) specs.push_back(harness_pipeline(s, label));
      const MonteCarloResult mc = run_monte_carlo_detailed(s, specs, {threads, false});
      result.summaries = mc.summaries;
      result.failed_replications = mc.failed_replications;
    } catch (const std::exception& e) {
      std::cerr << "  scenario failed: " << e.what() << '\n';
      for (const auto& label : cfg.methods) {
        McSummary empty;
        empty.method = label;
        empty.n_reps = s.n_reps;
        for (const char* p : {"beta0", "beta_x", "beta_c"})
          empty.parameters.push_back({p, NAN, NAN, NAN, NAN, NAN, NAN});
        result.summaries.push_back(empty);
      }
    }
    for (const auto& m : result.summaries)
      if (m.n_converged == 0) partial = true;
    results.push_back(std::move(result));
  }

  {
    auto out = open_output(fs::path(out_dir) / "summary.csv");
    write_summary_csv(results, out);
  }
  {
    auto out = open_output(fs::path(out_dir) / "figdata_bias.csv");
    write_figdata_bias_csv(results, out);
  }
  {
    auto out = open_output(fs::path(out_dir) / "figdata_coverage.csv");
    write_figdata_coverage_csv(results, out);
  }
  {
    auto out = open_output(fs::path(out_dir) / "report.txt");
    write_run_report(results, out);
  }
  std::cerr << "wrote " << results.size() << " scenarios to " << out_dir << '\n';
  return partial ? kPartialFailure : kOk;
}

int run_analyze(const std::string& replicates_path, const std::string& outcomes_path,
                const std::string& family_text, const std::string& outcome,
                const std::string& covariates_text, double gamma1, const std::string& method,
                const std::string& out_path) {
  if (method != "blup" && method != "naive")
    throw ConfigError("--method must be blup or naive");
  const Family family = parse_family(family_text);
  const std::vector<std::string> covariates = split_list(covariates_text);

  const ReplicatePanel replicates = read_replicates_file(replicates_path);
  const OutcomePanel outcomes = read_outcomes_file(outcomes_path, outcome, covariates);
  const AlignedPanels aligned = align_panels(replicates, outcomes);
  if (aligned.replicates.n() < 2)
    throw IdentifiabilityError("only one subject has both replicates and outcomes");

  PipelineSpec spec;
  spec.method = method == "blup" ? Method::blup_empirical : Method::naive;
  spec.family = family;
  spec.gamma1 = gamma1;
  const TwoStageDetail detail = estimate_detailed(aligned.replicates, aligned.outcomes, spec);

  AnalysisContext context{method, family, gamma1, covariates, aligned.dropped_replicate_only,
                          aligned.dropped_outcome_only};
  const nlohmann::json doc = analysis_json(detail, context);
  auto out = open_output(out_path);
  out << doc.dump(2) << '\n';
  std::cout << "beta_x = " << format_number(detail.fit.coefficients(1)) << " (se "
            << format_number(detail.fit.asymptotic_se(1)) << "), n_used = " << detail.fit.n_used
            << '\n';
  return detail.fit.converged ? kOk : kDataError;
}

int run_compare(const std::string& a_path, const std::string& b_path, const std::string& out_path) {
  const AgreementReport report =
      compare_devices(read_replicates_file(a_path), read_replicates_file(b_path));
  auto out = open_output(out_path);
  out << agreement_json(report).dump(2) << '\n';
  std::cout << "pearson_r = " << format_number(report.pearson_r) << " (p "
            << p_value_text(report.pearson_p) << "), mean difference = "
            << format_number(report.mean_difference) << ", limits of agreement ["
            << format_number(report.loa_lower) << ", " << format_number(report.loa_upper) << "]\n";
  return kOk;
}

int run_oracle(const std::string& config_path, int brute_force_n) {
  const SimulationConfig cfg = load_config(config_path, false);
  const int brute_n = brute_force_n > 0 ? brute_force_n : cfg.brute_force_n;
  std::cout << "scenario_id naive_limit blup_oracle_beta_x blup_oracle_beta_c "
               "blup_empirical_beta_x blup_empirical_beta_c";
  if (brute_n > 0) std::cout << " brute_naive brute_blup_oracle";
  std::cout << '\n';
  for (const auto& s : cfg.scenarios()) {
    std::cout << s.label();
    if (s.family == Family::linear) {
      const SlopeLimits oracle = blup_slope_limit(s, BlupSource::oracle);
      const SlopeLimits empirical = blup_slope_limit(s, BlupSource::empirical);
      std::cout << ' ' << format_number(naive_slope_limit(s)) << ' ' << format_number(oracle.beta_x)
                << ' ' << format_number(oracle.beta_c) << ' ' << format_number(empirical.beta_x)
                << ' ' << format_number(empirical.beta_c);
    } else {
      std::cout << " n/a n/a n/a n/a n/a";
    }
    if (brute_n > 0) {
      const TwoStageFit naive = brute_force_limit(s, harness_pipeline(s, "naive"), brute_n);
      const TwoStageFit blup = brute_force_limit(s, harness_pipeline(s, "blup_oracle"), brute_n);
      std::cout << ' ' << format_number(naive.coefficients(1)) << ' '
                << format_number(blup.coefficients(1));
    }
    std::cout << '\n';
  }
  return kOk;
}

int run_make_fixture(const std::string& out_dir, int n, std::uint64_t seed) {
  DevicePairSpec spec;
  spec.n = n;
  spec.seed = seed;
  const DevicePairFixture fixture = generate_device_pair(spec);
  fs::create_directories(out_dir);
  {
    auto out = open_output(fs::path(out_dir) / "device_a.csv");
    write_replicates(fixture.device_a, out);
  }
  {
    auto out = open_output(fs::path(out_dir) / "device_b.csv");
    write_replicates(fixture.device_b, out);
  }
  {
    auto out = open_output(fs::path(out_dir) / "outcomes.csv");
    write_fixture_outcomes(fixture, out);
  }
  std::cout << "planted pearson_r = " << fixture.planted_r << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BLUP-based measurement-error correction for replicate exposure measurements"};
  app.require_subcommand(1);

  std::string config, out_dir;
  int threads = default_threads();
  auto* simulate = app.add_subcommand("simulate", "Run the Monte Carlo study over a scenario grid");
  simulate->add_option("--config", config, "Scenario/grid configuration file")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_option("--threads", threads, "Worker threads (overrides BLUPCAL_THREADS)")
      ->check(CLI::PositiveNumber);

  std::string replicates, outcomes, family = "linear", outcome, covariates, method = "blup", out_json;
  double gamma1 = 1.0;
  auto* analyze = app.add_subcommand("analyze", "Two-stage fit on real replicate data");
  analyze->add_option("--replicates", replicates, "Long-format replicates CSV")->required();
  analyze->add_option("--outcomes", outcomes, "Outcomes CSV")->required();
  analyze->add_option("--family", family, "linear|logistic");
  analyze->add_option("--outcome", outcome, "Outcome column")->required();
  analyze->add_option("--covariates", covariates, "Comma-separated covariate columns");
  analyze->add_option("--gamma1", gamma1, "Assumed measurement scale factor");
  analyze->add_option("--method", method, "blup|naive");
  analyze->add_option("--out", out_json, "Output JSON")->required();

  std::string device_a, device_b, compare_out;
  auto* compare = app.add_subcommand("compare", "Agreement between two devices");
  compare->add_option("--device-a", device_a, "Long-format replicates CSV (device A)")->required();
  compare->add_option("--device-b", device_b, "Long-format replicates CSV (device B)")->required();
  compare->add_option("--out", compare_out, "Output JSON")->required();

  std::string oracle_config;
  int brute_force = 0;
  auto* oracle = app.add_subcommand("oracle", "Analytic large-sample limits for a scenario grid");
  oracle->add_option("--config", oracle_config, "Scenario/grid configuration file")->required();
  oracle->add_option("--brute-force", brute_force, "Confirm with one fit at this sample size");

  std::string fixture_dir;
  int fixture_n = 980;
  std::uint64_t fixture_seed = 2016;
  auto* fixture = app.add_subcommand("make-fixture", "Write a synthetic two-device cohort");
  fixture->add_option("--out-dir", fixture_dir, "Output directory")->required();
  fixture->add_option("--n", fixture_n, "Subjects");
  fixture->add_option("--seed", fixture_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*simulate) return run_simulate(config, out_dir, threads);
    if (*analyze)
      return run_analyze(replicates, outcomes, family, outcome, covariates, gamma1, method, out_json);
    if (*compare) return run_compare(device_a, device_b, compare_out);
    if (*oracle) return run_oracle(oracle_config, brute_force);
    if (*fixture) return run_make_fixture(fixture_dir, fixture_n, fixture_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IdentifiabilityError& e) {
    std::cerr << "identifiability error: " << e.what() << '\n';
    return kDataError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  }
  return kConfigError;
}
