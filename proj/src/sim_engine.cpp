#include "blupcal/sim_engine.hpp"

#include "blupcal/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <thread>

namespace blupcal {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

constexpr std::uint64_t kDataStream = 0;
constexpr std::uint64_t kMaskStream = 1;

}  // namespace

std::mt19937_64 substream(std::uint64_t seed, std::string_view scenario_id, std::uint64_t rep_index,
                          std::uint64_t stream) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ fnv1a(scenario_id.data(), scenario_id.size()));
  key = splitmix64(key ^ rep_index);
  key = splitmix64(key ^ (stream + 0x51ed270b27a5d3c1ULL));
  return std::mt19937_64(key);
}

std::uint64_t GeneratedDataset::checksum() const {
  std::uint64_t h = kFnvOffset;
  h = fnv1a(x.data(), sizeof(double) * x.size(), h);
  const MatrixXd& w = panel.values();
  h = fnv1a(w.data(), sizeof(double) * w.size(), h);
  const MaskMatrix& m = panel.observed();
  h = fnv1a(m.data(), sizeof(bool) * m.size(), h);
  h = fnv1a(outcomes.y().data(), sizeof(double) * outcomes.y().size(), h);
  h = fnv1a(outcomes.covariates().data(), sizeof(double) * outcomes.covariates().size(), h);
  return h;
}

GeneratedDataset generate_dataset(const Scenario& scenario, int rep_index) {
  scenario.validate();
  const std::string id = scenario.label();
  const int n = scenario.n;
  const int J = scenario.J;
  auto rng = substream(scenario.seed, id, static_cast<std::uint64_t>(rep_index), kDataStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const double shared = std::sqrt(scenario.rho);
  const double own = std::sqrt(1.0 - scenario.rho);
  const double c_own = std::sqrt(1.0 - scenario.rho_xc * scenario.rho_xc);

  VectorXd x(n);
  VectorXd y(n);
  MatrixXd c(n, 1);
  MatrixXd w(n, J);
  for (int i = 0; i < n; ++i) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    x(i) = scenario.mu_x + scenario.sigma_x * z1;
    c(i, 0) = scenario.mu_c + scenario.sigma_c * (scenario.rho_xc * z1 + c_own * z2);

    const double zi = normal(rng);
    for (int j = 0; j < J; ++j) {
      const double u = scenario.sigma_u * (shared * zi + own * normal(rng));
      w(i, j) = scenario.gamma0 + scenario.gamma1 * x(i) + u;
    }

    const double eta = scenario.beta0 + scenario.beta_x * x(i) + scenario.beta_c * c(i, 0);
    if (scenario.family == Family::linear) {
      y(i) = eta + scenario.sigma_eps * normal(rng);
    } else {
      const double pr = 1.0 / (1.0 + std::exp(-eta));
      y(i) = uniform(rng) < pr ? 1.0 : 0.0;
    }
  }

  MaskMatrix mask = MaskMatrix::Constant(n, J, true);
  if (scenario.p_miss > 0.0) {
    auto mask_rng = substream(scenario.seed, id, static_cast<std::uint64_t>(rep_index), kMaskStream);
    for (int i = 0; i < n; ++i) {
      // A subject left with nothing observed gets a fresh mask row.
      bool any = false;
      while (!any) {
        for (int j = 0; j < J; ++j) {
          mask(i, j) = uniform(mask_rng) >= scenario.p_miss;
          any |= mask(i, j);
        }
      }
    }
  }

  std::vector<std::string> ids;
  ids.reserve(n);
  for (int i = 0; i < n; ++i) ids.push_back(std::to_string(i + 1));
  ReplicatePanel panel(ids, std::move(w), std::move(mask));
  OutcomePanel outcomes(std::move(ids), std::move(y), std::move(c), {"c"});
  return GeneratedDataset{std::move(x), std::move(panel), std::move(outcomes), id, rep_index};
}

PipelineSpec harness_pipeline(const Scenario& scenario, std::string_view label) {
  PipelineSpec spec = parse_pipeline_label(label);
  spec.family = scenario.family;
  if (spec.method != Method::naive) spec.gamma1 = scenario.gamma1;
  if (spec.method == Method::blup_oracle) {
    VarianceComponents vc = scenario.true_components();
    if (spec.condition_on_c) vc.sigma_x2 *= 1.0 - scenario.rho_xc * scenario.rho_xc;
    spec.vc_override = vc;
  }
  return spec;
}

namespace {

MethodOutcome run_method(const GeneratedDataset& data, const PipelineSpec& spec,
                         std::uint64_t checksum) {
  MethodOutcome out;
  out.dataset_checksum = checksum;
  try {
    const TwoStageFit fit = estimate(data.panel, data.outcomes, spec);
    out.ok = true;
    out.converged = fit.converged;
    out.coefficients = fit.coefficients;
    out.se = fit.asymptotic_se;
    out.ci_lower = fit.ci_lower;
    out.ci_upper = fit.ci_upper;
    if (!fit.converged) out.error = fit.diagnostic;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

McSummary summarize(const Scenario& scenario, const std::string& label,
                    const std::vector<ReplicationRecord>& records, std::size_t method) {
  const std::vector<std::pair<std::string, double>> truth = {
      {"beta0", scenario.beta0}, {"beta_x", scenario.beta_x}, {"beta_c", scenario.beta_c}};
  McSummary summary;
  summary.method = label;
  summary.n_reps = static_cast<int>(records.size());

  const std::size_t q = truth.size();
  std::vector<double> sum(q, 0.0), sum_sq(q, 0.0), sum_se(q, 0.0);
  std::vector<int> covered(q, 0);
  int m = 0;
  // Sequential reduction in replication order keeps the result bitwise stable.
  for (const auto& record : records) {
    const MethodOutcome& o = record.methods[method];
    if (!o.ok || !o.converged) continue;
    ++m;
    for (std::size_t k = 0; k < q; ++k) {
      const double est = o.coefficients(static_cast<Eigen::Index>(k));
      sum[k] += est;
      sum_sq[k] += est * est;
      sum_se[k] += o.se(static_cast<Eigen::Index>(k));
      if (o.ci_lower(static_cast<Eigen::Index>(k)) <= truth[k].second &&
          truth[k].second <= o.ci_upper(static_cast<Eigen::Index>(k)))
        ++covered[k];
    }
  }
  summary.n_converged = m;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < q; ++k) {
    ParameterSummary p;
    p.parameter = truth[k].first;
    p.true_value = truth[k].second;
    if (m == 0) {
      p.mean_estimate = p.mean_asymptotic_se = p.empirical_se = nan;
      p.relative_bias_pct = p.coverage_pct = nan;
    } else {
      p.mean_estimate = sum[k] / m;
      p.mean_asymptotic_se = sum_se[k] / m;
      p.empirical_se =
          m > 1 ? std::sqrt(std::max(0.0, (sum_sq[k] - m * p.mean_estimate * p.mean_estimate) / (m - 1)))
                : 0.0;
      p.relative_bias_pct = 100.0 * std::fabs(p.mean_estimate - p.true_value) / std::fabs(p.true_value);
      p.coverage_pct = 100.0 * covered[k] / m;
    }
    summary.parameters.push_back(p);
  }
  return summary;
}

}  // namespace

MonteCarloResult run_monte_carlo_detailed(const Scenario& scenario,
                                          const std::vector<PipelineSpec>& methods,
                                          const MonteCarloOptions& options) {
  scenario.validate();
  if (methods.empty()) throw ConfigError("run_monte_carlo: empty method list");
  for (const auto& spec : methods) spec.validate();

  const int reps = scenario.n_reps;
  std::vector<ReplicationRecord> records(reps);
  auto work = [&](int r) {
    const GeneratedDataset data = generate_dataset(scenario, r);
    const std::uint64_t checksum = data.checksum();
    ReplicationRecord& record = records[r];
    record.rep_index = r;
    record.methods.reserve(methods.size());
    for (const auto& spec : methods) record.methods.push_back(run_method(data, spec, checksum));
  };

  const int threads = std::max(1, std::min(options.threads, reps));
  if (threads == 1) {
    for (int r = 0; r < reps; ++r) work(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) work(r);
      });
  }

  MonteCarloResult result;
  for (std::size_t k = 0; k < methods.size(); ++k)
    result.summaries.push_back(summarize(scenario, methods[k].label(), records, k));
  for (const auto& record : records) {
    const bool all_failed = std::none_of(record.methods.begin(), record.methods.end(),
                                         [](const MethodOutcome& o) { return o.ok; });
    if (all_failed) ++result.failed_replications;
  }
  if (options.keep_records) result.records = std::move(records);
  return result;
}

std::vector<McSummary> run_monte_carlo(const Scenario& scenario,
                                       const std::vector<PipelineSpec>& methods,
                                       const MonteCarloOptions& options) {
  return run_monte_carlo_detailed(scenario, methods, options).summaries;
}

bool set_numeric_field(Scenario& s, std::string_view name, double v) {
  auto as_int = [&](int& field) {
    if (v != std::floor(v)) throw ConfigError("field '" + std::string(name) + "' must be an integer");
    field = static_cast<int>(v);
  };
  if (name == "n") as_int(s.n);
  else if (name == "J") as_int(s.J);
  else if (name == "n_reps") as_int(s.n_reps);
  else if (name == "gamma0") s.gamma0 = v;
  else if (name == "gamma1") s.gamma1 = v;
  else if (name == "mu_x") s.mu_x = v;
  else if (name == "sigma_x") s.sigma_x = v;
  else if (name == "mu_c") s.mu_c = v;
  else if (name == "sigma_c") s.sigma_c = v;
  else if (name == "sigma_u") s.sigma_u = v;
  else if (name == "rho") s.rho = v;
  else if (name == "rho_xc") s.rho_xc = v;
  else if (name == "beta0") s.beta0 = v;
  else if (name == "beta_x") s.beta_x = v;
  else if (name == "beta_c") s.beta_c = v;
  else if (name == "sigma_eps") s.sigma_eps = v;
  else if (name == "p_miss") s.p_miss = v;
  else if (name == "seed") {
    if (v < 0 || v != std::floor(v)) throw ConfigError("field 'seed' must be a nonnegative integer");
    s.seed = static_cast<std::uint64_t>(v);
  } else return false;
  return true;
}

std::vector<Scenario> expand_grid(const Scenario& base, const std::vector<GridAxis>& axes) {
  static const std::vector<std::string> in_canonical = {"n", "J", "gamma1", "rho", "rho_xc", "p_miss"};
  std::vector<Scenario> out{base};
  std::vector<std::string> suffixes{""};
  for (const auto& [name, levels] : axes) {
    if (levels.empty()) throw ConfigError("grid axis '" + name + "' has no levels");
    const bool needs_suffix =
        std::find(in_canonical.begin(), in_canonical.end(), name) == in_canonical.end();
    std::vector<Scenario> next;
    std::vector<std::string> next_suffixes;
    for (std::size_t k = 0; k < out.size(); ++k) {
      for (double level : levels) {
        Scenario s = out[k];
        if (!set_numeric_field(s, name, level)) throw ConfigError("unknown grid axis '" + name + "'");
        std::string suffix = suffixes[k];
        if (needs_suffix) {
          std::ostringstream os;
          os << "_" << name << level;
          suffix += os.str();
        }
        next.push_back(std::move(s));
        next_suffixes.push_back(std::move(suffix));
      }
    }
    out = std::move(next);
    suffixes = std::move(next_suffixes);
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].id = out[k].canonical_id() + suffixes[k];
    out[k].validate();
  }
  return out;
}

std::vector<Scenario> scenario_grid(const Scenario& base) {
  const std::vector<double> n_levels =
      base.family == Family::linear ? std::vector<double>{50, 100, 500}
                                    : std::vector<double>{100, 200, 500};
  return expand_grid(base, {{"rho", {0.1, 0.3}},
                            {"rho_xc", {0.0, 0.5}},
                            {"gamma1", {1.0, 2.0}},
                            {"n", n_levels}});
}

Scenario published_base(Family family) {
  Scenario s;
  s.family = family;
  if (family == Family::logistic) {
    s.beta0 = 0.1;
    s.beta_x = 0.1;
    s.beta_c = 0.1;
  }
  return s;
}

}  // namespace blupcal
