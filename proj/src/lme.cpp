#include "blupcal/lme.hpp"

#include "blupcal/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace blupcal {

namespace {

MatrixXd stage1_design(const ReplicatePanel& panel) {
  if (panel.stage1_covariates()) return *panel.stage1_covariates();
  return MatrixXd::Ones(panel.n(), 1);
}

double total_within_ss(const ReplicatePanel& panel) {
  double ssw = 0.0;
  for (int i = 0; i < panel.n(); ++i) ssw += panel.within_ss(i);
  return ssw;
}

// Weighted least squares of subject means on A with weights w_i.
struct WeightedMeanFit {
  VectorXd beta;
  double weighted_rss = 0.0;
  double log_det_gram = 0.0;
};

WeightedMeanFit weighted_mean_fit(const MatrixXd& a, const VectorXd& means, const VectorXd& w) {
  const MatrixXd gram = a.transpose() * w.asDiagonal() * a;
  const VectorXd rhs = a.transpose() * w.cwiseProduct(means);
  Eigen::LLT<MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw IdentifiabilityError("stage-1 covariates are collinear across subjects");
  WeightedMeanFit out;
  out.beta = llt.solve(rhs);
  const VectorXd resid = means - a * out.beta;
  out.weighted_rss = resid.cwiseAbs2().dot(w);
  const MatrixXd l = llt.matrixL();
  out.log_det_gram = 2.0 * l.diagonal().array().log().sum();
  return out;
}

// Everything the profiled restricted likelihood needs, computed once.
class RemlObjective {
public:
  explicit RemlObjective(const ReplicatePanel& panel)
      : a_(stage1_design(panel)),
        means_(panel.subject_means()),
        counts_(panel.n()),
        ssw_(total_within_ss(panel)),
        total_(panel.total_observed()),
        p_(static_cast<int>(a_.cols())) {
    for (int i = 0; i < panel.n(); ++i) counts_(i) = panel.observed_count(i);
  }

  int residual_df() const { return total_ - p_; }

  struct Eval {
    double loglik;
    double sigma2;
    VectorXd beta;
  };

  // Profiled over fixed effects and sigma2 at variance ratio theta = tau2/sigma2.
  Eval profiled(double theta) const {
    const VectorXd w = counts_.array() / (1.0 + theta * counts_.array());
    const WeightedMeanFit fit = weighted_mean_fit(a_, means_, w);
    const double q = ssw_ + fit.weighted_rss;
    const double df = residual_df();
    const double sigma2 = q / df;
    const double log_det_h = (1.0 + theta * counts_.array()).log().sum();
    const double ll = -0.5 * (df * (std::log(2.0 * std::numbers::pi) + 1.0 + std::log(sigma2)) +
                              log_det_h + fit.log_det_gram);
    return {ll, sigma2, fit.beta};
  }

  double at(double tau2, double sigma2) const {
    const double theta = tau2 / sigma2;
    const VectorXd w = counts_.array() / (1.0 + theta * counts_.array());
    const WeightedMeanFit fit = weighted_mean_fit(a_, means_, w);
    const double q = ssw_ + fit.weighted_rss;
    const double log_det_v = total_ * std::log(sigma2) + (1.0 + theta * counts_.array()).log().sum();
    const double log_det_xvx = fit.log_det_gram - p_ * std::log(sigma2);
    return -0.5 * (residual_df() * std::log(2.0 * std::numbers::pi) + log_det_v + log_det_xvx +
                   q / sigma2);
  }

private:
  MatrixXd a_;
  VectorXd means_;
  Eigen::ArrayXd counts_;
  double ssw_;
  int total_;
  int p_;
};

void check_identifiable(const ReplicatePanel& panel) {
  bool any_replicated = false;
  for (int i = 0; i < panel.n(); ++i) any_replicated |= panel.observed_count(i) >= 2;
  if (!any_replicated)
    throw IdentifiabilityError(
        "no subject has two or more observed replicates; within-subject variance is unidentified");
  const int p = panel.stage1_covariates() ? static_cast<int>(panel.stage1_covariates()->cols()) : 1;
  if (panel.n() <= p)
    throw IdentifiabilityError("need more subjects than stage-1 fixed effects");
  if (total_within_ss(panel) <= 0.0)
    throw IdentifiabilityError("within-subject variance is zero; sigma2 must be positive");
}

}  // namespace

LmeFit fit_balanced_anova(const ReplicatePanel& panel) {
  if (!panel.fully_observed())
    throw DataError("fit_balanced_anova: panel has missing replicates; use fit_reml_profiled");
  if (panel.stage1_covariates() && panel.stage1_covariates()->cols() > 1)
    throw DataError("fit_balanced_anova: stage-1 covariates require fit_reml_profiled");
  const int n = panel.n();
  const int J = panel.max_replicates();
  if (n < 2 || J < 2) throw IdentifiabilityError("fit_balanced_anova: need n >= 2 and J >= 2");

  const VectorXd& means = panel.subject_means();
  const double grand = means.mean();
  const double ssb = J * (means.array() - grand).square().sum();
  const double ssw = total_within_ss(panel);
  const double msb = ssb / (n - 1);
  const double msw = ssw / (n * (J - 1.0));
  if (!(msw > 0.0))
    throw IdentifiabilityError("fit_balanced_anova: within-subject mean square is zero");

  LmeFit fit;
  fit.fixed_effects = VectorXd::Constant(1, grand);
  if (msb > msw) {
    fit.sigma2_hat = msw;
    fit.tau2_hat = (msb - msw) / J;
  } else {
    // Boundary: the restricted likelihood is maximized at tau2 = 0, where the
    // variance estimate pools everything.
    fit.tau2_hat = 0.0;
    fit.sigma2_hat = (ssb + ssw) / (n * J - 1.0);
  }
  fit.log_restricted_likelihood = restricted_log_likelihood(panel, fit.tau2_hat, fit.sigma2_hat);
  fit.converged = true;
  fit.n_iterations = 0;
  return fit;
}

LmeFit fit_reml_profiled(const ReplicatePanel& panel, const RemlOptions& options) {
  check_identifiable(panel);
  const RemlObjective objective(panel);
  if (objective.residual_df() <= 0) throw IdentifiabilityError("no residual degrees of freedom");

  auto f = [&](double t) { return objective.profiled(std::exp(t)).loglik; };

  // Coarse scan to bracket the global maximum before golden-section refinement.
  const double lo = options.log_ratio_lower;
  const double hi = options.log_ratio_upper;
  constexpr int kGrid = 120;
  const double step = (hi - lo) / kGrid;
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kGrid; ++k) {
    const double v = f(lo + k * step);
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  double a = lo + std::max(0, best - 1) * step;
  double b = lo + std::min(kGrid, best + 1) * step;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int iter = 0;
  bool converged = false;
  while (iter < options.max_iterations) {
    ++iter;
    if (b - a < options.tolerance) {
      converged = true;
      break;
    }
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }

  const double t_hat = 0.5 * (a + b);
  auto interior = objective.profiled(std::exp(t_hat));
  const auto boundary = objective.profiled(0.0);

  LmeFit fit;
  fit.n_iterations = iter;
  fit.converged = converged;
  if (boundary.loglik >= interior.loglik) {
    fit.tau2_hat = 0.0;
    fit.sigma2_hat = boundary.sigma2;
    fit.fixed_effects = boundary.beta;
    fit.log_restricted_likelihood = boundary.loglik;
  } else {
    fit.sigma2_hat = interior.sigma2;
    fit.tau2_hat = std::exp(t_hat) * interior.sigma2;
    fit.fixed_effects = interior.beta;
    fit.log_restricted_likelihood = interior.loglik;
    if (t_hat >= hi - step) fit.converged = false;  // ratio ran off the upper bracket
  }
  return fit;
}

double restricted_log_likelihood(const ReplicatePanel& panel, double tau2, double sigma2) {
  if (!(tau2 >= 0.0) || !(sigma2 > 0.0))
    throw ConfigError("restricted_log_likelihood: need tau2 >= 0 and sigma2 > 0");
  return RemlObjective(panel).at(tau2, sigma2);
}

BlupVector blup_oracle(const ReplicatePanel& panel, const VarianceComponents& vc) {
  vc.validate();
  if (vc.gamma1 == 0.0) throw IdentifiabilityError("blup_oracle: gamma1 = 0 leaves X unidentified");
  const int n = panel.n();
  const double signal = vc.gamma1 * vc.gamma1 * vc.sigma_x2;
  const double vb = vc.v_b();
  const double vw = vc.v_w();

  VectorXd center = VectorXd::Constant(n, vc.gamma0);
  if (panel.stage1_covariates()) {
    // Known variance components: GLS of subject means on A.
    VectorXd w(n);
    for (int i = 0; i < n; ++i) {
      const double ji = panel.observed_count(i);
      w(i) = ji / (vw + ji * vb);
    }
    const MatrixXd& a = *panel.stage1_covariates();
    center = a * weighted_mean_fit(a, panel.subject_means(), w).beta;
  }

  BlupVector out;
  out.source = BlupSource::oracle;
  out.center = center;
  out.x_hat.resize(n);
  out.shrinkage.resize(n);
  for (int i = 0; i < n; ++i) {
    const double ji = panel.observed_count(i);
    const double k = signal * ji / (vw + ji * vb);
    out.shrinkage(i) = k;
    out.x_hat(i) = k * (panel.subject_mean(i) - center(i)) / vc.gamma1;
  }
  return out;
}

BlupVector blup_empirical(const ReplicatePanel& panel, const LmeFit& fit, double gamma1) {
  if (!fit.converged) throw DataError("blup_empirical: stage-1 fit did not converge");
  if (gamma1 == 0.0 || !std::isfinite(gamma1))
    throw IdentifiabilityError("blup_empirical: gamma1 must be finite and nonzero");
  const int n = panel.n();
  const MatrixXd a = stage1_design(panel);
  if (a.cols() != fit.fixed_effects.size())
    throw DataError("blup_empirical: fit and panel disagree on stage-1 covariates");
  const VectorXd center = a * fit.fixed_effects;

  BlupVector out;
  out.source = BlupSource::empirical;
  out.center = center;
  out.x_hat.resize(n);
  out.shrinkage.resize(n);
  for (int i = 0; i < n; ++i) {
    const double ji = panel.observed_count(i);
    const double lambda =
        fit.tau2_hat > 0.0 ? fit.tau2_hat / (fit.tau2_hat + fit.sigma2_hat / ji) : 0.0;
    out.shrinkage(i) = lambda;
    out.x_hat(i) = lambda * (panel.subject_mean(i) - center(i)) / gamma1;
  }
  return out;
}

}  // namespace blupcal
