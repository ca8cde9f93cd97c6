#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace blupcal {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class Family { linear, logistic };
enum class Method { blup_oracle, blup_empirical, naive };

std::string_view to_string(Family family);
std::string_view to_string(Method method);
Family parse_family(std::string_view text);
Method parse_method(std::string_view text);

/// Variance components of the replicate measurement model
///   W_ij = gamma0 + gamma1 * X_i + U_ij,  Var(X) = sigma_x2,
///   Var(U_ij) = sigma_u2, Corr(U_ij, U_ik) = rho.
/// Only v_b and v_w are identifiable from replicate data alone.
struct VarianceComponents {
  double gamma0 = 0.0;
  double gamma1 = 1.0;
  double sigma_x2 = 1.0;
  double sigma_u2 = 1.0;
  double rho = 0.0;

  /// Between-subject variance of the compound-symmetric marginal.
  double v_b() const { return gamma1 * gamma1 * sigma_x2 + rho * sigma_u2; }
  /// Within-subject variance.
  double v_w() const { return (1.0 - rho) * sigma_u2; }

  void validate() const;
};

/// One cell of the simulation design. Inputs are standard deviations;
/// everything downstream works with variances.
struct Scenario {
  std::string id;  // empty means "use canonical_id()"
  Family family = Family::linear;
  int n = 500;
  int J = 7;
  double gamma0 = 1.0;
  double gamma1 = 1.0;
  double mu_x = 0.0;
  double sigma_x = 2.0;
  double mu_c = 1.0;
  double sigma_c = 1.0;
  double sigma_u = 1.0;
  double rho = 0.1;
  double rho_xc = 0.0;
  double beta0 = 10.0;
  double beta_x = 2.95;
  double beta_c = 3.0;
  double sigma_eps = 1.0;
  double p_miss = 0.0;
  int n_reps = 1000;
  std::uint64_t seed = 20240501;

  void validate() const;
  std::string canonical_id() const;
  std::string label() const { return id.empty() ? canonical_id() : id; }
  /// The generating variance components. gamma0 is reported as the marginal
  /// mean of W (gamma0 + gamma1 * mu_x) so that BLUPs are deviations of X
  /// from its mean.
  VarianceComponents true_components() const;
};

/// n subjects by up to J replicates. Unobserved cells carry arbitrary values
/// and are ignored everywhere.
class ReplicatePanel {
public:
  ReplicatePanel(std::vector<std::string> subject_ids, MatrixXd values,
                 MaskMatrix observed,
                 std::optional<MatrixXd> stage1_covariates = std::nullopt);
  /// Fully observed panel with ids "1".."n".
  explicit ReplicatePanel(MatrixXd values);

  int n() const { return static_cast<int>(values_.rows()); }
  int max_replicates() const { return static_cast<int>(values_.cols()); }
  const std::vector<std::string>& subject_ids() const { return ids_; }
  const MatrixXd& values() const { return values_; }
  const MaskMatrix& observed() const { return observed_; }
  const std::optional<MatrixXd>& stage1_covariates() const { return stage1_; }

  bool fully_observed() const { return fully_observed_; }
  int total_observed() const { return total_observed_; }
  int observed_count(int i) const { return counts_[i]; }
  double subject_mean(int i) const { return means_(i); }
  const VectorXd& subject_means() const { return means_; }
  /// Sum of squared deviations from the subject mean over observed cells.
  double within_ss(int i) const { return within_ss_[i]; }

  ReplicatePanel with_stage1_covariates(MatrixXd a) const;
  ReplicatePanel with_mask(MaskMatrix observed) const;
  ReplicatePanel select_rows(const std::vector<int>& rows) const;

private:
  std::vector<std::string> ids_;
  MatrixXd values_;
  MaskMatrix observed_;
  std::optional<MatrixXd> stage1_;
  std::vector<int> counts_;
  VectorXd means_;
  std::vector<double> within_ss_;
  int total_observed_ = 0;
  bool fully_observed_ = true;
};

class OutcomePanel {
public:
  OutcomePanel(std::vector<std::string> subject_ids, VectorXd y,
               MatrixXd covariates, std::vector<std::string> covariate_names = {});

  int n() const { return static_cast<int>(y_.size()); }
  int p() const { return static_cast<int>(covariates_.cols()); }
  const std::vector<std::string>& subject_ids() const { return ids_; }
  const VectorXd& y() const { return y_; }
  const MatrixXd& covariates() const { return covariates_; }
  const std::vector<std::string>& covariate_names() const { return names_; }

  /// Throws DataError when y is not binary.
  void require_binary() const;
  OutcomePanel select_rows(const std::vector<int>& rows) const;

private:
  std::vector<std::string> ids_;
  VectorXd y_;
  MatrixXd covariates_;
  std::vector<std::string> names_;
};

struct TwoStageFit {
  Method method = Method::naive;
  VectorXd coefficients;  // (intercept, exposure, covariates...)
  VectorXd asymptotic_se;
  VectorXd ci_lower;
  VectorXd ci_upper;
  bool converged = false;
  int n_used = 0;
  std::string diagnostic;
};

struct ParameterSummary {
  std::string parameter;
  double true_value = 0.0;
  double mean_estimate = 0.0;
  double mean_asymptotic_se = 0.0;
  double empirical_se = 0.0;
  double relative_bias_pct = 0.0;
  double coverage_pct = 0.0;
};

struct McSummary {
  std::string method;
  std::vector<ParameterSummary> parameters;
  int n_reps = 0;
  int n_converged = 0;

  const ParameterSummary& at(std::string_view parameter) const;
};

/// Exchangeable error covariance: sigma_u2 on the diagonal,
/// rho * sigma_u2 elsewhere.
MatrixXd build_sigma_u(const VarianceComponents& vc, int J);

/// Marginal covariance of one subject's replicate vector,
/// gamma1^2 sigma_x2 * 11' + Sigma_u = v_w * I + v_b * 11'.
MatrixXd build_marginal_cov(const VarianceComponents& vc, int J);

}  // namespace blupcal
