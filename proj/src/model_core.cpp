#include "blupcal/model_core.hpp"

#include "blupcal/errors.hpp"

#include <cmath>
#include <sstream>

namespace blupcal {

std::string_view to_string(Family family) {
  return family == Family::linear ? "linear" : "logistic";
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::blup_oracle: return "blup_oracle";
    case Method::blup_empirical: return "blup_empirical";
    case Method::naive: return "naive";
  }
  return "unknown";
}

Family parse_family(std::string_view text) {
  if (text == "linear") return Family::linear;
  if (text == "logistic") return Family::logistic;
  throw ConfigError("unknown family '" + std::string(text) + "' (expected linear|logistic)");
}

Method parse_method(std::string_view text) {
  if (text == "blup_oracle") return Method::blup_oracle;
  if (text == "blup_empirical") return Method::blup_empirical;
  if (text == "naive") return Method::naive;
  throw ConfigError("unknown method '" + std::string(text) + "'");
}

void VarianceComponents::validate() const {
  if (!std::isfinite(gamma0) || !std::isfinite(gamma1))
    throw ConfigError("variance components: gamma0/gamma1 must be finite");
  if (!(sigma_x2 >= 0.0)) throw ConfigError("variance components: sigma_x2 must be >= 0");
  if (!(sigma_u2 > 0.0)) throw ConfigError("variance components: sigma_u2 must be > 0");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("variance components: rho must lie in [0,1)");
}

void Scenario::validate() const {
  auto fail = [](const std::string& field, const std::string& msg) {
    throw ConfigError("scenario field '" + field + "': " + msg);
  };
  if (n < 3) fail("n", "must be >= 3");
  if (J < 1) fail("J", "must be >= 1");
  if (!(sigma_x >= 0.0)) fail("sigma_x", "must be >= 0");
  if (!(sigma_u >= 0.0)) fail("sigma_u", "must be >= 0");
  if (!(sigma_c > 0.0)) fail("sigma_c", "must be > 0");
  if (!(rho >= 0.0 && rho < 1.0)) fail("rho", "must lie in [0,1)");
  if (!(rho_xc > -1.0 && rho_xc < 1.0)) fail("rho_xc", "must lie in (-1,1)");
  if (!(p_miss >= 0.0 && p_miss < 1.0)) fail("p_miss", "must lie in [0,1)");
  if (gamma1 == 0.0 || !std::isfinite(gamma1)) fail("gamma1", "must be finite and nonzero");
  if (family == Family::linear && !(sigma_eps >= 0.0)) fail("sigma_eps", "must be >= 0");
  if (n_reps < 1) fail("n_reps", "must be >= 1");
  for (double v : {gamma0, mu_x, mu_c, beta0, beta_x, beta_c})
    if (!std::isfinite(v)) fail("coefficients", "must be finite");
}

std::string Scenario::canonical_id() const {
  std::ostringstream os;
  os << to_string(family) << "_n" << n << "_J" << J << "_g" << gamma1 << "_rho" << rho
     << "_rxc" << rho_xc;
  if (p_miss > 0.0) os << "_pm" << p_miss;
  return os.str();
}

VarianceComponents Scenario::true_components() const {
  return VarianceComponents{gamma0 + gamma1 * mu_x, gamma1, sigma_x * sigma_x,
                            sigma_u * sigma_u, rho};
}

ReplicatePanel::ReplicatePanel(std::vector<std::string> subject_ids, MatrixXd values,
                               MaskMatrix observed, std::optional<MatrixXd> stage1_covariates)
    : ids_(std::move(subject_ids)),
      values_(std::move(values)),
      observed_(std::move(observed)),
      stage1_(std::move(stage1_covariates)) {
  const Eigen::Index n = values_.rows();
  if (static_cast<Eigen::Index>(ids_.size()) != n)
    throw DataError("replicate panel: subject_ids length does not match rows");
  if (observed_.rows() != n || observed_.cols() != values_.cols())
    throw DataError("replicate panel: mask shape does not match values");
  if (stage1_) {
    if (stage1_->rows() != n)
      throw DataError("replicate panel: stage-1 covariates have wrong row count");
    if (stage1_->cols() < 1 || (stage1_->col(0).array() != 1.0).any())
      throw DataError("replicate panel: first stage-1 covariate column must be all ones");
  }

  counts_.assign(n, 0);
  within_ss_.assign(n, 0.0);
  means_ = VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      if (!observed_(i, j)) {
        fully_observed_ = false;
        continue;
      }
      if (!std::isfinite(values_(i, j)))
        throw DataError("replicate panel: non-finite observed value for subject '" + ids_[i] + "'");
      sum += values_(i, j);
      ++count;
    }
    if (count == 0)
      throw DataError("replicate panel: subject '" + ids_[i] + "' has no observed replicates");
    const double mean = sum / count;
    double ss = 0.0;
    for (Eigen::Index j = 0; j < values_.cols(); ++j)
      if (observed_(i, j)) ss += (values_(i, j) - mean) * (values_(i, j) - mean);
    counts_[i] = count;
    means_(i) = mean;
    within_ss_[i] = ss;
    total_observed_ += count;
  }
}

namespace {
std::vector<std::string> sequential_ids(Eigen::Index n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) ids.push_back(std::to_string(i + 1));
  return ids;
}
}  // namespace

ReplicatePanel::ReplicatePanel(MatrixXd values)
    : ReplicatePanel(sequential_ids(values.rows()), values,
                     MaskMatrix::Constant(values.rows(), values.cols(), true)) {}

ReplicatePanel ReplicatePanel::with_stage1_covariates(MatrixXd a) const {
  return ReplicatePanel(ids_, values_, observed_, std::move(a));
}

ReplicatePanel ReplicatePanel::with_mask(MaskMatrix observed) const {
  return ReplicatePanel(ids_, values_, std::move(observed), stage1_);
}

ReplicatePanel ReplicatePanel::select_rows(const std::vector<int>& rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  std::vector<std::string> ids;
  MatrixXd values(m, values_.cols());
  MaskMatrix mask(m, values_.cols());
  std::optional<MatrixXd> a;
  if (stage1_) a = MatrixXd(m, stage1_->cols());
  for (Eigen::Index k = 0; k < m; ++k) {
    const int i = rows[k];
    ids.push_back(ids_[i]);
    values.row(k) = values_.row(i);
    mask.row(k) = observed_.row(i);
    if (a) a->row(k) = stage1_->row(i);
  }
  return ReplicatePanel(std::move(ids), std::move(values), std::move(mask), std::move(a));
}

OutcomePanel::OutcomePanel(std::vector<std::string> subject_ids, VectorXd y, MatrixXd covariates,
                           std::vector<std::string> covariate_names)
    : ids_(std::move(subject_ids)),
      y_(std::move(y)),
      covariates_(std::move(covariates)),
      names_(std::move(covariate_names)) {
  if (static_cast<Eigen::Index>(ids_.size()) != y_.size())
    throw DataError("outcome panel: subject_ids length does not match y");
  if (covariates_.rows() != y_.size())
    throw DataError("outcome panel: covariate rows do not match y");
  if (names_.empty())
    for (Eigen::Index c = 0; c < covariates_.cols(); ++c)
      names_.push_back("c" + std::to_string(c + 1));
  if (static_cast<Eigen::Index>(names_.size()) != covariates_.cols())
    throw DataError("outcome panel: covariate name count does not match columns");
}

void OutcomePanel::require_binary() const {
  for (Eigen::Index i = 0; i < y_.size(); ++i)
    if (y_(i) != 0.0 && y_(i) != 1.0)
      throw DataError("outcome panel: logistic outcome must be 0/1 (subject '" + ids_[i] + "')");
}

OutcomePanel OutcomePanel::select_rows(const std::vector<int>& rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  std::vector<std::string> ids;
  VectorXd y(m);
  MatrixXd c(m, covariates_.cols());
  for (Eigen::Index k = 0; k < m; ++k) {
    ids.push_back(ids_[rows[k]]);
    y(k) = y_(rows[k]);
    c.row(k) = covariates_.row(rows[k]);
  }
  return OutcomePanel(std::move(ids), std::move(y), std::move(c), names_);
}

const ParameterSummary& McSummary::at(std::string_view parameter) const {
  for (const auto& p : parameters)
    if (p.parameter == parameter) return p;
  throw std::out_of_range("McSummary: no parameter '" + std::string(parameter) + "'");
}

MatrixXd build_sigma_u(const VarianceComponents& vc, int J) {
  vc.validate();
  if (J < 1) throw ConfigError("build_sigma_u: J must be >= 1");
  MatrixXd s = MatrixXd::Constant(J, J, vc.rho * vc.sigma_u2);
  s.diagonal().setConstant(vc.sigma_u2);
  return s;
}

MatrixXd build_marginal_cov(const VarianceComponents& vc, int J) {
  MatrixXd v = build_sigma_u(vc, J);
  v.array() += vc.gamma1 * vc.gamma1 * vc.sigma_x2;
  return v;
}

}  // namespace blupcal
