#include "blupcal/glm.hpp"

#include "blupcal/errors.hpp"
#include "blupcal/normal.hpp"

#include <cmath>

namespace blupcal {

namespace {

int first_dependent_column(const MatrixXd& design) {
  for (Eigen::Index k = 1; k <= design.cols(); ++k) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(design.leftCols(k));
    if (qr.rank() < k) return static_cast<int>(k - 1);
  }
  return -1;
}

void require_shape(const MatrixXd& design, const VectorXd& y) {
  if (design.rows() != y.size())
    throw DataError("design has " + std::to_string(design.rows()) + " rows but y has " +
                    std::to_string(y.size()));
  if (design.rows() <= design.cols())
    throw DataError("need more observations than coefficients (n=" +
                    std::to_string(design.rows()) + ", q=" + std::to_string(design.cols()) + ")");
}

[[noreturn]] void throw_singular(const MatrixXd& design) {
  const int col = first_dependent_column(design);
  throw SingularDesignError(
      "design matrix is rank deficient: column " + std::to_string(col) +
          " is linearly dependent on the preceding columns",
      col);
}

// (D'D)^{-1} from the pivoted QR factor.
MatrixXd unscaled_covariance(const Eigen::ColPivHouseholderQR<MatrixXd>& qr) {
  const Eigen::Index q = qr.cols();
  const MatrixXd r = qr.matrixR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
  const MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(q, q));
  const MatrixXd permuted = r_inv * r_inv.transpose();
  MatrixXd cov = qr.colsPermutation() * permuted * qr.colsPermutation().transpose();
  return 0.5 * (cov + cov.transpose());
}

double log1p_exp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double bernoulli_deviance(const VectorXd& eta, const VectorXd& y) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) dev += log1p_exp(eta(i)) - y(i) * eta(i);
  return 2.0 * dev;
}

}  // namespace

GlmFit fit_linear_ols(const MatrixXd& design, const VectorXd& y) {
  require_shape(design, y);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  if (qr.rank() < design.cols()) throw_singular(design);

  GlmFit fit;
  fit.family = Family::linear;
  fit.coefficients = qr.solve(y);
  const VectorXd resid = y - design * fit.coefficients;
  const double rss = resid.squaredNorm();
  fit.dispersion = rss / static_cast<double>(design.rows() - design.cols());
  fit.deviance = rss;
  fit.covariance = fit.dispersion * unscaled_covariance(qr);
  fit.converged = true;
  fit.n_iterations = 1;
  return fit;
}

GlmFit fit_logistic_irls(const MatrixXd& design, const VectorXd& y, const IrlsOptions& options) {
  require_shape(design, y);
  double positives = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw DataError("logistic outcome must be coded 0/1");
    positives += y(i);
  }
  if (positives == 0.0 || positives == static_cast<double>(y.size()))
    throw DataError("logistic outcome has a single class");
  {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    if (qr.rank() < design.cols()) throw_singular(design);
  }

  const Eigen::Index q = design.cols();
  GlmFit fit;
  fit.family = Family::logistic;
  fit.dispersion = 1.0;
  VectorXd beta = VectorXd::Zero(q);
  VectorXd eta = design * beta;
  double deviance = bernoulli_deviance(eta, y);
  MatrixXd information(q, q);

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const VectorXd prob = (1.0 + (-eta.array()).exp()).inverse().matrix();
    const VectorXd w = prob.array() * (1.0 - prob.array());
    information.noalias() = design.transpose() * w.asDiagonal() * design;
    const VectorXd score = design.transpose() * (y - prob);
    Eigen::LDLT<MatrixXd> ldlt(information);
    if (ldlt.info() != Eigen::Success) {
      fit.diagnostic = "information matrix is singular at iteration " + std::to_string(iter);
      break;
    }
    const VectorXd step = ldlt.solve(score);
    beta += step;
    eta.noalias() = design * beta;
    const double new_deviance = bernoulli_deviance(eta, y);
    fit.n_iterations = iter;

    if (!beta.allFinite() || beta.norm() > options.divergence_norm) {
      fit.diagnostic = "coefficient norm diverged; complete or quasi-complete separation";
      break;
    }
    const bool small_step = step.cwiseAbs().maxCoeff() < options.coefficient_tolerance;
    const bool small_dev =
        std::fabs(new_deviance - deviance) / (std::fabs(new_deviance) + 0.1) <
        options.deviance_tolerance;
    deviance = new_deviance;
    if (small_step || small_dev) {
      fit.converged = true;
      break;
    }
  }

  if (fit.converged && eta.cwiseAbs().maxCoeff() > 30.0) {
    fit.converged = false;
    fit.diagnostic = "fitted probabilities numerically 0 or 1; separation";
  }
  if (!fit.converged && fit.diagnostic.empty())
    fit.diagnostic = "IRLS reached " + std::to_string(options.max_iterations) + " iterations";

  const VectorXd prob = (1.0 + (-eta.array()).exp()).inverse().matrix();
  const VectorXd w = prob.array() * (1.0 - prob.array());
  information.noalias() = design.transpose() * w.asDiagonal() * design;
  MatrixXd cov = information.ldlt().solve(MatrixXd::Identity(q, q));
  fit.covariance = 0.5 * (cov + cov.transpose());
  fit.coefficients = beta;
  fit.deviance = deviance;
  return fit;
}

WaldBounds wald_interval(const GlmFit& fit, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("wald_interval: level must lie in (0,1)");
  const double z = level == 0.95 ? kZ975 : normal_quantile(0.5 * (1.0 + level));
  const VectorXd se = fit.standard_errors();
  return {fit.coefficients - z * se, fit.coefficients + z * se};
}

}  // namespace blupcal
