#include "scmlens/regression.hpp"

#include <cmath>
#include <string>

#include "scmlens/error.hpp"

namespace scmlens {

namespace {

void check_problem(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const char* what) {
  if (x.rows() != y.size()) {
    throw ValidationError(std::string(what) + ": design has " + std::to_string(x.rows()) + " rows but target has " +
                          std::to_string(y.size()));
  }
  if (x.cols() == 0) throw ValidationError(std::string(what) + ": design has no columns");
  if (!x.allFinite() || !y.allFinite()) throw NumericalError(std::string(what) + ": non-finite input");
}

void check_solution(const Eigen::VectorXd& beta, const char* what) {
  if (!beta.allFinite()) throw NumericalError(std::string(what) + ": solver produced non-finite coefficients");
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double penalized_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - softplus(eta[i]);
  return ll - 0.5 * kLogisticJitter * beta.squaredNorm();
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& features) {
  Eigen::MatrixXd x(features.rows(), features.cols() + 1);
  x.leftCols(features.cols()) = features;
  x.col(features.cols()).setOnes();
  return x;
}

Eigen::VectorXd fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  check_problem(x, y, "ols");
  if (x.rows() < x.cols()) {
    throw ValidationError("ols: underdetermined fit, " + std::to_string(x.rows()) + " rows for " +
                          std::to_string(x.cols()) + " coefficients (use ridge)");
  }
  Eigen::VectorXd beta = x.completeOrthogonalDecomposition().solve(y);
  check_solution(beta, "ols");
  return beta;
}

Eigen::VectorXd fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  check_problem(x, y, "ridge");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("ridge: lambda must be a positive finite number, got " + std::to_string(lambda));
  }
  const Eigen::Index n = x.rows(), p = x.cols();
  const Eigen::Index penalized = p - 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + penalized, p);
  a.topRows(n) = x;
  const double root = std::sqrt(lambda);
  for (Eigen::Index k = 0; k < penalized; ++k) a(n + k, k) = root;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + penalized);
  b.head(n) = y;
  Eigen::VectorXd beta = a.colPivHouseholderQr().solve(b);
  check_solution(beta, "ridge");
  return beta;
}

LogisticFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int max_iters, double tol) {
  check_problem(x, y, "logistic");
  if (max_iters < 1) throw ValidationError("logistic: max_iters must be at least 1");
  Eigen::Index positives = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) throw ValidationError("logistic: targets must be 0 or 1");
    positives += y[i] == 1.0 ? 1 : 0;
  }
  if (positives == 0 || positives == y.size()) {
    throw ValidationError("logistic: degenerate target, only one class present");
  }

  const Eigen::Index p = x.cols();
  LogisticFit fit;
  fit.coefficients = Eigen::VectorXd::Zero(p);
  double ll = penalized_log_likelihood(x, y, fit.coefficients);
  for (int iter = 1; iter <= max_iters; ++iter) {
    fit.iterations = iter;
    const Eigen::VectorXd eta = x * fit.coefficients;
    Eigen::VectorXd prob(eta.size()), weight(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      prob[i] = sigmoid(eta[i]);
      weight[i] = prob[i] * (1.0 - prob[i]);
    }
    const Eigen::VectorXd gradient = x.transpose() * (y - prob) - kLogisticJitter * fit.coefficients;
    Eigen::MatrixXd hessian = x.transpose() * weight.asDiagonal() * x;
    hessian.diagonal().array() += kLogisticJitter;
    const Eigen::VectorXd step = hessian.ldlt().solve(gradient);
    if (!step.allFinite()) throw NumericalError("logistic: Newton step is not finite");

    double scale = 1.0;
    Eigen::VectorXd candidate = fit.coefficients + step;
    double next = penalized_log_likelihood(x, y, candidate);
    for (int halving = 0; halving < 40 && !(next >= ll); ++halving) {
      scale *= 0.5;
      candidate = fit.coefficients + scale * step;
      next = penalized_log_likelihood(x, y, candidate);
    }
    if (!(next >= ll)) {
      fit.converged = true;  // no ascent direction left at machine precision
      break;
    }
    const double change = next - ll;
    fit.coefficients = candidate;
    ll = next;
    if (change < tol) {
      fit.converged = true;
      break;
    }
  }
  check_solution(fit.coefficients, "logistic");
  fit.log_likelihood = ll;
  return fit;
}

}  // namespace scmlens
