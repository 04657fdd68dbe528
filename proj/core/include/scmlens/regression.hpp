#pragma once

#include <Eigen/Dense>

namespace scmlens {

// Design matrices carry the intercept as their LAST column (all ones);
// coefficient vectors follow the same layout.

/// Appends the all-ones intercept column.
Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& features);

/// Least squares; rank-deficient designs get the minimum-norm solution.
/// Requires rows >= columns.
Eigen::VectorXd fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Ridge with the intercept column left unpenalized; lambda > 0.
Eigen::VectorXd fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);

struct LogisticFit {
  Eigen::VectorXd coefficients;
  int iterations = 0;
  bool converged = false;
  double log_likelihood = 0.0;
};

inline constexpr int kDefaultLogisticIterations = 100;
inline constexpr double kDefaultLogisticTolerance = 1e-8;
inline constexpr double kLogisticJitter = 1e-8;

/// Bernoulli maximum likelihood by iteratively reweighted least squares
/// (Newton steps with step halving). y must be 0/1 with both classes present.
LogisticFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         int max_iters = kDefaultLogisticIterations, double tol = kDefaultLogisticTolerance);

double sigmoid(double z);

}  // namespace scmlens
