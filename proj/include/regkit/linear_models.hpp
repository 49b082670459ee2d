#pragma once

#include "regkit/dataset.hpp"

#include <Eigen/Dense>

#include <variant>
#include <vector>

namespace regkit {

/// Scalar-input monomials, highest power first: [x^d, ..., x, 1].
struct PolynomialBasis {
  int degree = 1;
};

/// exp(-c_k^2 |x - x_{c,k}|^2), one column per center.
struct GaussianRbfBasis {
  Eigen::MatrixXd centers; // n_b x n_x
  Eigen::VectorXd shapes;  // n_b, all > 0
};

/// Phi(X) = X. Identity features, used to compare against a linear kernel.
struct IdentityBasis {};

using BasisSpec = std::variant<PolynomialBasis, GaussianRbfBasis, IdentityBasis>;

void validate_basis(const BasisSpec& basis);
/// Column count of the feature matrix for inputs of width input_dim.
Index basis_size(const BasisSpec& basis, Index input_dim);

/// Shape factor 1 / (2 * median nearest-center distance), shared by all
/// centers. Needs at least two distinct centers.
double default_rbf_shape(const Eigen::MatrixXd& centers);

/// n_b equispaced 1-D centers over [lo, hi] with a common shape factor.
GaussianRbfBasis equispaced_rbf_basis(double lo, double hi, Index n_b, double shape);

Eigen::MatrixXd feature_matrix(const BasisSpec& basis, const Eigen::MatrixXd& x);

struct FitInfo {
  double condition_estimate = 1.0; // of the normal matrix, ridge only
  bool ill_conditioned = false;    // condition_estimate above 1e12
  bool converged = true;           // lasso only
  int iterations = 0;
  std::vector<double> objective_history; // lasso: objective per iteration, starting at w = 0
};

struct LinearModel {
  BasisSpec basis;
  Eigen::MatrixXd weights; // n_b x n_y
  FitInfo info;
};

inline constexpr double kConditionWarning = 1e12;

/// Solves (Phi^T Phi + alpha I) W = Phi^T Y with a Cholesky factorization.
/// Throws NumericalError when the normal matrix is singular at alpha = 0.
LinearModel ridge_fit(const Dataset& d, const BasisSpec& basis, double alpha);

/// Soft threshold sign(z) * max(|z| - t, 0).
double soft_threshold(double z, double t);

/// Objective (1/n_p)|Y - Phi W|^2 + alpha |W|_1.
double lasso_objective(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y,
                       const Eigen::MatrixXd& w, double alpha);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_iteration(const Eigen::MatrixXd& a, int max_iters = 10000, double tol = 1e-13);

/// Proximal gradient (ISTA) with step 1/L, L = lambda_max((2/n_p) Phi^T Phi).
/// On hitting max_iters the last iterate is returned with info.converged false.
LinearModel lasso_fit(const Dataset& d, const BasisSpec& basis, double alpha, int max_iters,
                      double tol);

Eigen::MatrixXd predict(const LinearModel& m, const Eigen::MatrixXd& x);

/// dY/dW for a linear-in-parameters model, i.e. Phi(X) itself.
Eigen::MatrixXd model_param_jacobian(const LinearModel& m, const Eigen::MatrixXd& x);

} // namespace regkit
