#pragma once

#include "regkit/dataset.hpp"

#include <Eigen/Dense>

#include <variant>

namespace regkit {

/// exp(-gamma |x - x'|^2)
struct GaussianKernel {
  double gamma = 1.0;
};

/// <x, x'>
struct LinearKernel {};

/// (<x, x'> + offset)^degree
struct PolynomialKernel {
  int degree = 2;
  double offset = 1.0;
};

using KernelSpec = std::variant<GaussianKernel, LinearKernel, PolynomialKernel>;

void validate_kernel(const KernelSpec& kernel);

Eigen::MatrixXd kernel_matrix(const KernelSpec& kernel, const Eigen::MatrixXd& x1,
                              const Eigen::MatrixXd& x2);

/// Diagonal jitter tried once when K + alpha I fails to factor at alpha = 0.
inline constexpr double kKernelJitter = 1e-10;

/// Kernel ridge regression. Note that `dual_coefficients` (one row per stored
/// training input) and `regularizer` (the scalar ridge alpha) are different
/// things that share a Greek letter in the usual notation.
struct KrrModel {
  KernelSpec kernel;
  Eigen::MatrixXd train_inputs;      // n_* x n_x
  Eigen::MatrixXd dual_coefficients; // n_* x n_y
  double regularizer = 0.0;
  double jitter = 0.0; // added to the diagonal during the fit, 0 unless needed
};

/// dual = (K(x_*, x_*) + alpha I)^{-1} y_* via Cholesky.
KrrModel krr_fit(const Dataset& d, const KernelSpec& kernel, double alpha);
/// K(x_**, x_*) * dual
Eigen::MatrixXd krr_predict(const KrrModel& m, const Eigen::MatrixXd& x);

/// max |(Phi^T Phi + alpha I_b)^{-1} Phi^T - Phi^T (Phi Phi^T + alpha I_n)^{-1}|,
/// each side from its own factorized solve.
double woodbury_discrepancy(const Eigen::MatrixXd& phi, double alpha);

/// Zero-prior-mean Gaussian process conditioned on training data.
/// Training inputs are x_*; K_** = K(x_*, x_*) and K_* = K(x, x_*).
struct GprPosterior {
  Eigen::MatrixXd mean;       // n x n_y
  Eigen::MatrixXd covariance; // n x n, symmetric PSD after clamping
  double noise_variance = 0.0;
  double min_eigenvalue_before_clamp = 0.0;
  double asymmetry_before_symmetrizing = 0.0;

  Eigen::VectorXd variance() const { return covariance.diagonal(); }
};

/// Fitted GP: the training inputs plus dual coefficients; the covariance is
/// recomputed per query from the stored inputs.
struct GprModel {
  KernelSpec kernel;
  Eigen::MatrixXd train_inputs;
  Eigen::MatrixXd dual_coefficients;
  double noise_variance = 0.0;
  double jitter = 0.0;
};

/// Negative eigenvalues down to this (times the prior scale) are clamped to 0;
/// anything more negative is a NumericalError.
inline constexpr double kNegativeEigenTolerance = 1e-10;

GprModel gpr_fit(const Dataset& d, const KernelSpec& kernel, double noise_variance);
GprPosterior gpr_predict(const GprModel& m, const Eigen::MatrixXd& x);
GprPosterior gpr_posterior(const Dataset& d, const Eigen::MatrixXd& x, const KernelSpec& kernel,
                           double noise_variance);

/// Two-point barycentric interpolation over strictly increasing abscissae.
double interp1_linear(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, double xq);

/// Mean target of the k nearest rows (Euclidean); ties go to the lower row.
Eigen::VectorXd knn_predict(const Dataset& d, const Eigen::VectorXd& xq, Index k);

} // namespace regkit
