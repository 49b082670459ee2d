#include "regkit/kernel_models.hpp"

#include "regkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace regkit {

void validate_kernel(const KernelSpec& kernel) {
  if (const auto* g = std::get_if<GaussianKernel>(&kernel))
    require(g->gamma > 0.0 && std::isfinite(g->gamma), "gaussian kernel: gamma must be > 0");
  if (const auto* p = std::get_if<PolynomialKernel>(&kernel)) {
    require(p->degree >= 1, "polynomial kernel: degree must be >= 1");
    require(p->offset >= 0.0, "polynomial kernel: offset must be >= 0");
  }
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& kernel, const Eigen::MatrixXd& x1,
                              const Eigen::MatrixXd& x2) {
  validate_kernel(kernel);
  require(x1.cols() == x2.cols(), "kernel matrix: input widths differ (" +
                                      std::to_string(x1.cols()) + " vs " +
                                      std::to_string(x2.cols()) + ")");
  if (const auto* g = std::get_if<GaussianKernel>(&kernel)) {
    Eigen::MatrixXd k(x1.rows(), x2.rows());
    for (Index i = 0; i < x1.rows(); ++i)
      for (Index j = 0; j < x2.rows(); ++j)
        k(i, j) = std::exp(-g->gamma * (x1.row(i) - x2.row(j)).squaredNorm());
    return k;
  }
  Eigen::MatrixXd inner = x1 * x2.transpose();
  if (const auto* p = std::get_if<PolynomialKernel>(&kernel))
    return inner.unaryExpr([p](double v) { return std::pow(v + p->offset, p->degree); });
  return inner;
}

namespace {

struct Factored {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

// Cholesky of K + shift I; one retry with kKernelJitter when shift == 0.
Factored factor_kernel(Eigen::MatrixXd k, double shift, const char* who) {
  k.diagonal().array() += shift;
  Factored f{Eigen::LLT<Eigen::MatrixXd>(k), 0.0};
  if (f.llt.info() == Eigen::Success) return f;
  if (shift == 0.0) {
    k.diagonal().array() += kKernelJitter;
    f.llt.compute(k);
    f.jitter = kKernelJitter;
    if (f.llt.info() == Eigen::Success) return f;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
  const double pivot = ldlt.vectorD().size() ? ldlt.vectorD().minCoeff() : 0.0;
  throw NumericalError(std::string(who) + ": kernel matrix not positive-definite (smallest pivot " +
                       format_double(pivot) + ")");
}

} // namespace

KrrModel krr_fit(const Dataset& d, const KernelSpec& kernel, double alpha) {
  require(alpha >= 0.0, "krr: alpha must be >= 0");
  require(d.rows() >= 1, "krr: empty dataset");
  const auto f = factor_kernel(kernel_matrix(kernel, d.inputs(), d.inputs()), alpha, "krr");
  return KrrModel{kernel, d.inputs(), f.llt.solve(d.targets()), alpha, f.jitter};
}

Eigen::MatrixXd krr_predict(const KrrModel& m, const Eigen::MatrixXd& x) {
  require(x.cols() == m.train_inputs.cols(), "krr predict: query width " +
                                                 std::to_string(x.cols()) + " != training width " +
                                                 std::to_string(m.train_inputs.cols()));
  return kernel_matrix(m.kernel, x, m.train_inputs) * m.dual_coefficients;
}

double woodbury_discrepancy(const Eigen::MatrixXd& phi, double alpha) {
  require(alpha > 0.0, "woodbury: alpha must be > 0");
  const Index n = phi.rows(), b = phi.cols();
  Eigen::MatrixXd small = phi.transpose() * phi + alpha * Eigen::MatrixXd::Identity(b, b);
  Eigen::MatrixXd large = phi * phi.transpose() + alpha * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd lhs = small.llt().solve(phi.transpose());
  // Phi^T (Phi Phi^T + alpha I)^{-1} = ((Phi Phi^T + alpha I)^{-1} Phi)^T by symmetry
  const Eigen::MatrixXd rhs = large.llt().solve(phi).transpose();
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

GprModel gpr_fit(const Dataset& d, const KernelSpec& kernel, double noise_variance) {
  require(noise_variance >= 0.0, "gpr: noise variance must be >= 0");
  validate_kernel(kernel);
  if (d.empty()) return GprModel{kernel, d.inputs(), d.targets(), noise_variance, 0.0};
  const auto f =
      factor_kernel(kernel_matrix(kernel, d.inputs(), d.inputs()), noise_variance, "gpr");
  return GprModel{kernel, d.inputs(), f.llt.solve(d.targets()), noise_variance, f.jitter};
}

GprPosterior gpr_predict(const GprModel& m, const Eigen::MatrixXd& x) {
  GprPosterior post;
  post.noise_variance = m.noise_variance;
  Eigen::MatrixXd prior = kernel_matrix(m.kernel, x, x);
  if (m.train_inputs.rows() == 0) {
    post.mean = Eigen::MatrixXd::Zero(x.rows(), m.dual_coefficients.cols());
    post.covariance = prior;
  } else {
    require(x.cols() == m.train_inputs.cols(), "gpr predict: query width " +
                                                   std::to_string(x.cols()) +
                                                   " != training width " +
                                                   std::to_string(m.train_inputs.cols()));
    Eigen::MatrixXd k_train = kernel_matrix(m.kernel, m.train_inputs, m.train_inputs);
    k_train.diagonal().array() += m.noise_variance + m.jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(k_train);
    if (llt.info() != Eigen::Success)
      throw NumericalError("gpr predict: training covariance no longer factors");
    const Eigen::MatrixXd cross = kernel_matrix(m.kernel, m.train_inputs, x); // n_* x n
    post.mean = cross.transpose() * m.dual_coefficients;
    const Eigen::MatrixXd v = llt.matrixL().solve(cross);
    post.covariance = prior - v.transpose() * v;
  }

  Eigen::MatrixXd& cov = post.covariance;
  post.asymmetry_before_symmetrizing =
      cov.size() ? (cov - cov.transpose()).cwiseAbs().maxCoeff() : 0.0;
  cov = 0.5 * (cov + cov.transpose()).eval();
  if (cov.size() == 0) return post;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  post.min_eigenvalue_before_clamp = eig.eigenvalues().minCoeff();
  const double scale = std::max(1.0, prior.diagonal().cwiseAbs().maxCoeff());
  if (post.min_eigenvalue_before_clamp < -kNegativeEigenTolerance * scale)
    throw NumericalError("gpr: posterior covariance has eigenvalue " +
                         format_double(post.min_eigenvalue_before_clamp) +
                         "; try a positive noise variance");
  if (post.min_eigenvalue_before_clamp < 0.0) {
    const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
    cov = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
  }
  return post;
}

GprPosterior gpr_posterior(const Dataset& d, const Eigen::MatrixXd& x, const KernelSpec& kernel,
                           double noise_variance) {
  return gpr_predict(gpr_fit(d, kernel, noise_variance), x);
}

double interp1_linear(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, double xq) {
  require(xs.size() >= 1 && xs.size() == ys.size(), "interp1: need matching, non-empty abscissae");
  for (Index i = 1; i < xs.size(); ++i)
    require(xs(i) > xs(i - 1), "interp1: abscissae must be strictly increasing (duplicate or "
                               "unsorted at index " + std::to_string(i) + ")");
  require(xq >= xs(0) && xq <= xs(xs.size() - 1),
          "interp1: query " + format_double(xq) + " outside [" + format_double(xs(0)) + ", " +
              format_double(xs(xs.size() - 1)) + "] (no extrapolation)");
  if (xs.size() == 1) return ys(0);
  const auto* begin = xs.data();
  const auto* hi = std::upper_bound(begin, begin + xs.size(), xq);
  Index j = std::min<Index>(hi - begin, xs.size() - 1); // right neighbor
  const Index i = j - 1;
  const double span = xs(j) - xs(i);
  const double w_left = (xs(j) - xq) / span;
  const double w_right = (xq - xs(i)) / span;
  return w_left * ys(i) + w_right * ys(j);
}

Eigen::VectorXd knn_predict(const Dataset& d, const Eigen::VectorXd& xq, Index k) {
  require(k >= 1 && k <= d.rows(), "knn: k must lie in [1, " + std::to_string(d.rows()) + "]");
  require(xq.size() == d.input_dim(), "knn: query width does not match dataset");
  std::vector<std::pair<double, Index>> dist;
  dist.reserve(static_cast<std::size_t>(d.rows()));
  for (Index i = 0; i < d.rows(); ++i)
    dist.emplace_back((d.inputs().row(i).transpose() - xq).squaredNorm(), i);
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d.output_dim());
  for (Index j = 0; j < k; ++j) sum += d.targets().row(dist[static_cast<std::size_t>(j)].second).transpose();
  return sum / static_cast<double>(k);
}

} // namespace regkit
