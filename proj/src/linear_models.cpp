#include "regkit/linear_models.hpp"

#include "regkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace regkit {

void validate_basis(const BasisSpec& basis) {
  if (const auto* p = std::get_if<PolynomialBasis>(&basis)) {
    require(p->degree >= 0, "polynomial basis: degree must be >= 0");
  } else if (const auto* r = std::get_if<GaussianRbfBasis>(&basis)) {
    require(r->centers.rows() >= 1, "rbf basis: needs at least one center");
    require(r->centers.rows() == r->shapes.size(), "rbf basis: one shape factor per center");
    require(r->centers.allFinite(), "rbf basis: centers must be finite");
    require(r->shapes.allFinite() && (r->shapes.array() > 0.0).all(),
            "rbf basis: shape factors must be > 0");
  }
}

Index basis_size(const BasisSpec& basis, Index input_dim) {
  if (const auto* p = std::get_if<PolynomialBasis>(&basis)) return p->degree + 1;
  if (const auto* r = std::get_if<GaussianRbfBasis>(&basis)) return r->centers.rows();
  return input_dim;
}

double default_rbf_shape(const Eigen::MatrixXd& centers) {
  const Index n = centers.rows();
  require(n >= 2, "rbf shape: need at least two centers");
  std::vector<double> nearest;
  for (Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j)
      if (j != i) best = std::min(best, (centers.row(i) - centers.row(j)).norm());
    nearest.push_back(best);
  }
  std::sort(nearest.begin(), nearest.end());
  const auto mid = nearest.size() / 2;
  const double median =
      nearest.size() % 2 ? nearest[mid] : 0.5 * (nearest[mid - 1] + nearest[mid]);
  require(median > 0.0, "rbf shape: duplicate centers");
  return 1.0 / (2.0 * median);
}

GaussianRbfBasis equispaced_rbf_basis(double lo, double hi, Index n_b, double shape) {
  require(n_b >= 1 && hi > lo, "rbf basis: need n_b >= 1 and hi > lo");
  GaussianRbfBasis b;
  b.centers = n_b == 1 ? Eigen::MatrixXd::Constant(1, 1, 0.5 * (lo + hi))
                       : Eigen::MatrixXd(Eigen::VectorXd::LinSpaced(n_b, lo, hi));
  b.shapes = Eigen::VectorXd::Constant(n_b, shape);
  return b;
}

Eigen::MatrixXd feature_matrix(const BasisSpec& basis, const Eigen::MatrixXd& x) {
  validate_basis(basis);
  require(x.allFinite(), "feature matrix: inputs must be finite");
  if (const auto* p = std::get_if<PolynomialBasis>(&basis)) {
    require(x.cols() == 1, "polynomial basis needs scalar inputs, got " + std::to_string(x.cols()) +
                               " columns");
    Eigen::MatrixXd phi(x.rows(), p->degree + 1);
    phi.col(p->degree).setOnes();
    for (int k = p->degree - 1; k >= 0; --k) phi.col(k) = phi.col(k + 1).cwiseProduct(x.col(0));
    return phi;
  }
  if (const auto* r = std::get_if<GaussianRbfBasis>(&basis)) {
    require(x.cols() == r->centers.cols(), "rbf basis: input width " + std::to_string(x.cols()) +
                                               " does not match center width " +
                                               std::to_string(r->centers.cols()));
    Eigen::MatrixXd phi(x.rows(), r->centers.rows());
    for (Index k = 0; k < r->centers.rows(); ++k) {
      const double c2 = r->shapes(k) * r->shapes(k);
      for (Index i = 0; i < x.rows(); ++i)
        phi(i, k) = std::exp(-c2 * (x.row(i) - r->centers.row(k)).squaredNorm());
    }
    return phi;
  }
  return x;
}

LinearModel ridge_fit(const Dataset& d, const BasisSpec& basis, double alpha) {
  require(d.rows() >= 1, "ridge: empty dataset");
  require(alpha >= 0.0, "ridge: alpha must be >= 0");
  const Eigen::MatrixXd phi = feature_matrix(basis, d.inputs());
  Eigen::MatrixXd normal = phi.transpose() * phi;
  normal.diagonal().array() += alpha;

  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (llt.info() != Eigen::Success || rcond < std::numeric_limits<double>::epsilon())
    throw NumericalError("ridge: normal matrix is singular (condition estimate " +
                         format_double(cond) + "); use alpha > 0 or fewer basis functions");

  LinearModel m{basis, llt.solve(phi.transpose() * d.targets()), {}};
  m.info.condition_estimate = cond;
  m.info.ill_conditioned = cond > kConditionWarning;
  return m;
}

double soft_threshold(double z, double t) {
  const double mag = std::max(std::abs(z) - t, 0.0);
  return z > 0.0 ? mag : (z < 0.0 ? -mag : 0.0);
}

double lasso_objective(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y,
                       const Eigen::MatrixXd& w, double alpha) {
  return (y - phi * w).squaredNorm() / static_cast<double>(y.rows()) +
         alpha * w.cwiseAbs().sum();
}

double power_iteration(const Eigen::MatrixXd& a, int max_iters, double tol) {
  require(a.rows() == a.cols() && a.rows() > 0, "power iteration: need a square matrix");
  Eigen::VectorXd v = Eigen::VectorXd::Ones(a.rows()).normalized();
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd av = a * v;
    const double next = v.dot(av);
    const double norm = av.norm();
    if (norm == 0.0) return 0.0;
    v = av / norm;
    if (std::abs(next - lambda) <= tol * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

LinearModel lasso_fit(const Dataset& d, const BasisSpec& basis, double alpha, int max_iters,
                      double tol) {
  require(d.rows() >= 1, "lasso: empty dataset");
  require(alpha >= 0.0, "lasso: alpha must be >= 0");
  require(max_iters >= 1 && tol > 0.0, "lasso: need max_iters >= 1 and tol > 0");
  const Eigen::MatrixXd phi = feature_matrix(basis, d.inputs());
  const Eigen::MatrixXd& y = d.targets();
  const double scale = 2.0 / static_cast<double>(d.rows());
  const Eigen::MatrixXd gram = scale * phi.transpose() * phi;
  const Eigen::MatrixXd phi_t_y = scale * phi.transpose() * y;

  // Power iteration approaches lambda_max from below; the small inflation
  // keeps the step within the descent-lemma bound.
  const double lipschitz = power_iteration(gram) * (1.0 + 1e-9);
  LinearModel m{basis, Eigen::MatrixXd::Zero(phi.cols(), y.cols()), {}};
  if (lipschitz <= 0.0) return m; // Phi == 0: W = 0 is optimal
  const double step = 1.0 / lipschitz;

  m.info.converged = false;
  m.info.objective_history.push_back(lasso_objective(phi, y, m.weights, alpha));
  for (int it = 1; it <= max_iters; ++it) {
    const Eigen::MatrixXd grad = gram * m.weights - phi_t_y;
    Eigen::MatrixXd next = (m.weights - step * grad)
                               .unaryExpr([t = step * alpha](double z) { return soft_threshold(z, t); });
    const double change = (next - m.weights).cwiseAbs().maxCoeff();
    m.weights = std::move(next);
    m.info.iterations = it;
    m.info.objective_history.push_back(lasso_objective(phi, y, m.weights, alpha));
    if (change < tol) {
      m.info.converged = true;
      break;
    }
  }
  return m;
}

Eigen::MatrixXd predict(const LinearModel& m, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd phi = feature_matrix(m.basis, x);
  require(phi.cols() == m.weights.rows(), "predict: feature count " + std::to_string(phi.cols()) +
                                              " does not match weight rows " +
                                              std::to_string(m.weights.rows()));
  return phi * m.weights;
}

Eigen::MatrixXd model_param_jacobian(const LinearModel& m, const Eigen::MatrixXd& x) {
  return feature_matrix(m.basis, x);
}

} // namespace regkit
