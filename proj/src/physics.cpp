#include "regkit/physics.hpp"

#include "regkit/errors.hpp"
#include "regkit/losses.hpp"

#include <lapacke.h>

#include <cmath>
#include <limits>

namespace regkit {

double ScalarFunction::operator()(double x) const {
  double sum = 0.0;
  for (const auto& term : terms) {
    if (const auto* c = std::get_if<ConstTerm>(&term)) {
      sum += c->value;
    } else if (const auto* p = std::get_if<PolyTerm>(&term)) {
      double acc = 0.0;
      for (double coeff : p->coeffs) acc = acc * x + coeff;
      sum += acc;
    } else {
      const auto& s = std::get<SinTerm>(term);
      sum += s.amplitude * std::sin(s.frequency * x + s.phase);
    }
  }
  return sum;
}

Eigen::VectorXd ScalarFunction::operator()(const Eigen::VectorXd& x) const {
  return x.unaryExpr([this](double v) { return (*this)(v); });
}

void CollocationProblem::validate() const {
  require(std::isfinite(x_lo) && std::isfinite(x_hi) && x_lo < x_hi,
          "problem: need a finite domain with x_lo < x_hi");
  require(!boundary.empty(), "problem: need at least one boundary condition");
  for (const auto& bc : boundary)
    require(bc.location >= x_lo && bc.location <= x_hi && std::isfinite(bc.value),
            "problem: boundary condition at " + format_double(bc.location) + " is outside the domain");
  for (Index i = 0; i < collocation.size(); ++i)
    require(collocation(i) >= x_lo && collocation(i) <= x_hi,
            "problem: collocation point " + format_double(collocation(i)) + " outside the domain");
}

Eigen::VectorXd equispaced_interior(double lo, double hi, Index n) {
  require(n >= 1 && hi > lo, "collocation: need n >= 1 and hi > lo");
  return Eigen::VectorXd::LinSpaced(n + 2, lo, hi).segment(1, n);
}

DerivativeMatrices rbf_derivative_matrices(const GaussianRbfBasis& basis, const Eigen::VectorXd& x) {
  validate_basis(basis);
  require(basis.centers.cols() == 1, "rbf derivatives: only 1-D bases are supported");
  const Index n = x.size(), nb = basis.centers.rows();
  DerivativeMatrices d{Eigen::MatrixXd(n, nb), Eigen::MatrixXd(n, nb), Eigen::MatrixXd(n, nb)};
  for (Index k = 0; k < nb; ++k) {
    const double c2 = basis.shapes(k) * basis.shapes(k);
    for (Index i = 0; i < n; ++i) {
      const double r = x(i) - basis.centers(k, 0);
      const double phi = std::exp(-c2 * r * r);
      d.value(i, k) = phi;
      d.first(i, k) = -2.0 * c2 * r * phi;
      d.second(i, k) = (4.0 * c2 * c2 * r * r - 2.0 * c2) * phi;
    }
  }
  return d;
}

DerivativeMatrices basis_derivative_matrices(const BasisSpec& basis, const Eigen::VectorXd& x) {
  if (const auto* r = std::get_if<GaussianRbfBasis>(&basis)) return rbf_derivative_matrices(*r, x);
  const auto* p = std::get_if<PolynomialBasis>(&basis);
  require(p != nullptr, "derivatives: basis must be a 1-D RBF or polynomial basis");
  require(p->degree >= 0, "polynomial basis: degree must be >= 0");
  const Index n = x.size(), nb = p->degree + 1;
  DerivativeMatrices d{Eigen::MatrixXd(n, nb), Eigen::MatrixXd::Zero(n, nb),
                       Eigen::MatrixXd::Zero(n, nb)};
  for (Index col = 0; col < nb; ++col) {
    const int power = p->degree - static_cast<int>(col);
    for (Index i = 0; i < n; ++i) {
      d.value(i, col) = std::pow(x(i), power);
      if (power >= 1) d.first(i, col) = power * std::pow(x(i), power - 1);
      if (power >= 2) d.second(i, col) = power * (power - 1) * std::pow(x(i), power - 2);
    }
  }
  return d;
}

CollocationSystem assemble_collocation(const CollocationProblem& problem, const BasisSpec& basis) {
  problem.validate();
  const Eigen::VectorXd& x = problem.collocation;
  const auto d = basis_derivative_matrices(basis, x);
  CollocationSystem s;
  s.op = problem.a(x).asDiagonal() * d.second + problem.b(x).asDiagonal() * d.first +
         problem.c(x).asDiagonal() * d.value;
  s.rhs = problem.g(x);

  const auto nbc = static_cast<Index>(problem.boundary.size());
  Eigen::VectorXd xb(nbc);
  for (Index i = 0; i < nbc; ++i) xb(i) = problem.boundary[static_cast<std::size_t>(i)].location;
  const auto db = basis_derivative_matrices(basis, xb);
  s.bc.resize(nbc, d.value.cols());
  s.bc_values.resize(nbc);
  for (Index i = 0; i < nbc; ++i) {
    const auto& bc = problem.boundary[static_cast<std::size_t>(i)];
    s.bc.row(i) = bc.kind == BoundaryKind::Dirichlet ? db.value.row(i) : db.first.row(i);
    s.bc_values(i) = bc.value;
  }
  return s;
}

Eigen::VectorXd pde_residual(const CollocationProblem& problem, const BasisSpec& basis,
                             const Eigen::VectorXd& w) {
  const auto s = assemble_collocation(problem, basis);
  require(w.size() == s.op.cols(), "pde residual: weight count does not match basis size");
  return s.op * w - s.rhs;
}

Eigen::VectorXd boundary_residual(const CollocationProblem& problem, const BasisSpec& basis,
                                  const Eigen::VectorXd& w) {
  const auto s = assemble_collocation(problem, basis);
  require(w.size() == s.bc.cols(), "boundary residual: weight count does not match basis size");
  return s.bc * w - s.bc_values;
}

LinearModel penalized_fit(const std::optional<Dataset>& data, const PhysicsCost& cost,
                          const BasisSpec& basis, double alpha_reg) {
  require(cost.alpha_phys >= 0.0, "penalized fit: alpha_phys must be >= 0");
  require(alpha_reg >= 0.0, "penalized fit: alpha_reg must be >= 0");
  const bool has_data = data && !data->empty();
  const Index n_c = cost.problem.collocation.size();
  require(has_data || n_c > 0, "penalized fit: needs data or collocation points");
  if (has_data) require(data->output_dim() == 1, "penalized fit: expects a single target column");

  const auto sys = assemble_collocation(cost.problem, basis);
  const Index nb = sys.op.cols();
  const double w_bc = cost.boundary_weight.value_or(n_c > 0 ? cost.alpha_phys / static_cast<double>(n_c) : 0.0);
  require(w_bc >= 0.0, "penalized fit: boundary weight must be >= 0");

  const Index n_p = has_data ? data->rows() : 0;
  // Without physics weight the objective is ridge regression with alpha scaled by n_p.
  if (has_data && cost.alpha_phys == 0.0 && w_bc == 0.0)
    return ridge_fit(*data, basis, alpha_reg * static_cast<double>(n_p));

  const Index n_bc = sys.bc.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_p + nb + n_c + n_bc, nb);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(a.rows());
  Index row = 0;
  if (has_data) {
    const double s = 1.0 / std::sqrt(static_cast<double>(n_p));
    a.topRows(n_p) = s * feature_matrix(basis, data->inputs());
    rhs.head(n_p) = s * data->targets().col(0);
    row = n_p;
  }
  a.middleRows(row, nb) = std::sqrt(alpha_reg) * Eigen::MatrixXd::Identity(nb, nb);
  row += nb;
  if (n_c > 0) {
    const double s = std::sqrt(cost.alpha_phys / static_cast<double>(n_c));
    a.middleRows(row, n_c) = s * sys.op;
    rhs.segment(row, n_c) = s * sys.rhs;
    row += n_c;
  }
  a.middleRows(row, n_bc) = std::sqrt(w_bc) * sys.bc;
  rhs.segment(row, n_bc) = std::sqrt(w_bc) * sys.bc_values;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < nb)
    throw NumericalError("penalized fit: stacked system is rank deficient (rank " +
                         std::to_string(qr.rank()) + " of " + std::to_string(nb) +
                         "); add regularization");
  LinearModel m{basis, qr.solve(rhs), {}};
  return m;
}

namespace {

struct KktFactorResult {
  Eigen::VectorXd solution;
  double rcond = 0.0;
  bool ok = false;
};

KktFactorResult solve_symmetric_indefinite(Eigen::MatrixXd k, const Eigen::VectorXd& rhs) {
  const lapack_int n = static_cast<lapack_int>(k.rows());
  const double anorm = k.cwiseAbs().colwise().sum().maxCoeff();
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
  KktFactorResult r;
  lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, k.data(), n, ipiv.data());
  if (info != 0) return r;
  info = LAPACKE_dsycon(LAPACK_COL_MAJOR, 'L', n, k.data(), n, ipiv.data(), anorm, &r.rcond);
  if (info != 0 || !(r.rcond > std::numeric_limits<double>::epsilon())) return r;
  r.solution = rhs;
  info = LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, 1, k.data(), n, ipiv.data(), r.solution.data(), n);
  r.ok = info == 0 && r.solution.allFinite();
  return r;
}

} // namespace

ConstrainedSolution constrained_solve(const CollocationProblem& problem, const BasisSpec& basis,
                                      double alpha_reg, const std::optional<Dataset>& data) {
  require(alpha_reg > 0.0, "constrained solve: alpha_reg must be > 0");
  const auto sys = assemble_collocation(problem, basis);
  const Index nb = sys.op.cols(), n_bc = sys.bc.rows(), n_c = sys.op.rows();
  require(n_bc <= nb, "constrained solve: " + std::to_string(n_bc) +
                          " boundary conditions exceed the " + std::to_string(nb) + " basis functions");

  // Objective 0.5 w^T H w - f^T w (up to a constant) of the quadratic cost.
  Eigen::MatrixXd h = 2.0 * alpha_reg * Eigen::MatrixXd::Identity(nb, nb);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(nb);
  if (n_c > 0) {
    const double s = 2.0 / static_cast<double>(n_c);
    h += s * sys.op.transpose() * sys.op;
    f += s * sys.op.transpose() * sys.rhs;
  }
  if (data && !data->empty()) {
    require(data->output_dim() == 1, "constrained solve: expects a single target column");
    const Eigen::MatrixXd phi = feature_matrix(basis, data->inputs());
    const double s = 2.0 / static_cast<double>(data->rows());
    h += s * phi.transpose() * phi;
    f += s * phi.transpose() * data->targets().col(0);
  }

  auto assemble = [&](const Eigen::MatrixXd& hess) {
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nb + n_bc, nb + n_bc);
    kkt.topLeftCorner(nb, nb) = hess;
    kkt.topRightCorner(nb, n_bc) = sys.bc.transpose();
    kkt.bottomLeftCorner(n_bc, nb) = sys.bc;
    return kkt;
  };
  Eigen::VectorXd rhs(nb + n_bc);
  rhs << f, sys.bc_values;

  ConstrainedSolution sol;
  auto attempt = solve_symmetric_indefinite(assemble(h), rhs);
  if (!attempt.ok) {
    sol.jitter = kKktJitter * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    Eigen::MatrixXd hj = h;
    hj.diagonal().array() += sol.jitter;
    attempt = solve_symmetric_indefinite(assemble(hj), rhs);
    if (!attempt.ok) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(assemble(h));
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_bc(sys.bc);
      if (qr_bc.rank() < n_bc)
        throw NumericalError("constrained solve: boundary conditions are dependent or infeasible "
                             "(constraint rank " + std::to_string(qr_bc.rank()) + " of " +
                             std::to_string(n_bc) + ")");
      throw NumericalError("constrained solve: KKT system is singular (rank " +
                           std::to_string(qr.rank()) + " of " + std::to_string(nb + n_bc) + ")");
    }
    h = hj;
  }
  sol.rcond = attempt.rcond;
  sol.weights = attempt.solution.head(nb);
  sol.multipliers = attempt.solution.tail(n_bc);
  sol.constraint_residual = (sys.bc * sol.weights - sys.bc_values).cwiseAbs().maxCoeff() /
                            std::max(1.0, sys.bc_values.cwiseAbs().maxCoeff());
  // The stationarity condition H w + A^T lambda = f (lambda enters with a plus sign).
  sol.stationarity_residual = (h * sol.weights + sys.bc.transpose() * sol.multipliers - f).norm() /
                              std::max(1.0, f.norm());
  return sol;
}

NetDerivatives fd_derivatives(const Mlp& net, const Eigen::VectorXd& x, double h) {
  require(net.input_dim() == 1 && net.output_dim() == 1, "fd derivatives: need a scalar network");
  require(h > 0.0, "fd derivatives: step must be > 0");
  const Index n = x.size();
  Eigen::MatrixXd stacked(3 * n, 1);
  stacked.col(0) << x.array() - h, x, x.array() + h;
  const Eigen::VectorXd u = evaluate(net, stacked).col(0);
  const auto minus = u.head(n), mid = u.segment(n, n), plus = u.tail(n);
  return {mid, (plus - minus) / (2.0 * h), (plus - 2.0 * mid + minus) / (h * h)};
}

namespace {

struct PhysicsRows {
  Eigen::VectorXd points;      // collocation points then boundary locations
  Index interior = 0;
};

PhysicsRows physics_rows(const CollocationProblem& problem, const Eigen::VectorXd& collocation) {
  PhysicsRows r;
  r.interior = collocation.size();
  r.points.resize(r.interior + static_cast<Index>(problem.boundary.size()));
  r.points.head(r.interior) = collocation;
  for (std::size_t i = 0; i < problem.boundary.size(); ++i)
    r.points(r.interior + static_cast<Index>(i)) = problem.boundary[i].location;
  return r;
}

// Residuals of interior rows followed by boundary rows.
Eigen::VectorXd physics_residual(const CollocationProblem& problem, const PhysicsRows& rows,
                                 const NetDerivatives& nd) {
  const Index m = rows.interior;
  Eigen::VectorXd r(rows.points.size());
  for (Index i = 0; i < m; ++i) {
    const double x = rows.points(i);
    r(i) = problem.a(x) * nd.d2u(i) + problem.b(x) * nd.du(i) + problem.c(x) * nd.u(i) - problem.g(x);
  }
  for (std::size_t j = 0; j < problem.boundary.size(); ++j) {
    const Index i = m + static_cast<Index>(j);
    const auto& bc = problem.boundary[j];
    r(i) = (bc.kind == BoundaryKind::Dirichlet ? nd.u(i) : nd.du(i)) - bc.value;
  }
  return r;
}

} // namespace

double pinn_cost(const Mlp& net, const CollocationProblem& problem,
                 const std::optional<Dataset>& data, double alpha_phys, double fd_step,
                 const Eigen::VectorXd& collocation) {
  double cost = 0.0;
  if (data && !data->empty()) cost += mse(data->targets(), evaluate(net, data->inputs()));
  if (alpha_phys > 0.0) {
    const auto rows = physics_rows(problem, collocation);
    const auto r = physics_residual(problem, rows, fd_derivatives(net, rows.points, fd_step));
    cost += alpha_phys * r.squaredNorm() / static_cast<double>(r.size());
  }
  return cost;
}

Eigen::VectorXd pinn_gradient(const Mlp& net, const CollocationProblem& problem,
                              const std::optional<Dataset>& data, double alpha_phys,
                              double fd_step, const Eigen::VectorXd& collocation) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(param_count(net));
  if (data && !data->empty()) {
    LossSpec plain;
    grad += backprop(net, data->inputs(), data->targets(), plain);
  }
  if (alpha_phys <= 0.0) return grad;

  const auto rows = physics_rows(problem, collocation);
  const Index n = rows.points.size(), m = rows.interior;
  const double h = fd_step;
  Eigen::MatrixXd stacked(3 * n, 1);
  stacked.col(0) << rows.points.array() - h, rows.points, rows.points.array() + h;
  const auto fwd = forward(net, stacked);
  const Eigen::VectorXd u = fwd.y.col(0);
  const NetDerivatives nd{u.segment(n, n), (u.tail(n) - u.head(n)) / (2.0 * h),
                          (u.tail(n) - 2.0 * u.segment(n, n) + u.head(n)) / (h * h)};
  const Eigen::VectorXd r = physics_residual(problem, rows, nd);
  const Eigen::VectorXd dr = 2.0 * alpha_phys / static_cast<double>(n) * r;

  // Chain through the stencil: each residual is linear in u(x-h), u(x), u(x+h).
  Eigen::MatrixXd du_out = Eigen::MatrixXd::Zero(3 * n, 1);
  for (Index i = 0; i < n; ++i) {
    double c_minus = 0.0, c_mid = 0.0, c_plus = 0.0;
    if (i < m) {
      const double x = rows.points(i);
      const double a = problem.a(x), b = problem.b(x), c = problem.c(x);
      c_minus = a / (h * h) - b / (2.0 * h);
      c_mid = -2.0 * a / (h * h) + c;
      c_plus = a / (h * h) + b / (2.0 * h);
    } else if (problem.boundary[static_cast<std::size_t>(i - m)].kind == BoundaryKind::Dirichlet) {
      c_mid = 1.0;
    } else {
      c_minus = -1.0 / (2.0 * h);
      c_plus = 1.0 / (2.0 * h);
    }
    du_out(i, 0) = dr(i) * c_minus;
    du_out(n + i, 0) = dr(i) * c_mid;
    du_out(2 * n + i, 0) = dr(i) * c_plus;
  }
  grad += backprop_from_output(net, fwd.cache, du_out);
  return grad;
}

PinnResult pinn_train(const Mlp& net, const CollocationProblem& problem,
                      const std::optional<Dataset>& data, double alpha_phys, OptimizerState& opt,
                      const BatchSchedule& sched, double fd_step) {
  problem.validate();
  require(net.input_dim() == 1 && net.output_dim() == 1, "pinn: network must map R -> R");
  require(alpha_phys >= 0.0, "pinn: alpha_phys must be >= 0");
  require(fd_step > 0.0, "pinn: finite-difference step must be > 0");
  const bool physics = alpha_phys > 0.0;
  require(!physics || problem.collocation.size() > 0, "pinn: no collocation points");
  require(physics || (data && !data->empty()), "pinn: needs data when alpha_phys is 0");

  // The batching pool: collocation points (physics) or data rows.
  const Dataset pool = physics ? Dataset(Eigen::MatrixXd(problem.collocation),
                                         Eigen::MatrixXd(problem.collocation.size(), 0))
                               : *data;
  const ObjectiveFn objective = [&](const Eigen::VectorXd& w, const Dataset& rows) {
    const Mlp current = unflatten_params(net, w);
    if (physics) return pinn_cost(current, problem, data, alpha_phys, fd_step, rows.inputs().col(0));
    return pinn_cost(current, problem, rows, 0.0, fd_step, Eigen::VectorXd());
  };
  const GradientFn gradient = [&](const Eigen::VectorXd& w, const Dataset& rows) {
    const Mlp current = unflatten_params(net, w);
    if (physics) return pinn_gradient(current, problem, data, alpha_phys, fd_step, rows.inputs().col(0));
    return pinn_gradient(current, problem, rows, 0.0, fd_step, Eigen::VectorXd());
  };
  auto result = minibatch_train(flatten_params(net), pool, opt, sched, objective, gradient);
  return {unflatten_params(net, result.params), std::move(result)};
}

} // namespace regkit
