#pragma once

#include "regkit/dataset.hpp"
#include "regkit/linear_models.hpp"
#include "regkit/neural_net.hpp"
#include "regkit/optimizers.hpp"

#include <Eigen/Dense>

#include <optional>
#include <variant>
#include <vector>

namespace regkit {

struct ConstTerm {
  double value = 0.0;
};
/// Coefficients highest power first.
struct PolyTerm {
  std::vector<double> coeffs;
};
/// amplitude * sin(frequency * x + phase)
struct SinTerm {
  double amplitude = 1.0;
  double frequency = 1.0;
  double phase = 0.0;
};

using FunctionTerm = std::variant<ConstTerm, PolyTerm, SinTerm>;

/// Sum of built-in terms; the empty sum is the zero function.
struct ScalarFunction {
  std::vector<FunctionTerm> terms;

  double operator()(double x) const;
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;

  static ScalarFunction constant(double v) { return {{ConstTerm{v}}}; }
  static ScalarFunction sine(double amplitude, double frequency, double phase = 0.0) {
    return {{SinTerm{amplitude, frequency, phase}}};
  }
  static ScalarFunction polynomial(std::vector<double> coeffs) { return {{PolyTerm{std::move(coeffs)}}}; }
};

enum class BoundaryKind { Dirichlet, Neumann };

struct BoundaryCondition {
  double location = 0.0;
  BoundaryKind kind = BoundaryKind::Dirichlet;
  double value = 0.0;
};

/// a(x) u'' + b(x) u' + c(x) u = g(x) on [x_lo, x_hi].
struct CollocationProblem {
  ScalarFunction a = ScalarFunction::constant(1.0);
  ScalarFunction b;
  ScalarFunction c;
  ScalarFunction g;
  double x_lo = 0.0;
  double x_hi = 1.0;
  std::vector<BoundaryCondition> boundary;
  Eigen::VectorXd collocation; // interior points
  std::optional<ScalarFunction> exact; // for diagnostics only

  void validate() const;
};

/// n points strictly inside (lo, hi), equally spaced.
Eigen::VectorXd equispaced_interior(double lo, double hi, Index n);

struct DerivativeMatrices {
  Eigen::MatrixXd value;  // Phi
  Eigen::MatrixXd first;  // Phi'
  Eigen::MatrixXd second; // Phi''
};

/// Analytic x-derivatives of 1-D Gaussian RBF columns:
/// phi' = -2c^2 (x - x_c) phi,  phi'' = (4c^4 (x - x_c)^2 - 2c^2) phi.
DerivativeMatrices rbf_derivative_matrices(const GaussianRbfBasis& basis, const Eigen::VectorXd& x);
/// Same for any 1-D basis (RBF or polynomial).
DerivativeMatrices basis_derivative_matrices(const BasisSpec& basis, const Eigen::VectorXd& x);

/// Linear pieces of the collocation problem for a linear-in-w expansion:
/// interior residual r = op w - rhs, boundary residual bc w - bc_values.
struct CollocationSystem {
  Eigen::MatrixXd op;
  Eigen::VectorXd rhs;
  Eigen::MatrixXd bc;
  Eigen::VectorXd bc_values;
};

CollocationSystem assemble_collocation(const CollocationProblem& problem, const BasisSpec& basis);

Eigen::VectorXd pde_residual(const CollocationProblem& problem, const BasisSpec& basis,
                             const Eigen::VectorXd& w);
Eigen::VectorXd boundary_residual(const CollocationProblem& problem, const BasisSpec& basis,
                                  const Eigen::VectorXd& w);

/// Soft-constraint weights. The interior term is alpha_phys / n_c |r|^2; the
/// boundary rows carry boundary_weight |r_bc|^2, which defaults to
/// alpha_phys / n_c (boundary rows treated like any other residual row).
struct PhysicsCost {
  double alpha_phys = 0.0;
  std::optional<double> boundary_weight;
  CollocationProblem problem;
};

/// Minimizes (1/n_p)|Phi w - y|^2 + alpha_reg |w|^2 + physics penalty by QR
/// of the stacked, row-scaled least-squares system. Single output.
LinearModel penalized_fit(const std::optional<Dataset>& data, const PhysicsCost& cost,
                          const BasisSpec& basis, double alpha_reg);

struct ConstrainedSolution {
  Eigen::VectorXd weights;
  Eigen::VectorXd multipliers;       // one per boundary condition
  double constraint_residual = 0.0;  // max |bc w - bc_values| / max(1, |bc_values|)
  double stationarity_residual = 0.0; // |H w + A^T lambda - f| / max(1, |f|)
  double rcond = 0.0;                // reciprocal condition estimate of the KKT matrix
  double jitter = 0.0;               // added to H's diagonal if the first factorization failed
};

/// Relative jitter added to H when the KKT matrix is numerically singular.
inline constexpr double kKktJitter = 1e-12;

/// Minimizes (data MSE if any) + alpha_reg |w|^2 + (1/n_c)|interior r|^2
/// subject to exact boundary conditions, via the symmetric indefinite system
/// [[H, A^T], [A, 0]] [w; lambda] = [f; b] (Bunch-Kaufman).
ConstrainedSolution constrained_solve(const CollocationProblem& problem, const BasisSpec& basis,
                                      double alpha_reg, const std::optional<Dataset>& data);

/// Network value and central-difference input derivatives at x.
struct NetDerivatives {
  Eigen::VectorXd u, du, d2u;
};
NetDerivatives fd_derivatives(const Mlp& net, const Eigen::VectorXd& x, double h);

/// MSE_data + alpha_phys / (m + n_bc) * (|r_int|^2 + |r_bc|^2) over the m
/// given collocation points.
double pinn_cost(const Mlp& net, const CollocationProblem& problem,
                 const std::optional<Dataset>& data, double alpha_phys, double fd_step,
                 const Eigen::VectorXd& collocation);
Eigen::VectorXd pinn_gradient(const Mlp& net, const CollocationProblem& problem,
                              const std::optional<Dataset>& data, double alpha_phys,
                              double fd_step, const Eigen::VectorXd& collocation);

struct PinnResult {
  Mlp net;
  TrainResult train; // loss_history holds the full cost per epoch
};

/// Mini-batches run over the collocation points when alpha_phys > 0 (data and
/// boundary rows enter every step), otherwise over the data rows.
PinnResult pinn_train(const Mlp& net, const CollocationProblem& problem,
                      const std::optional<Dataset>& data, double alpha_phys, OptimizerState& opt,
                      const BatchSchedule& sched, double fd_step = 1e-3);

} // namespace regkit
