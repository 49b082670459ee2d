#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "regkit/errors.hpp"
#include "regkit/physics.hpp"
#include "regkit/training.hpp"
#include "support.hpp"

#include <cmath>

using namespace regkit;
using doctest::Approx;

namespace {

const double kPi = std::acos(-1.0);

CollocationProblem poisson(Index n_c) {
  CollocationProblem p;
  p.g = ScalarFunction::sine(-kPi * kPi, kPi);
  p.boundary = {{0.0, BoundaryKind::Dirichlet, 0.0}, {1.0, BoundaryKind::Dirichlet, 0.0}};
  p.collocation = equispaced_interior(0.0, 1.0, n_c);
  p.exact = ScalarFunction::sine(1.0, kPi);
  return p;
}

double linf_error(const GaussianRbfBasis& b, const Eigen::VectorXd& w) {
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(200, 0.0, 1.0);
  const Eigen::VectorXd u = feature_matrix(b, x) * w;
  return (u - (kPi * x.array()).sin().matrix()).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("scalar functions") {
  ScalarFunction f{{ConstTerm{1.0}, PolyTerm{{2.0, 0.0, -1.0}}, SinTerm{3.0, 2.0, 0.5}}};
  const double x = 0.7;
  CHECK(f(x) == Approx(1.0 + 2 * x * x - 1.0 + 3.0 * std::sin(2.0 * x + 0.5)));
  CHECK(ScalarFunction{}(x) == 0.0);
  Eigen::VectorXd xs(2);
  xs << 0.1, 0.2;
  CHECK(f(xs)(1) == Approx(f(0.2)));
}

TEST_CASE("equispaced interior points") {
  const Eigen::VectorXd x = equispaced_interior(0.0, 1.0, 3);
  CHECK(x(0) == Approx(0.25));
  CHECK(x(1) == Approx(0.5));
  CHECK(x(2) == Approx(0.75));
}

TEST_CASE("rbf derivative matrices") {
  const auto b = equispaced_rbf_basis(0.0, 1.0, 6, 4.0);
  const Eigen::VectorXd at = b.centers.col(0);
  const auto dc = rbf_derivative_matrices(b, at);
  for (Index k = 0; k < 6; ++k) {
    CHECK(dc.first(k, k) == 0.0);
    CHECK(dc.second(k, k) == Approx(-2.0 * 16.0));
  }

  const Eigen::VectorXd x = testing::random_matrix(7, 1, 1, 0.0, 1.0);
  const auto d = rbf_derivative_matrices(b, x);
  const double h = 1e-5;
  const Eigen::MatrixXd p = feature_matrix(b, (x.array() + h).matrix());
  const Eigen::MatrixXd m = feature_matrix(b, (x.array() - h).matrix());
  const Eigen::MatrixXd fd1 = (p - m) / (2 * h);
  const Eigen::MatrixXd fd2 = (p - 2 * d.value + m) / (h * h);
  for (Index i = 0; i < fd1.rows(); ++i)
    for (Index k = 0; k < fd1.cols(); ++k) {
      if (std::abs(d.first(i, k)) > 1e-4)
        CHECK(std::abs(fd1(i, k) - d.first(i, k)) / std::abs(d.first(i, k)) < 1e-6);
      CHECK(std::abs(fd2(i, k) - d.second(i, k)) < 1e-3 * std::max(1.0, std::abs(d.second(i, k))));
    }

  GaussianRbfBasis two_d{Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Ones(2)};
  CHECK_THROWS_AS(rbf_derivative_matrices(two_d, x), ValidationError);
}

TEST_CASE("pde residual") {
  // u'' = 2 with u = x^2, exactly representable in the quadratic basis.
  CollocationProblem p;
  p.g = ScalarFunction::constant(2.0);
  p.boundary = {{0.0, BoundaryKind::Dirichlet, 0.0}};
  p.collocation = equispaced_interior(0.0, 1.0, 9);
  CHECK(pde_residual(p, PolynomialBasis{2}, Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);
  CHECK(boundary_residual(p, PolynomialBasis{2}, Eigen::Vector3d(1, 0, 0)).norm() == 0.0);

  // Zero source, zero weights.
  p.g = {};
  const auto rbf = equispaced_rbf_basis(0.0, 1.0, 5, 3.0);
  CHECK(pde_residual(p, rbf, Eigen::VectorXd::Zero(5)).norm() == 0.0);

  // u'' = 0 with the {x, 1} basis: every affine function solves it.
  for (unsigned s = 0; s < 4; ++s)
    CHECK(pde_residual(p, PolynomialBasis{1}, testing::random_matrix(2, 1, s)).norm() == 0.0);

  // Variable coefficients: x u'' + u' - u = g for u = x^2 -> g = 2x + 2x - x^2.
  CollocationProblem q;
  q.a = ScalarFunction::polynomial({1.0, 0.0});
  q.b = ScalarFunction::constant(1.0);
  q.c = ScalarFunction::constant(-1.0);
  q.g = ScalarFunction::polynomial({-1.0, 4.0, 0.0});
  q.boundary = {{0.0, BoundaryKind::Neumann, 0.0}};
  q.collocation = equispaced_interior(0.0, 2.0, 11);
  q.x_hi = 2.0;
  CHECK(pde_residual(q, PolynomialBasis{2}, Eigen::Vector3d(1, 0, 0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(boundary_residual(q, PolynomialBasis{2}, Eigen::Vector3d(1, 0, 0)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(pde_residual(q, PolynomialBasis{2}, Eigen::VectorXd::Zero(2)), ValidationError);
}

TEST_CASE("problem validation") {
  CollocationProblem p = poisson(10);
  p.boundary.clear();
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = poisson(10);
  p.collocation(0) = 1.5;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = poisson(10);
  p.x_hi = 0.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("constrained Poisson solve") {
  const auto b = equispaced_rbf_basis(0.0, 1.0, 40, 8.0);
  const auto p = poisson(80);
  const auto s = constrained_solve(p, b, 1e-8, std::nullopt);
  CHECK(linf_error(b, s.weights) < 1e-3);
  Eigen::VectorXd ends(2);
  ends << 0.0, 1.0;
  CHECK((feature_matrix(b, ends) * s.weights).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(s.constraint_residual < 1e-8);
  CHECK(s.stationarity_residual < 1e-8);
  CHECK(s.multipliers.size() == 2);
}

TEST_CASE("constrained solve with a Neumann condition") {
  auto p = poisson(80);
  p.boundary[1] = {1.0, BoundaryKind::Neumann, -kPi}; // u'(1) = pi cos(pi)
  const auto b = equispaced_rbf_basis(0.0, 1.0, 40, 8.0);
  const auto s = constrained_solve(p, b, 1e-8, std::nullopt);
  // Derivative data at the edge converges more slowly than values: about 5e-3 here.
  CHECK(linf_error(b, s.weights) < 1e-2);
  CHECK(s.constraint_residual < 1e-8);
  Eigen::VectorXd right(1);
  right << 1.0;
  const auto d = rbf_derivative_matrices(b, right);
  CHECK(std::abs((d.first * s.weights)(0) + kPi) < 1e-8);
}

TEST_CASE("constrained solve: trivial problem and error paths") {
  CollocationProblem p = poisson(20);
  p.g = {};
  const auto b = equispaced_rbf_basis(0.0, 1.0, 10, 5.0);
  const auto s = constrained_solve(p, b, 1e-3, std::nullopt);
  CHECK(s.weights.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(s.multipliers.cwiseAbs().maxCoeff() < 1e-14);

  CHECK_THROWS_AS(constrained_solve(p, b, 0.0, std::nullopt), ValidationError);

  CollocationProblem contradictory = poisson(20);
  contradictory.boundary.push_back({0.0, BoundaryKind::Dirichlet, 1.0});
  CHECK_THROWS_AS(constrained_solve(contradictory, b, 1e-3, std::nullopt), NumericalError);

  CollocationProblem crowded = poisson(20);
  for (int i = 0; i < 3; ++i) crowded.boundary.push_back({0.1 * (i + 1), BoundaryKind::Dirichlet, 0.0});
  CHECK_THROWS_AS(constrained_solve(crowded, PolynomialBasis{3}, 1e-3, std::nullopt), ValidationError);
}

TEST_CASE("penalized fit") {
  const Dataset data = [] {
    const Eigen::MatrixXd x = testing::random_matrix(25, 1, 3, 0.0, 1.0);
    const Eigen::MatrixXd y = (kPi * x.array()).sin() + 0.3 * (9.0 * x.array()).cos();
    return Dataset(x, y);
  }();
  const auto b = equispaced_rbf_basis(0.0, 1.0, 10, 4.0);
  const double alpha_reg = 1e-4;

  SUBCASE("zero physics weight is ridge regression") {
    const auto m = penalized_fit(data, PhysicsCost{0.0, 0.0, poisson(20)}, b, alpha_reg);
    const auto ridge = ridge_fit(data, b, alpha_reg * 25.0);
    CHECK((m.weights - ridge.weights).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, ridge.weights.norm()));
  }
  SUBCASE("physics residual shrinks along the weight sweep") {
    double prev = std::numeric_limits<double>::infinity();
    for (double a : {0.0, 0.1, 1.0, 10.0, 100.0}) {
      const auto m = penalized_fit(data, PhysicsCost{a, std::nullopt, poisson(20)}, b, alpha_reg);
      const auto p = poisson(20);
      const Eigen::VectorXd w = m.weights.col(0);
      const double r = std::sqrt(pde_residual(p, b, w).squaredNorm() + boundary_residual(p, b, w).squaredNorm());
      CHECK(r <= prev * (1 + 1e-10));
      prev = r;
    }
  }
  SUBCASE("a heavy boundary penalty approaches the hard constraint") {
    const auto p = poisson(20);
    const auto hard = constrained_solve(p, b, alpha_reg, data);
    const auto soft = penalized_fit(data, PhysicsCost{1.0, 1e8, p}, b, alpha_reg);
    CHECK((soft.weights.col(0) - hard.weights).cwiseAbs().maxCoeff() < 1e-3);
  }
  SUBCASE("needs something to fit") {
    CollocationProblem empty = poisson(20);
    empty.collocation.resize(0);
    CHECK_THROWS_AS(penalized_fit(std::nullopt, PhysicsCost{1.0, std::nullopt, empty}, b, alpha_reg),
                    ValidationError);
  }
  SUBCASE("rank deficiency without regularisation") {
    Eigen::MatrixXd x(2, 1), y(2, 1);
    x << 0.2, 0.4;
    y << 1, 2;
    CollocationProblem none = poisson(1);
    CHECK_THROWS_AS(penalized_fit(Dataset(x, y), PhysicsCost{0.0, 0.0, none}, b, 0.0), NumericalError);
  }
}

TEST_CASE("finite-difference network derivatives match a hand-differentiated neuron") {
  Mlp net({1, 1, 1}, {Activation::Tanh, Activation::Identity});
  const double w = 1.3, bias = -0.2, v = 0.8, c = 0.1;
  net.weights()[0](0, 0) = w;
  net.biases()[0](0) = bias;
  net.weights()[1](0, 0) = v;
  net.biases()[1](0) = c;
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(9, -1.0, 1.0);
  const auto d = fd_derivatives(net, x, 1e-3);
  for (Index i = 0; i < x.size(); ++i) {
    const double t = std::tanh(w * x(i) + bias);
    CHECK(d.u(i) == Approx(v * t + c).epsilon(1e-14));
    CHECK(std::abs(d.du(i) - v * w * (1 - t * t)) < 1e-5);
    CHECK(std::abs(d.d2u(i) - v * w * w * (-2.0 * t * (1 - t * t))) < 1e-5);
  }
}

TEST_CASE("pinn gradient matches central differences of the cost") {
  auto p = poisson(12);
  p.boundary[1] = {1.0, BoundaryKind::Neumann, -kPi};
  const Dataset data(testing::random_matrix(5, 1, 4, 0.0, 1.0), testing::random_matrix(5, 1, 5));
  const Mlp net = Mlp::random({1, 5, 5, 1}, {Activation::Tanh, Activation::Tanh, Activation::Identity}, 6);
  for (double alpha : {0.0, 0.7}) {
    const Eigen::VectorXd g = pinn_gradient(net, p, data, alpha, 1e-2, p.collocation);
    const Eigen::VectorXd num = testing::numeric_gradient(
        [&](const Eigen::VectorXd& w) {
          return pinn_cost(unflatten_params(net, w), p, data, alpha, 1e-2, p.collocation);
        },
        flatten_params(net));
    CHECK(testing::max_relative_error(g, num, 1e-5) < 1e-6);
  }
}

TEST_CASE("pinn without physics is plain regression") {
  const Eigen::MatrixXd x = testing::random_matrix(20, 1, 7, 0.0, 1.0);
  const Dataset data(x, Eigen::MatrixXd(x.array().square()));
  const Mlp net = Mlp::random({1, 4, 1}, {Activation::Tanh, Activation::Identity}, 8);
  OptimizerState a = make_optimizer({"adam", 0.01}), b = make_optimizer({"adam", 0.01});
  const BatchSchedule sched{8, 20, 3};
  const auto pinn = pinn_train(net, poisson(10), data, 0.0, a, sched);
  const auto plain = train_mlp(net, data, parse_loss("mse"), b, sched);
  CHECK((flatten_params(pinn.net) - flatten_params(plain.net)).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(pinn.train.loss_history.size() == plain.train.loss_history.size());
  for (std::size_t e = 0; e < plain.train.loss_history.size(); ++e)
    CHECK(pinn.train.loss_history[e] == Approx(plain.train.loss_history[e]).epsilon(1e-12));
}

TEST_CASE("pinn reduces the Poisson cost tenfold") {
  const auto p = poisson(80);
  const Mlp net = Mlp::random({1, 16, 16, 1}, {Activation::Tanh, Activation::Tanh, Activation::Identity}, 0);
  OptimizerState opt = make_optimizer({});
  const auto r = pinn_train(net, p, std::nullopt, 1.0, opt, {32, 5000, 0});
  CHECK_FALSE(r.train.diverged);
  CHECK(r.train.loss_history.back() <= r.train.initial_loss / 10.0);
}
