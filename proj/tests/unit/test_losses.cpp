#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "regkit/errors.hpp"
#include "regkit/losses.hpp"
#include "support.hpp"

#include <cmath>
#include <limits>

using namespace regkit;
using doctest::Approx;

namespace {
Eigen::MatrixXd col(std::initializer_list<double> v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}
} // namespace

TEST_CASE("mse hand values") {
  CHECK(mse(col({1, 2}), col({1, 2})) == 0.0);
  CHECK(mse(col({0, 0}), col({1, 1})) == 1.0);
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 1, 0, 3, 0;
  CHECK(mse(a, b) == Approx((4.0 + 16.0) / 2.0)); // row norms summed, divided by n_p
  CHECK_THROWS_AS(mse(col({1}), col({1, 2})), ValidationError);
}

TEST_CASE("weighted mse") {
  const Eigen::MatrixXd yt = testing::random_matrix(6, 1, 1), yp = testing::random_matrix(6, 1, 2);
  CHECK(std::abs(weighted_mse(yt, yp, Eigen::MatrixXd::Identity(6, 6)) - mse(yt, yp)) <=
        4 * std::numeric_limits<double>::epsilon() * mse(yt, yp));

  // Sigma = 4I, |e|^2 = 8, n_p = 2 -> 8 / 4 / 2 = 1
  CHECK(weighted_mse(col({2, 2}), col({0, 0}), 4.0 * Eigen::MatrixXd::Identity(2, 2)) == Approx(1.0));
  CHECK(weighted_mse(col({3, 1}), col({3, 1}), 4.0 * Eigen::MatrixXd::Identity(2, 2)) == 0.0);

  // Against an explicit quadratic form computed with a dense inverse.
  Eigen::MatrixXd a = testing::random_matrix(6, 6, 3);
  const Eigen::MatrixXd sigma = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(6, 6);
  const Eigen::VectorXd e = yt - yp;
  const double oracle = e.dot(sigma.inverse() * e) / 6.0;
  CHECK(weighted_mse(yt, yp, sigma) == Approx(oracle).epsilon(1e-10));

  Eigen::MatrixXd indefinite = Eigen::MatrixXd::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  CHECK_THROWS(weighted_mse(col({1, 1}), col({0, 0}), indefinite));
  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(weighted_mse(col({1, 1}), col({0, 0}), asym), ValidationError);
}

TEST_CASE("huber branches") {
  CHECK(huber_value(0.0, 1.0) == 0.0);
  CHECK(huber_value(2.0, 1.0) == 1.5);
  for (double delta : {0.1, 1.0, 3.7}) {
    // Both branch formulas evaluated at |e| = delta, exactly equal.
    const double quad = 0.5 * delta * delta, lin = delta * (delta - 0.5 * delta);
    CHECK(quad == lin);
    CHECK(huber_value(delta, delta) == quad);
    CHECK(huber_value(-delta, delta) == quad);
    CHECK(huber_derivative(2.0 * delta, delta) == delta);
    CHECK(huber_derivative(-2.0 * delta, delta) == -delta);
  }
  CHECK(huber(col({0, 2}), 1.0) == Approx(0.75));
  CHECK_THROWS_AS(huber(col({1}), 0.0), ValidationError);

  // huber <= min(e^2/2, delta |e|)
  for (double e = -5.0; e <= 5.0; e += 0.173)
    CHECK(huber_value(e, 1.3) <= std::min(0.5 * e * e, 1.3 * std::abs(e)) + 1e-15);
}

TEST_CASE("epsilon-insensitive loss") {
  CHECK(eps_insensitive(col({0.5}), 1.0) == 0.0);
  CHECK(eps_insensitive(col({2.0}), 1.0) == 1.0);
  CHECK(eps_insensitive(col({-1.0, 0.3, 2.5}), 0.0) == Approx((1.0 + 0.3 + 2.5) / 3.0));
  CHECK(eps_insensitive(col({-1.0, 1.0, 0.2}), 1.0) == 0.0); // boundary counts as inside
  CHECK(eps_insensitive(col({-1.0, 1.01}), 1.0) > 0.0);
  CHECK(eps_subgradient(1.0, 1.0) == 0.0);
  CHECK(eps_subgradient(1.5, 1.0) == 1.0);
  CHECK(eps_subgradient(-1.5, 1.0) == -1.0);
  CHECK_THROWS_AS(eps_insensitive(col({1}), -0.1), ValidationError);
}

TEST_CASE("penalties") {
  Eigen::VectorXd w(2);
  w << 1, -2;
  CHECK(penalized(1.0, w, 0.5, PenaltyNorm::L1) == 2.5);
  CHECK(penalized(1.0, w, 0.5, PenaltyNorm::L2) == 3.5);
  CHECK(penalized(1.0, Eigen::VectorXd::Zero(2), 3.0, PenaltyNorm::L2) == 1.0);
  CHECK(penalized(1.0, w, 0.0, PenaltyNorm::L1) == 1.0);
  CHECK_THROWS_AS(penalized(1.0, w, -1.0, PenaltyNorm::L1), ValidationError);

  LossSpec lasso = parse_loss("lasso:0.3");
  Eigen::VectorXd w3(3);
  w3 << 2, 0, -1;
  const Eigen::VectorXd g = penalty_gradient(lasso, w3);
  CHECK(g(0) == Approx(0.3));
  CHECK(g(1) == 0.0);
  CHECK(g(2) == Approx(-0.3));
}

TEST_CASE("loss gradients against central differences") {
  const Eigen::MatrixXd yt = testing::random_matrix(7, 2, 11, -2, 2);
  const Eigen::MatrixXd yp0 = testing::random_matrix(7, 2, 12, -2, 2);
  Eigen::MatrixXd a = testing::random_matrix(7, 7, 13);
  const Eigen::MatrixXd sigma = a * a.transpose() + Eigen::MatrixXd::Identity(7, 7);

  std::vector<LossSpec> specs{parse_loss("mse"), parse_loss("huber:0.7"), parse_loss("ridge:0.1")};
  LossSpec w;
  w.data = WeightedMseLoss{sigma};
  specs.push_back(w);

  for (const auto& spec : specs) {
    CAPTURE(loss_name(spec));
    const Eigen::MatrixXd g = loss_gradient(spec, yt, yp0);
    const Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(yp0.data(), yp0.size());
    auto f = [&](const Eigen::VectorXd& v) {
      return data_loss(spec.data, yt, Eigen::Map<const Eigen::MatrixXd>(v.data(), 7, 2));
    };
    const Eigen::VectorXd num = testing::numeric_gradient(f, flat);
    CHECK(testing::max_relative_error(Eigen::Map<const Eigen::VectorXd>(g.data(), g.size()), num) < 1e-6);
  }

  // Zero at the minimum.
  CHECK(loss_gradient(parse_loss("mse"), yt, yt).norm() == 0.0);
  // MSE gradient is (2/n_p)(y_pred - y_true).
  CHECK((loss_gradient(parse_loss("mse"), yt, yp0) - (2.0 / 7.0) * (yp0 - yt)).norm() < 1e-15);
}

TEST_CASE("penalty gradient matches differences of the penalty") {
  const LossSpec ridge = parse_loss("ridge:0.4");
  const Eigen::VectorXd w = testing::random_matrix(5, 1, 21);
  auto f = [&](const Eigen::VectorXd& v) { return penalized(0.0, v, 0.4, PenaltyNorm::L2); };
  CHECK(testing::max_relative_error(penalty_gradient(ridge, w), testing::numeric_gradient(f, w)) < 1e-6);
}

TEST_CASE("parse_loss names and validation") {
  for (const char* name : {"mse", "wmse", "huber:1.5", "eps:0.2", "ridge:0.01", "lasso:2"}) {
    CAPTURE(name);
    const LossSpec s = parse_loss(name);
    CHECK(parse_loss(loss_name(s)).differentiable() == s.differentiable());
  }
  CHECK(parse_loss("mse").differentiable());
  CHECK(parse_loss("huber:1").differentiable());
  CHECK(parse_loss("ridge:1").differentiable());
  CHECK_FALSE(parse_loss("eps:0.1").differentiable());
  CHECK_FALSE(parse_loss("lasso:0.1").differentiable());
  CHECK_THROWS_AS(parse_loss("huber:0"), ValidationError);
  CHECK_THROWS_AS(parse_loss("huber:x"), ValidationError);
  CHECK_THROWS_AS(parse_loss("eps:-1"), ValidationError);
  CHECK_THROWS_AS(parse_loss("cauchy"), ValidationError);
}

TEST_CASE("evaluate combines the data term and the penalty") {
  const Eigen::MatrixXd yt = col({1, 2}), yp = col({0, 0});
  Eigen::VectorXd w(2);
  w << 1, 1;
  CHECK(evaluate(parse_loss("ridge:0.5"), yt, yp, w) == Approx(2.5 + 1.0));
  CHECK(evaluate(parse_loss("lasso:0.5"), yt, yp, w) == Approx(2.5 + 1.0));
  CHECK(evaluate(parse_loss("mse"), yt, yp) == Approx(2.5));
}

TEST_CASE("all loss values are nonnegative") {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd a = testing::random_matrix(9, 1, seed), b = testing::random_matrix(9, 1, seed + 50);
    CHECK(mse(a, b) >= 0.0);
    CHECK(huber(a - b, 0.3) >= 0.0);
    CHECK(eps_insensitive(a - b, 0.3) >= 0.0);
  }
}
