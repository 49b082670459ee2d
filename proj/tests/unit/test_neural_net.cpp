#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "regkit/errors.hpp"
#include "regkit/neural_net.hpp"
#include "support.hpp"

#include <cmath>

using namespace regkit;
using doctest::Approx;

namespace {

double loss_at(const Mlp& shape, const Eigen::VectorXd& w, const Eigen::MatrixXd& x,
               const Eigen::MatrixXd& y, const LossSpec& loss) {
  return evaluate(loss, y, evaluate(unflatten_params(shape, w), x), w);
}

} // namespace

TEST_CASE("activations") {
  CHECK(activate(Activation::Tanh, 0.0) == 0.0);
  CHECK(activate(Activation::Relu, -1.0) == 0.0);
  CHECK(activate(Activation::Relu, 2.5) == 2.5);
  CHECK(activate(Activation::Identity, -3.0) == -3.0);
  CHECK(activation_derivative(Activation::Relu, 0.0) == 0.0);
  CHECK(activation_derivative(Activation::Relu, 1e-9) == 1.0);
  for (double z = -3.0; z <= 3.0; z += 0.25) {
    const double h = 1e-5;
    const double fd = (std::tanh(z + h) - std::tanh(z - h)) / (2 * h);
    CHECK(std::abs(activation_derivative(Activation::Tanh, z) - fd) < 1e-8);
  }
  CHECK(parse_activation("relu") == Activation::Relu);
  CHECK(activation_name(Activation::Tanh) == "tanh");
  CHECK_THROWS_AS(parse_activation("sigmoid"), ValidationError);
}

TEST_CASE("param_count") {
  CHECK(param_count(std::vector<Index>{1, 2, 3, 1}) == 17);
  CHECK(param_count(std::vector<Index>{1, 1}) == 2);
  const Mlp net = Mlp::random({2, 4, 4, 1}, {Activation::Tanh, Activation::Tanh, Activation::Identity}, 3);
  CHECK(param_count(net) == flatten_params(net).size());
  CHECK(param_count(net) == 2 * 4 + 4 + 4 * 4 + 4 + 4 + 1);
}

TEST_CASE("zero network with tanh output gives zero") {
  const Mlp net({1, 2, 3, 1}, {Activation::Tanh, Activation::Tanh, Activation::Tanh});
  CHECK(evaluate(net, testing::random_matrix(5, 1, 1)).isZero(0.0));
}

TEST_CASE("1-2-3-1 network matches the hand-unrolled composite") {
  Mlp net({1, 2, 3, 1}, {Activation::Tanh, Activation::Tanh, Activation::Identity});
  net.weights()[0] << 0.5, -1.0;
  net.biases()[0] << 0.1, 0.2;
  net.weights()[1] << 1.0, 2.0, -0.5, 0.3, 0.7, -1.1;
  net.biases()[1] << 0.0, -0.1, 0.05;
  net.weights()[2] << 0.4, -0.6, 0.9;
  net.biases()[2] << 0.25;

  const double x = 0.8;
  const double y21 = std::tanh(0.5 * x + 0.1), y22 = std::tanh(-1.0 * x + 0.2);
  const double y31 = std::tanh(1.0 * y21 + 2.0 * y22 + 0.0);
  const double y32 = std::tanh(-0.5 * y21 + 0.3 * y22 - 0.1);
  const double y33 = std::tanh(0.7 * y21 - 1.1 * y22 + 0.05);
  const double expected = 0.4 * y31 - 0.6 * y32 + 0.9 * y33 + 0.25;
  CHECK(evaluate(net, Eigen::MatrixXd::Constant(1, 1, x))(0, 0) == Approx(expected).epsilon(1e-15));
}

TEST_CASE("identity activations collapse to one affine map") {
  Mlp net = Mlp::random({3, 5, 4, 2}, {Activation::Identity, Activation::Identity, Activation::Identity}, 7);
  for (auto& b : net.biases()) b = testing::random_matrix(b.size(), 1, 9);
  const auto& w = net.weights();
  const auto& b = net.biases();
  const Eigen::MatrixXd a = w[2] * w[1] * w[0];
  const Eigen::VectorXd c = w[2] * (w[1] * b[0] + b[1]) + b[2];
  const Eigen::MatrixXd x = testing::random_matrix(6, 3, 10);
  const Eigen::MatrixXd oracle = (a * x.transpose()).colwise() + c;
  CHECK((evaluate(net, x) - oracle.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward is row-wise independent") {
  const Mlp net = Mlp::random({2, 6, 1}, {Activation::Tanh, Activation::Identity}, 11);
  const Eigen::MatrixXd x = testing::random_matrix(5, 2, 12);
  const Eigen::MatrixXd all = evaluate(net, x);
  for (Index i = 0; i < 5; ++i) CHECK(evaluate(net, x.row(i))(0, 0) == all(i, 0));
  CHECK_THROWS_AS(evaluate(net, Eigen::MatrixXd::Zero(2, 3)), ValidationError);
}

TEST_CASE("flatten and unflatten") {
  const Mlp net = Mlp::random({2, 3, 2}, {Activation::Relu, Activation::Identity}, 13);
  const Eigen::VectorXd w = flatten_params(net);
  CHECK(flatten_params(unflatten_params(net, w)) == w);

  const Mlp zero = unflatten_params(net, Eigen::VectorXd::Zero(w.size()));
  for (const auto& m : zero.weights()) CHECK(m.isZero(0.0));
  for (const auto& v : zero.biases()) CHECK(v.isZero(0.0));

  // Layer-major; each layer holds its row-major weights followed by its biases.
  Eigen::VectorXd e = Eigen::VectorXd::Zero(w.size());
  e(1) = 1.0; // W2(0, 1)
  CHECK(unflatten_params(net, e).weights()[0](0, 1) == 1.0);
  e.setZero();
  e(6) = 1.0; // first bias of layer 2
  CHECK(unflatten_params(net, e).biases()[0](0) == 1.0);

  for (Index k = 0; k < w.size(); ++k) {
    Eigen::VectorXd p = w;
    p(k) += 1.0;
    const Eigen::VectorXd diff = flatten_params(unflatten_params(net, p)) - w;
    CHECK((diff.array() != 0.0).count() == 1);
  }
  CHECK_THROWS_AS(unflatten_params(net, Eigen::VectorXd::Zero(w.size() + 1)), ValidationError);
}

TEST_CASE("glorot initialisation is bounded, seeded and has zero biases") {
  const Mlp a = Mlp::random({4, 6, 1}, {Activation::Tanh, Activation::Identity}, 5);
  const Mlp b = Mlp::random({4, 6, 1}, {Activation::Tanh, Activation::Identity}, 5);
  CHECK(flatten_params(a) == flatten_params(b));
  CHECK(a.weights()[0].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 10.0));
  CHECK(a.weights()[1].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 7.0));
  CHECK(a.biases()[0].isZero(0.0));
  CHECK(flatten_params(Mlp::random({4, 6, 1}, {Activation::Tanh, Activation::Identity}, 6)) != flatten_params(a));
}

TEST_CASE("backprop matches central differences") {
  const std::vector<std::vector<Index>> archs{{1, 2, 3, 1}, {2, 4, 4, 1}, {1, 8, 1}};
  const std::vector<LossSpec> losses{parse_loss("mse"), parse_loss("huber:0.3"), parse_loss("ridge:0.01")};
  for (const auto& sizes : archs)
    for (const auto& loss : losses)
      for (unsigned seed = 0; seed < 3; ++seed) {
        std::vector<Activation> acts(sizes.size() - 1, Activation::Tanh);
        acts.back() = Activation::Identity;
        Mlp net = Mlp::random(sizes, acts, seed);
        for (auto& b : net.biases()) b = testing::random_matrix(b.size(), 1, seed + 30, -0.5, 0.5);
        const Eigen::MatrixXd x = testing::random_matrix(8, sizes.front(), seed + 1);
        const Eigen::MatrixXd y = testing::random_matrix(8, 1, seed + 2);
        const Eigen::VectorXd g = backprop(net, x, y, loss);
        const Eigen::VectorXd w = flatten_params(net);
        const Eigen::VectorXd num = testing::numeric_gradient(
            [&](const Eigen::VectorXd& v) { return loss_at(net, v, x, y, loss); }, w);
        CAPTURE(seed);
        CHECK(testing::max_relative_error(g, num) < 1e-6);
      }
}

TEST_CASE("backprop with relu hidden units away from kinks") {
  const Mlp net = Mlp::random({2, 5, 1}, {Activation::Relu, Activation::Identity}, 4);
  const Eigen::MatrixXd x = testing::random_matrix(6, 2, 5);
  const Eigen::MatrixXd y = testing::random_matrix(6, 1, 6);
  const auto fw = forward(net, x);
  REQUIRE(fw.cache.pre_activations[1].cwiseAbs().minCoeff() > 1e-4);
  const Eigen::VectorXd num = testing::numeric_gradient(
      [&](const Eigen::VectorXd& v) { return loss_at(net, v, x, y, parse_loss("mse")); }, flatten_params(net));
  CHECK(testing::max_relative_error(backprop(net, x, y, parse_loss("mse")), num) < 1e-6);
}

TEST_CASE("backprop: stationarity, linearity, loss restrictions") {
  const Mlp net = Mlp::random({1, 3, 1}, {Activation::Tanh, Activation::Identity}, 8);
  const Eigen::MatrixXd x = testing::random_matrix(5, 1, 9);
  const Eigen::MatrixXd y = evaluate(net, x);
  CHECK(backprop(net, x, y, parse_loss("mse")).norm() < 1e-12);

  const Eigen::MatrixXd y2 = testing::random_matrix(5, 1, 10);
  // Doubling the targets' residual scale: MSE with Sigma = I/2 is exactly 2 * MSE.
  LossSpec doubled;
  doubled.data = WeightedMseLoss{0.5 * Eigen::MatrixXd::Identity(5, 5)};
  const Eigen::VectorXd g1 = backprop(net, x, y2, parse_loss("mse"));
  const Eigen::VectorXd g2 = backprop(net, x, y2, doubled);
  CHECK((g2 - 2.0 * g1).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(backprop(net, x, y2, parse_loss("eps:0.1")), ValidationError);
  CHECK_THROWS_AS(backprop(net, x, y2, parse_loss("lasso:0.1")), ValidationError);
}
