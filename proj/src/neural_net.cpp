#include "regkit/neural_net.hpp"

#include "regkit/errors.hpp"
#include "regkit/random.hpp"

#include <cmath>

namespace regkit {

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "identity" || name == "linear") return Activation::Identity;
  throw ValidationError("unknown activation '" + name + "' (expected tanh|relu|identity)");
}

std::string activation_name(Activation a) {
  switch (a) {
  case Activation::Tanh: return "tanh";
  case Activation::Relu: return "relu";
  case Activation::Identity: return "identity";
  }
  return "identity";
}

double activate(Activation a, double z) {
  switch (a) {
  case Activation::Tanh: return std::tanh(z);
  case Activation::Relu: return z > 0.0 ? z : 0.0;
  case Activation::Identity: return z;
  }
  return z;
}

double activation_derivative(Activation a, double z) {
  switch (a) {
  case Activation::Tanh: {
    const double t = std::tanh(z);
    return 1.0 - t * t;
  }
  case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
  case Activation::Identity: return 1.0;
  }
  return 1.0;
}

Mlp::Mlp(std::vector<Index> layer_sizes, std::vector<Activation> activations)
    : sizes_(std::move(layer_sizes)), activations_(std::move(activations)) {
  require(sizes_.size() >= 2, "mlp: need at least an input and an output layer");
  for (Index n : sizes_) require(n >= 1, "mlp: layer sizes must be positive");
  require(activations_.size() == sizes_.size() - 1,
          "mlp: need one activation per non-input layer (" + std::to_string(sizes_.size() - 1) +
              "), got " + std::to_string(activations_.size()));
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    weights_.push_back(Eigen::MatrixXd::Zero(sizes_[l], sizes_[l - 1]));
    biases_.push_back(Eigen::VectorXd::Zero(sizes_[l]));
  }
}

Mlp Mlp::random(std::vector<Index> layer_sizes, std::vector<Activation> activations,
                std::uint64_t seed) {
  Mlp net(std::move(layer_sizes), std::move(activations));
  auto engine = make_engine(seed);
  for (std::size_t l = 0; l < net.weights_.size(); ++l) {
    auto& w = net.weights_[l];
    const double s = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-s, s);
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j) w(i, j) = dist(engine);
  }
  return net;
}

ForwardResult forward(const Mlp& net, const Eigen::MatrixXd& x) {
  require(x.cols() == net.input_dim(), "mlp forward: input width " + std::to_string(x.cols()) +
                                           " != " + std::to_string(net.input_dim()));
  ForwardResult r;
  r.cache.pre_activations.emplace_back();
  r.cache.outputs.push_back(x.transpose());
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    Eigen::MatrixXd z = net.weights()[l] * r.cache.outputs.back();
    z.colwise() += net.biases()[l];
    const Activation a = net.activations()[l];
    r.cache.outputs.push_back(z.unaryExpr([a](double v) { return activate(a, v); }));
    r.cache.pre_activations.push_back(std::move(z));
  }
  r.y = r.cache.outputs.back().transpose();
  return r;
}

Eigen::MatrixXd evaluate(const Mlp& net, const Eigen::MatrixXd& x) { return forward(net, x).y; }

Index param_count(const std::vector<Index>& layer_sizes) {
  Index n = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l)
    n += layer_sizes[l] * layer_sizes[l - 1] + layer_sizes[l];
  return n;
}

Index param_count(const Mlp& net) { return param_count(net.layer_sizes()); }

Eigen::VectorXd flatten_params(const Mlp& net) {
  Eigen::VectorXd w(param_count(net));
  Index k = 0;
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    const auto& m = net.weights()[l];
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) w(k++) = m(i, j);
    w.segment(k, net.biases()[l].size()) = net.biases()[l];
    k += net.biases()[l].size();
  }
  return w;
}

Mlp unflatten_params(const Mlp& net, const Eigen::VectorXd& w) {
  require(w.size() == param_count(net), "mlp: parameter vector has length " +
                                            std::to_string(w.size()) + ", expected " +
                                            std::to_string(param_count(net)));
  Mlp out = net;
  Index k = 0;
  for (std::size_t l = 0; l < out.weights().size(); ++l) {
    auto& m = out.weights()[l];
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) m(i, j) = w(k++);
    out.biases()[l] = w.segment(k, out.biases()[l].size());
    k += out.biases()[l].size();
  }
  return out;
}

Eigen::VectorXd backprop_from_output(const Mlp& net, const ForwardCache& cache,
                                     const Eigen::MatrixXd& output_gradient) {
  const std::size_t layers = net.weights().size();
  require(output_gradient.cols() == net.output_dim() &&
              output_gradient.rows() == cache.outputs.front().cols(),
          "mlp backprop: output gradient shape mismatch");
  std::vector<Eigen::MatrixXd> grad_w(layers);
  std::vector<Eigen::VectorXd> grad_b(layers);

  // delta = dJ/dz for the current layer, samples as columns
  Eigen::MatrixXd delta = output_gradient.transpose();
  for (std::size_t l = layers; l-- > 0;) {
    const Activation a = net.activations()[l];
    delta.array() *=
        cache.pre_activations[l + 1].unaryExpr([a](double z) { return activation_derivative(a, z); }).array();
    grad_w[l] = delta * cache.outputs[l].transpose();
    grad_b[l] = delta.rowwise().sum();
    if (l > 0) delta = net.weights()[l].transpose() * delta;
  }

  Eigen::VectorXd g(param_count(net));
  Index k = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    for (Index i = 0; i < grad_w[l].rows(); ++i)
      for (Index j = 0; j < grad_w[l].cols(); ++j) g(k++) = grad_w[l](i, j);
    g.segment(k, grad_b[l].size()) = grad_b[l];
    k += grad_b[l].size();
  }
  return g;
}

Eigen::VectorXd backprop(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y_true,
                         const LossSpec& loss) {
  require(loss.differentiable(), "mlp backprop: loss '" + loss_name(loss) +
                                     "' is not differentiable (use mse, wmse, huber or ridge)");
  const auto fwd = forward(net, x);
  Eigen::VectorXd g = backprop_from_output(net, fwd.cache, loss_gradient(loss, y_true, fwd.y));
  if (loss.penalty) g += penalty_gradient(loss, flatten_params(net));
  return g;
}

} // namespace regkit
