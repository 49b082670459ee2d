#pragma once

#include "regkit/dataset.hpp"
#include "regkit/losses.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace regkit {

enum class Activation { Tanh, Relu, Identity };

Activation parse_activation(const std::string& name);
std::string activation_name(Activation a);

double activate(Activation a, double z);
/// relu'(0) is taken as 0.
double activation_derivative(Activation a, double z);

/// Fully connected feed-forward network.
///
/// Layer 1 is the input layer and carries no parameters. For layer
/// l = 2..L, weights()[l-2] is n_l x n_{l-1}, biases()[l-2] has n_l entries
/// and activations()[l-2] is applied to z^(l) = W y^(l-1) + b.
///
/// Flat parameter order: layer by layer; within a layer the weight matrix in
/// row-major order, then the bias vector.
class Mlp {
public:
  Mlp() = default;
  /// Zero weights and biases.
  Mlp(std::vector<Index> layer_sizes, std::vector<Activation> activations);

  /// Uniform in [-s, s], s = sqrt(6 / (n_{l-1} + n_l)); zero biases.
  static Mlp random(std::vector<Index> layer_sizes, std::vector<Activation> activations,
                    std::uint64_t seed);

  const std::vector<Index>& layer_sizes() const { return sizes_; }
  const std::vector<Activation>& activations() const { return activations_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }
  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }

  Index input_dim() const { return sizes_.front(); }
  Index output_dim() const { return sizes_.back(); }

private:
  std::vector<Index> sizes_;
  std::vector<Activation> activations_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

/// Per-layer pre-activations z and outputs y, samples as columns.
/// outputs[0] is the input itself; pre_activations[0] is unused (empty).
struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre_activations;
  std::vector<Eigen::MatrixXd> outputs;
};

struct ForwardResult {
  Eigen::MatrixXd y; // n x n_L
  ForwardCache cache;
};

ForwardResult forward(const Mlp& net, const Eigen::MatrixXd& x);
/// forward without keeping the caches.
Eigen::MatrixXd evaluate(const Mlp& net, const Eigen::MatrixXd& x);

/// sum_{l=2..L} n_l n_{l-1} + n_l
Index param_count(const Mlp& net);
Index param_count(const std::vector<Index>& layer_sizes);

Eigen::VectorXd flatten_params(const Mlp& net);
Mlp unflatten_params(const Mlp& net, const Eigen::VectorXd& w);

/// dJ/dw given dJ/dY (n x n_L) at the forward pass that produced `cache`.
Eigen::VectorXd backprop_from_output(const Mlp& net, const ForwardCache& cache,
                                     const Eigen::MatrixXd& output_gradient);

/// Exact reverse-mode gradient of the loss (data term plus ridge penalty on w).
/// Throws ValidationError for non-differentiable losses (eps-insensitive, l1).
Eigen::VectorXd backprop(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y_true,
                         const LossSpec& loss);

} // namespace regkit
