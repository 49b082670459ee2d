#pragma once

#include "regkit/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace regkit {

// Defaults are the customary ones: eta 1e-3, beta 0.9, beta1 0.9,
// beta2 0.999, eps 1e-8. Buffers are sized on the first step.

struct GdState {
  double eta = 1e-3;
};

/// m <- beta m - eta g;  w <- w + m
struct MomentumState {
  double eta = 1e-3;
  double beta = 0.9;
  Eigen::VectorXd m;
};

/// s <- beta s + (1 - beta) g^2;  w <- w - eta g / sqrt(s + eps)
struct RmsPropState {
  double eta = 1e-3;
  double beta = 0.9;
  double eps = 1e-8;
  Eigen::VectorXd s;
};

/// Bias-corrected moments with step counter i starting at 1;
/// w <- w - eta m_hat / (sqrt(s_hat) + eps). beta2 drives both the second
/// moment update and its bias correction.
struct AdamState {
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Eigen::VectorXd m;
  Eigen::VectorXd s;
  long step = 1;
};

using OptimizerState = std::variant<GdState, MomentumState, RmsPropState, AdamState>;

struct OptimizerOptions {
  std::string kind = "adam"; // gd | momentum | rmsprop | adam
  double eta = 1e-3;
  double beta = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

OptimizerState make_optimizer(const OptimizerOptions& options);
void validate_optimizer(const OptimizerState& state);
std::string optimizer_name(const OptimizerState& state);

/// One element-wise update; advances the state. Throws ValidationError on
/// length mismatch or non-finite gradient entries.
Eigen::VectorXd step(OptimizerState& state, const Eigen::VectorXd& w, const Eigen::VectorXd& g);

struct BatchSchedule {
  Index batch_size = 32;
  int epochs = 100;
  std::uint64_t shuffle_seed = 42;
};

/// Number of mini-batches per epoch, ceil(n / batch_size).
Index batches_per_epoch(Index n, Index batch_size);

/// Objective on a set of rows (full data for the history, a batch for steps).
using ObjectiveFn = std::function<double(const Eigen::VectorXd& w, const Dataset& rows)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& w, const Dataset& rows)>;

struct TrainResult {
  Eigen::VectorXd params;
  std::vector<double> loss_history; // full-data loss after each epoch
  double initial_loss = 0.0;
  long steps = 0;
  bool diverged = false;
};

/// Per epoch: shuffle rows (seeded per epoch), cut into ceil(n/batch) batches
/// (the last may be short), one optimizer step per batch, then record the
/// full-data objective. A non-finite objective or gradient stops training and
/// returns the last finite parameters with `diverged` set.
TrainResult minibatch_train(Eigen::VectorXd w0, const Dataset& d, OptimizerState& opt,
                            const BatchSchedule& sched, const ObjectiveFn& objective,
                            const GradientFn& gradient);

} // namespace regkit
