#pragma once

#include "regkit/linear_models.hpp"
#include "regkit/losses.hpp"
#include "regkit/neural_net.hpp"
#include "regkit/optimizers.hpp"

namespace regkit {

struct MlpTrainResult {
  Mlp net;
  TrainResult train;
};

/// Mini-batch training of an MLP with backprop gradients.
MlpTrainResult train_mlp(const Mlp& net, const Dataset& d, const LossSpec& loss,
                         OptimizerState& opt, const BatchSchedule& sched);

struct LinearTrainResult {
  LinearModel model;
  TrainResult train;
};

/// Mini-batch training of a linear-in-parameters model, gradient
/// Phi^T dJ/dY (subgradients for eps-insensitive and l1 terms). Parameters
/// are the weight matrix flattened column by column.
LinearTrainResult train_linear(const LinearModel& init, const Dataset& d, const LossSpec& loss,
                               OptimizerState& opt, const BatchSchedule& sched);

} // namespace regkit
