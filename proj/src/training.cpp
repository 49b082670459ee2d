#include "regkit/training.hpp"

#include "regkit/errors.hpp"

namespace regkit {

namespace {

void check_weighted_batches(const LossSpec& loss, const Dataset& d, const BatchSchedule& sched) {
  if (const auto* w = std::get_if<WeightedMseLoss>(&loss.data); w && w->sigma.size() > 0)
    require(sched.batch_size == d.rows(),
            "train: an explicit Sigma couples all samples, so the batch must be the full dataset");
}

} // namespace

MlpTrainResult train_mlp(const Mlp& net, const Dataset& d, const LossSpec& loss,
                         OptimizerState& opt, const BatchSchedule& sched) {
  loss.validate();
  require(loss.differentiable(), "train mlp: loss '" + loss_name(loss) + "' is not differentiable");
  check_weighted_batches(loss, d, sched);
  const ObjectiveFn objective = [&](const Eigen::VectorXd& w, const Dataset& rows) {
    const Mlp current = unflatten_params(net, w);
    return evaluate(loss, rows.targets(), evaluate(current, rows.inputs()), w);
  };
  const GradientFn gradient = [&](const Eigen::VectorXd& w, const Dataset& rows) {
    return backprop(unflatten_params(net, w), rows.inputs(), rows.targets(), loss);
  };
  auto result = minibatch_train(flatten_params(net), d, opt, sched, objective, gradient);
  return {unflatten_params(net, result.params), std::move(result)};
}

LinearTrainResult train_linear(const LinearModel& init, const Dataset& d, const LossSpec& loss,
                               OptimizerState& opt, const BatchSchedule& sched) {
  loss.validate();
  check_weighted_batches(loss, d, sched);
  const Index rows_w = init.weights.rows(), cols_w = init.weights.cols();
  require(cols_w == d.output_dim(), "train linear: weight columns do not match target width");
  auto unpack = [=](const Eigen::VectorXd& w) {
    return Eigen::Map<const Eigen::MatrixXd>(w.data(), rows_w, cols_w);
  };
  const ObjectiveFn objective = [&](const Eigen::VectorXd& w, const Dataset& rows) {
    const Eigen::MatrixXd phi = feature_matrix(init.basis, rows.inputs());
    return evaluate(loss, rows.targets(), phi * unpack(w), w);
  };
  const GradientFn gradient = [&](const Eigen::VectorXd& w, const Dataset& rows) {
    const Eigen::MatrixXd phi = feature_matrix(init.basis, rows.inputs());
    const Eigen::MatrixXd dy = loss_gradient(loss, rows.targets(), phi * unpack(w));
    const Eigen::MatrixXd dw = phi.transpose() * dy;
    Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(dw.data(), dw.size());
    return Eigen::VectorXd(g + penalty_gradient(loss, w));
  };
  const Eigen::VectorXd w0 = Eigen::Map<const Eigen::VectorXd>(init.weights.data(), init.weights.size());
  auto result = minibatch_train(w0, d, opt, sched, objective, gradient);
  LinearModel model = init;
  model.weights = unpack(result.params);
  return {std::move(model), std::move(result)};
}

} // namespace regkit
