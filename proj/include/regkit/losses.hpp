#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <variant>

namespace regkit {

// All losses reduce by the mean over samples (factor 1/n_p). Residuals are
// e = y_true - y_pred.

struct MseLoss {};

/// Quadratic form e^T Sigma^{-1} e per output column; Sigma is n_p x n_p SPD.
/// An empty Sigma stands for the identity of whatever size the data has.
struct WeightedMseLoss {
  Eigen::MatrixXd sigma;
};

struct HuberLoss {
  double delta = 1.0;
};

struct EpsilonInsensitiveLoss {
  double epsilon = 0.0;
};

using DataLoss = std::variant<MseLoss, WeightedMseLoss, HuberLoss, EpsilonInsensitiveLoss>;

enum class PenaltyNorm { L1, L2 };

struct Penalty {
  double alpha = 0.0;
  PenaltyNorm norm = PenaltyNorm::L2;
};

/// A data term plus an optional parameter penalty (ridge: l2, lasso: l1).
struct LossSpec {
  DataLoss data = MseLoss{};
  std::optional<Penalty> penalty;

  /// Throws ValidationError when a loss parameter is out of range.
  void validate() const;

  /// False for eps-insensitive data terms and for the l1 penalty.
  bool differentiable() const;
};

/// Parses the CLI form: mse | wmse | huber:<delta> | eps:<epsilon> |
/// ridge:<alpha> | lasso:<alpha>. "wmse" carries an empty (identity) Sigma.
LossSpec parse_loss(const std::string& text);
std::string loss_name(const LossSpec& spec);

double mse(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred);
double weighted_mse(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred,
                    const Eigen::MatrixXd& sigma);
/// Mean of per-sample L_delta over the rows of e (summed across columns).
double huber(const Eigen::MatrixXd& e, double delta);
double eps_insensitive(const Eigen::MatrixXd& e, double epsilon);
double penalized(double base_value, const Eigen::VectorXd& w, double alpha, PenaltyNorm norm);

/// Per-sample Huber value and its derivative with respect to e.
double huber_value(double e, double delta);
double huber_derivative(double e, double delta);
/// Subgradient of E_eps; 0 on the tube boundary.
double eps_subgradient(double e, double epsilon);

/// Data term only.
double data_loss(const DataLoss& loss, const Eigen::MatrixXd& y_true,
                 const Eigen::MatrixXd& y_pred);
/// Data term plus penalty on w (w may be empty when there is no penalty).
double evaluate(const LossSpec& spec, const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred,
                const Eigen::VectorXd& w = {});

/// dJ/dy_pred of the data term, same shape as y_pred.
Eigen::MatrixXd loss_gradient(const LossSpec& spec, const Eigen::MatrixXd& y_true,
                              const Eigen::MatrixXd& y_pred);
/// d(penalty)/dw; zero vector without a penalty. l1 uses alpha*sign(w), 0 at 0.
Eigen::VectorXd penalty_gradient(const LossSpec& spec, const Eigen::VectorXd& w);

} // namespace regkit
