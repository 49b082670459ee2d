#include "regkit/losses.hpp"

#include "regkit/dataset.hpp"
#include "regkit/errors.hpp"

#include <charconv>
#include <cmath>

namespace regkit {

namespace {

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
              std::to_string(b.cols()) + ")");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Eigen::LLT<Eigen::MatrixXd> factor_sigma(const Eigen::MatrixXd& sigma) {
  require(sigma.rows() == sigma.cols(), "weighted mse: Sigma must be square");
  require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <=
              1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff()),
          "weighted mse: Sigma must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw NumericalError("weighted mse: Sigma is not positive-definite (Cholesky failed)");
  return llt;
}

double parse_number(const std::string& text, const std::string& spec) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(v),
          "loss: bad parameter in '" + spec + "'");
  return v;
}

} // namespace

void LossSpec::validate() const {
  if (const auto* h = std::get_if<HuberLoss>(&data)) require(h->delta > 0.0, "huber: delta must be > 0");
  if (const auto* e = std::get_if<EpsilonInsensitiveLoss>(&data))
    require(e->epsilon >= 0.0, "eps-insensitive: epsilon must be >= 0");
  if (const auto* w = std::get_if<WeightedMseLoss>(&data); w && w->sigma.size() > 0)
    factor_sigma(w->sigma);
  if (penalty) require(penalty->alpha >= 0.0, "penalty: alpha must be >= 0");
}

bool LossSpec::differentiable() const {
  if (std::holds_alternative<EpsilonInsensitiveLoss>(data)) return false;
  return !(penalty && penalty->norm == PenaltyNorm::L1 && penalty->alpha > 0.0);
}

LossSpec parse_loss(const std::string& text) {
  LossSpec spec;
  bool have_data = false;
  std::size_t from = 0;
  while (from <= text.size()) {
    const auto plus = std::min(text.find('+', from), text.size());
    const std::string term = text.substr(from, plus - from);
    from = plus + 1;
    const auto colon = term.find(':');
    const std::string name = term.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : term.substr(colon + 1);
    auto param = [&] {
      require(!arg.empty(), "loss: '" + name + "' needs a parameter, e.g. " + name + ":0.5");
      return parse_number(arg, text);
    };
    const bool is_penalty = name == "ridge" || name == "lasso";
    if (is_penalty) {
      require(!spec.penalty, "loss: at most one penalty in '" + text + "'");
    } else {
      require(!have_data, "loss: at most one data term in '" + text + "'");
      have_data = true;
    }
    if (name == "mse") {
      spec.data = MseLoss{};
    } else if (name == "wmse") {
      spec.data = WeightedMseLoss{};
    } else if (name == "huber") {
      spec.data = HuberLoss{param()};
    } else if (name == "eps") {
      spec.data = EpsilonInsensitiveLoss{param()};
    } else if (name == "ridge") {
      spec.penalty = Penalty{param(), PenaltyNorm::L2};
    } else if (name == "lasso") {
      spec.penalty = Penalty{param(), PenaltyNorm::L1};
    } else {
      throw ValidationError("loss: unknown loss '" + text +
                            "' (expected mse|wmse|huber:d|eps:e|ridge:a|lasso:a, optionally data+penalty)");
    }
  }
  spec.validate();
  return spec;
}

std::string loss_name(const LossSpec& spec) {
  std::string base = std::visit(
      [](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, MseLoss>) return "mse";
        else if constexpr (std::is_same_v<T, WeightedMseLoss>) return "wmse";
        else if constexpr (std::is_same_v<T, HuberLoss>) return "huber:" + format_double(l.delta);
        else return "eps:" + format_double(l.epsilon);
      },
      spec.data);
  if (spec.penalty)
    base += std::string(spec.penalty->norm == PenaltyNorm::L1 ? "+lasso:" : "+ridge:") +
            format_double(spec.penalty->alpha);
  return base;
}

double mse(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred) {
  require_same_shape(y_true, y_pred, "mse");
  require(y_true.rows() > 0, "mse: no samples");
  return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.rows());
}

double weighted_mse(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred,
                    const Eigen::MatrixXd& sigma) {
  require_same_shape(y_true, y_pred, "weighted mse");
  require(y_true.rows() > 0, "weighted mse: no samples");
  if (sigma.size() == 0) return mse(y_true, y_pred);
  require(sigma.rows() == y_true.rows(), "weighted mse: Sigma size does not match sample count");
  const auto llt = factor_sigma(sigma);
  // e^T Sigma^{-1} e = |L^{-1} e|^2
  const Eigen::MatrixXd e = y_true - y_pred;
  const Eigen::MatrixXd v = llt.matrixL().solve(e);
  return v.squaredNorm() / static_cast<double>(y_true.rows());
}

double huber_value(double e, double delta) {
  const double a = std::abs(e);
  return a <= delta ? 0.5 * e * e : delta * (a - 0.5 * delta);
}

double huber_derivative(double e, double delta) {
  return std::abs(e) <= delta ? e : delta * sign(e);
}

double eps_subgradient(double e, double epsilon) {
  return std::abs(e) <= epsilon ? 0.0 : sign(e);
}

double huber(const Eigen::MatrixXd& e, double delta) {
  require(delta > 0.0, "huber: delta must be > 0");
  require(e.rows() > 0, "huber: no samples");
  return e.unaryExpr([delta](double v) { return huber_value(v, delta); }).sum() /
         static_cast<double>(e.rows());
}

double eps_insensitive(const Eigen::MatrixXd& e, double epsilon) {
  require(epsilon >= 0.0, "eps-insensitive: epsilon must be >= 0");
  require(e.rows() > 0, "eps-insensitive: no samples");
  return e.unaryExpr([epsilon](double v) { return std::max(std::abs(v) - epsilon, 0.0); }).sum() /
         static_cast<double>(e.rows());
}

double penalized(double base_value, const Eigen::VectorXd& w, double alpha, PenaltyNorm norm) {
  require(alpha >= 0.0, "penalty: alpha must be >= 0");
  return base_value + alpha * (norm == PenaltyNorm::L2 ? w.squaredNorm() : w.lpNorm<1>());
}

double data_loss(const DataLoss& loss, const Eigen::MatrixXd& y_true,
                 const Eigen::MatrixXd& y_pred) {
  return std::visit(
      [&](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, MseLoss>) {
          return mse(y_true, y_pred);
        } else if constexpr (std::is_same_v<T, WeightedMseLoss>) {
          return weighted_mse(y_true, y_pred, l.sigma);
        } else {
          require_same_shape(y_true, y_pred, "loss");
          if constexpr (std::is_same_v<T, HuberLoss>) return huber(y_true - y_pred, l.delta);
          else return eps_insensitive(y_true - y_pred, l.epsilon);
        }
      },
      loss);
}

double evaluate(const LossSpec& spec, const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred,
                const Eigen::VectorXd& w) {
  const double base = data_loss(spec.data, y_true, y_pred);
  if (!spec.penalty) return base;
  return penalized(base, w, spec.penalty->alpha, spec.penalty->norm);
}

Eigen::MatrixXd loss_gradient(const LossSpec& spec, const Eigen::MatrixXd& y_true,
                              const Eigen::MatrixXd& y_pred) {
  require_same_shape(y_true, y_pred, "loss gradient");
  require(y_true.rows() > 0, "loss gradient: no samples");
  const double inv_n = 1.0 / static_cast<double>(y_true.rows());
  const Eigen::MatrixXd e = y_true - y_pred;
  return std::visit(
      [&](const auto& l) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, MseLoss>) {
          return -2.0 * inv_n * e;
        } else if constexpr (std::is_same_v<T, WeightedMseLoss>) {
          if (l.sigma.size() == 0) return -2.0 * inv_n * e;
          require(l.sigma.rows() == e.rows(), "weighted mse: Sigma size does not match sample count");
          return -2.0 * inv_n * factor_sigma(l.sigma).solve(e);
        } else if constexpr (std::is_same_v<T, HuberLoss>) {
          const double d = l.delta;
          return -inv_n * e.unaryExpr([d](double v) { return huber_derivative(v, d); });
        } else {
          const double eps = l.epsilon;
          return -inv_n * e.unaryExpr([eps](double v) { return eps_subgradient(v, eps); });
        }
      },
      spec.data);
}

Eigen::VectorXd penalty_gradient(const LossSpec& spec, const Eigen::VectorXd& w) {
  if (!spec.penalty) return Eigen::VectorXd::Zero(w.size());
  const double alpha = spec.penalty->alpha;
  if (spec.penalty->norm == PenaltyNorm::L2) return 2.0 * alpha * w;
  return alpha * w.unaryExpr([](double v) { return sign(v); });
}

} // namespace regkit
