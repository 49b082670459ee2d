#include "regkit/optimizers.hpp"

#include "regkit/errors.hpp"
#include "regkit/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace regkit {

OptimizerState make_optimizer(const OptimizerOptions& o) {
  OptimizerState state;
  if (o.kind == "gd") state = GdState{o.eta};
  else if (o.kind == "momentum") state = MomentumState{o.eta, o.beta, {}};
  else if (o.kind == "rmsprop") state = RmsPropState{o.eta, o.beta, o.eps, {}};
  else if (o.kind == "adam") state = AdamState{o.eta, o.beta1, o.beta2, o.eps, {}, {}, 1};
  else throw ValidationError("unknown optimizer '" + o.kind + "' (expected gd|momentum|rmsprop|adam)");
  validate_optimizer(state);
  return state;
}

namespace {
void check_rate(double v, const char* name) {
  require(v >= 0.0 && v < 1.0, std::string("optimizer: ") + name + " must lie in [0, 1)");
}
} // namespace

void validate_optimizer(const OptimizerState& state) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        require(s.eta > 0.0, "optimizer: learning rate must be > 0");
        if constexpr (std::is_same_v<T, MomentumState>) check_rate(s.beta, "beta");
        if constexpr (std::is_same_v<T, RmsPropState>) {
          check_rate(s.beta, "beta");
          require(s.eps > 0.0, "optimizer: eps must be > 0");
        }
        if constexpr (std::is_same_v<T, AdamState>) {
          check_rate(s.beta1, "beta1");
          check_rate(s.beta2, "beta2");
          require(s.eps > 0.0, "optimizer: eps must be > 0");
          require(s.step >= 1, "optimizer: adam step counter starts at 1");
        }
      },
      state);
}

std::string optimizer_name(const OptimizerState& state) {
  static const char* names[] = {"gd", "momentum", "rmsprop", "adam"};
  return names[state.index()];
}

namespace {
void ensure_buffer(Eigen::VectorXd& buf, Index n) {
  if (buf.size() == 0) buf = Eigen::VectorXd::Zero(n);
  require(buf.size() == n, "optimizer: state buffer has length " + std::to_string(buf.size()) +
                               ", parameters have " + std::to_string(n));
}
} // namespace

Eigen::VectorXd step(OptimizerState& state, const Eigen::VectorXd& w, const Eigen::VectorXd& g) {
  require(w.size() == g.size(), "optimizer: parameter length " + std::to_string(w.size()) +
                                    " != gradient length " + std::to_string(g.size()));
  require(g.allFinite(), "optimizer: non-finite gradient entry");
  return std::visit(
      [&](auto& s) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GdState>) {
          return w - s.eta * g;
        } else if constexpr (std::is_same_v<T, MomentumState>) {
          ensure_buffer(s.m, w.size());
          s.m = s.beta * s.m - s.eta * g;
          return w + s.m;
        } else if constexpr (std::is_same_v<T, RmsPropState>) {
          ensure_buffer(s.s, w.size());
          s.s = s.beta * s.s + (1.0 - s.beta) * g.cwiseAbs2();
          return w - (s.eta * g.array() / (s.s.array() + s.eps).sqrt()).matrix();
        } else {
          ensure_buffer(s.m, w.size());
          ensure_buffer(s.s, w.size());
          s.m = s.beta1 * s.m + (1.0 - s.beta1) * g;
          s.s = s.beta2 * s.s + (1.0 - s.beta2) * g.cwiseAbs2();
          const double i = static_cast<double>(s.step);
          const Eigen::ArrayXd m_hat = s.m.array() / (1.0 - std::pow(s.beta1, i));
          const Eigen::ArrayXd s_hat = s.s.array() / (1.0 - std::pow(s.beta2, i));
          ++s.step;
          return w - (s.eta * m_hat / (s_hat.sqrt() + s.eps)).matrix();
        }
      },
      state);
}

Index batches_per_epoch(Index n, Index batch_size) {
  require(batch_size >= 1, "schedule: batch size must be >= 1");
  return (n + batch_size - 1) / batch_size;
}

TrainResult minibatch_train(Eigen::VectorXd w0, const Dataset& d, OptimizerState& opt,
                            const BatchSchedule& sched, const ObjectiveFn& objective,
                            const GradientFn& gradient) {
  require(d.rows() >= 1, "train: empty dataset");
  require(sched.batch_size >= 1 && sched.batch_size <= d.rows(),
          "train: batch size must lie in [1, " + std::to_string(d.rows()) + "]");
  require(sched.epochs >= 1, "train: epochs must be >= 1");
  validate_optimizer(opt);

  TrainResult r;
  r.params = std::move(w0);
  r.initial_loss = objective(r.params, d);
  if (!std::isfinite(r.initial_loss)) {
    r.diverged = true;
    return r;
  }

  const Index n = d.rows();
  IndexList order(static_cast<std::size_t>(n));
  for (int epoch = 0; epoch < sched.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Index{0});
    // A single full batch is left in row order so it reproduces plain
    // full-batch gradient descent bit for bit.
    if (sched.batch_size < n) {
      auto engine = substream(sched.shuffle_seed, static_cast<std::uint64_t>(epoch));
      std::shuffle(order.begin(), order.end(), engine);
    }
    const Eigen::VectorXd epoch_start = r.params;
    for (Index start = 0; start < n; start += sched.batch_size) {
      const Index len = std::min(sched.batch_size, n - start);
      const Dataset batch =
          d.subset(std::span<const Index>(order.data() + start, static_cast<std::size_t>(len)));
      const Eigen::VectorXd g = gradient(r.params, batch);
      Eigen::VectorXd next;
      if (g.allFinite()) next = step(opt, r.params, g);
      if (!g.allFinite() || !next.allFinite()) {
        r.diverged = true;
        return r;
      }
      r.params = std::move(next);
      ++r.steps;
    }
    const double loss = objective(r.params, d);
    if (!std::isfinite(loss)) {
      r.params = epoch_start;
      r.diverged = true;
      return r;
    }
    r.loss_history.push_back(loss);
  }
  return r;
}

} // namespace regkit
