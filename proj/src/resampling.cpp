#include "regkit/resampling.hpp"

#include "regkit/errors.hpp"
#include "regkit/linear_models.hpp"
#include "regkit/losses.hpp"
#include "regkit/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace regkit {

Eigen::VectorXd polyval(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& x) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  for (Index k = 0; k < coeffs.size(); ++k) y = (y.array() * x.array() + coeffs(k)).matrix();
  return y;
}

FitFn polynomial_fitter(int degree, double alpha) {
  return [degree, alpha](const Dataset& d) {
    require(d.output_dim() == 1, "polynomial fit: expects a single target column");
    LinearModel m = ridge_fit(d, PolynomialBasis{degree}, alpha);
    Eigen::VectorXd w = m.weights.col(0);
    return FittedMember{w, [w](const Eigen::MatrixXd& x) {
                          require(x.cols() == 1, "polynomial predict: expects scalar inputs");
                          return Eigen::MatrixXd(polyval(w, x.col(0)));
                        }};
  };
}

namespace {

SplitIndices draw_with_replacement(Index n, Index n_train, Engine& engine) {
  std::uniform_int_distribution<Index> pick(0, n - 1);
  SplitIndices s;
  std::vector<bool> drawn(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < n_train; ++i) {
    const Index r = pick(engine);
    s.train.push_back(r);
    drawn[static_cast<std::size_t>(r)] = true;
  }
  for (Index r = 0; r < n; ++r)
    if (!drawn[static_cast<std::size_t>(r)]) s.test.push_back(r);
  return s;
}

} // namespace

FittedMember bootstrap_member(const Dataset& d, const FitFn& fit, Index member,
                              double test_fraction, ResampleMode mode, std::uint64_t seed,
                              SplitIndices* split_out, double* j_in, double* j_out) {
  require(test_fraction >= 0.0 && test_fraction < 1.0, "bootstrap: test fraction must lie in [0, 1)");
  SplitIndices split;
  if (mode == ResampleMode::Split) {
    auto engine = substream(seed, static_cast<std::uint64_t>(member));
    split = split_indices(d.rows(), test_fraction, engine());
  } else {
    const auto n_train = static_cast<Index>(
        std::llround((1.0 - test_fraction) * static_cast<double>(d.rows())));
    require(n_train >= 1, "bootstrap: no training rows");
    auto engine = substream(seed, static_cast<std::uint64_t>(member));
    int attempt = 0;
    do {
      require(attempt++ < kMaxRedraws, "bootstrap: member " + std::to_string(member) +
                                           " drew every row in " + std::to_string(kMaxRedraws) +
                                           " attempts; no rows left to test on");
      split = draw_with_replacement(d.rows(), n_train, engine);
    } while (split.test.empty());
  }
  require(!split.test.empty(), "bootstrap: empty test set; use a larger test fraction");

  const Dataset train = d.subset(split.train);
  const Dataset test = d.subset(split.test);
  FittedMember fitted = fit(train);
  if (j_in) *j_in = mse(train.targets(), fitted.predict(train.inputs()));
  if (j_out) *j_out = mse(test.targets(), fitted.predict(test.inputs()));
  if (split_out) *split_out = std::move(split);
  return fitted;
}

EnsembleResult bootstrap_ensemble(const Dataset& d, const FitFn& fit, Index n_members,
                                  double test_fraction, ResampleMode mode, std::uint64_t seed) {
  require(n_members >= 1, "bootstrap: need at least one member");
  EnsembleResult r;
  r.in_sample_mse.resize(n_members);
  r.out_sample_mse.resize(n_members);
  r.splits.resize(static_cast<std::size_t>(n_members));
  for (Index j = 0; j < n_members; ++j) {
    double j_in = 0.0, j_out = 0.0;
    const FittedMember m = bootstrap_member(d, fit, j, test_fraction, mode, seed,
                                            &r.splits[static_cast<std::size_t>(j)], &j_in, &j_out);
    if (j == 0) r.weight_population.resize(m.weights.size(), n_members);
    require(m.weights.size() == r.weight_population.rows(),
            "bootstrap: members returned weight vectors of different lengths");
    r.weight_population.col(j) = m.weights;
    r.in_sample_mse(j) = j_in;
    r.out_sample_mse(j) = j_out;
  }
  return r;
}

EnsemblePrediction ensemble_predict(const Eigen::MatrixXd& x, const Eigen::MatrixXd& weight_population,
                                    double j_in_mean, const MemberPredictFn& predict) {
  require(weight_population.cols() >= 1, "ensemble predict: empty population");
  require(j_in_mean >= 0.0, "ensemble predict: in-sample error must be >= 0");
  const Index n = x.rows(), members = weight_population.cols();
  Eigen::MatrixXd pop(n, members);
  for (Index j = 0; j < members; ++j) {
    const Eigen::VectorXd y = predict(x, weight_population.col(j));
    require(y.size() == n, "ensemble predict: member returned the wrong number of rows");
    pop.col(j) = y;
  }
  EnsemblePrediction p;
  p.mean = pop.rowwise().mean();
  p.model_variance = (pop.colwise() - p.mean).rowwise().squaredNorm() / static_cast<double>(members);
  p.uncertainty = (p.model_variance.array() + j_in_mean).sqrt().matrix();
  return p;
}

std::vector<SplitIndices> kfold_indices(Index n, Index k, std::uint64_t seed, bool shuffle) {
  require(k >= 2 && k <= n, "cv: K must lie in [2, " + std::to_string(n) + "], got " +
                                std::to_string(k));
  IndexList order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  if (shuffle) {
    auto engine = make_engine(seed);
    std::shuffle(order.begin(), order.end(), engine);
  }
  std::vector<SplitIndices> folds(static_cast<std::size_t>(k));
  Index start = 0;
  for (Index f = 0; f < k; ++f) {
    const Index size = n / k + (f < n % k ? 1 : 0);
    auto& fold = folds[static_cast<std::size_t>(f)];
    fold.test.assign(order.begin() + start, order.begin() + start + size);
    fold.train.assign(order.begin(), order.begin() + start);
    fold.train.insert(fold.train.end(), order.begin() + start + size, order.end());
    start += size;
  }
  return folds;
}

CvReport kfold_cv(const Dataset& d, const FitFn& fit, Index k, std::uint64_t seed, bool shuffle) {
  CvReport r;
  r.folds = kfold_indices(d.rows(), k, seed, shuffle);
  for (const auto& fold : r.folds) {
    const Dataset train = d.subset(fold.train);
    const Dataset test = d.subset(fold.test);
    const FittedMember m = fit(train);
    r.per_fold_in_sample_mse.push_back(mse(train.targets(), m.predict(train.inputs())));
    r.per_fold_mse.push_back(mse(test.targets(), m.predict(test.inputs())));
  }
  const double n = static_cast<double>(r.per_fold_mse.size());
  r.mean = std::accumulate(r.per_fold_mse.begin(), r.per_fold_mse.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : r.per_fold_mse) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / n);
  return r;
}

} // namespace regkit
