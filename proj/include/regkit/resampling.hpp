#pragma once

#include "regkit/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace regkit {

/// What a fit function hands back: its flat weights and a way to predict.
struct FittedMember {
  Eigen::VectorXd weights;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> predict;
};

using FitFn = std::function<FittedMember(const Dataset&)>;

/// Least-squares polynomial of the given degree (ridge with alpha, default 0).
FitFn polynomial_fitter(int degree, double alpha = 0.0);

/// Evaluates highest-power-first coefficients at x (Horner).
Eigen::VectorXd polyval(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& x);

enum class ResampleMode {
  Split,       // disjoint train/test split per member
  Replacement, // n_* rows drawn with replacement; test = rows never drawn
};

struct EnsembleResult {
  Eigen::VectorXd in_sample_mse;      // J_i, one per member
  Eigen::VectorXd out_sample_mse;     // J_o, one per member
  Eigen::MatrixXd weight_population;  // n_w x n_E
  std::vector<SplitIndices> splits;   // per member, train may repeat rows in replacement mode
};

inline constexpr int kMaxRedraws = 100;

/// One ensemble member. Its random stream depends only on (seed, member), so
/// members can be evaluated in any order or in parallel.
/// In replacement mode n_* = round((1 - test_fraction) * n_p).
FittedMember bootstrap_member(const Dataset& d, const FitFn& fit, Index member,
                              double test_fraction, ResampleMode mode, std::uint64_t seed,
                              SplitIndices* split_out = nullptr, double* j_in = nullptr,
                              double* j_out = nullptr);

EnsembleResult bootstrap_ensemble(const Dataset& d, const FitFn& fit, Index n_members,
                                  double test_fraction, ResampleMode mode, std::uint64_t seed);

struct EnsemblePrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd model_variance; // population variance across members
  Eigen::VectorXd uncertainty;    // sqrt(J_i_mean + model_variance)
};

using MemberPredictFn =
    std::function<Eigen::VectorXd(const Eigen::MatrixXd& x, const Eigen::VectorXd& weights)>;

EnsemblePrediction ensemble_predict(const Eigen::MatrixXd& x, const Eigen::MatrixXd& weight_population,
                                    double j_in_mean, const MemberPredictFn& predict);

struct CvReport {
  std::vector<double> per_fold_mse;           // out-of-sample, on the held-out fold
  std::vector<double> per_fold_in_sample_mse; // on the fold's training rows
  double mean = 0.0;
  double std = 0.0; // population standard deviation
  std::vector<SplitIndices> folds;
};

/// K folds whose sizes differ by at most one (the first n % K folds are one
/// larger). Each fold is the test set exactly once.
std::vector<SplitIndices> kfold_indices(Index n, Index k, std::uint64_t seed, bool shuffle);

CvReport kfold_cv(const Dataset& d, const FitFn& fit, Index k, std::uint64_t seed, bool shuffle);

} // namespace regkit
