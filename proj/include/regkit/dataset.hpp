#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace regkit {

using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Row-aligned samples: inputs is n_p x n_x, targets is n_p x n_y.
///
/// Construction validates that the row counts agree and every entry is
/// finite. A zero-row dataset is representable (an empty test split, or
/// conditioning a Gaussian process on nothing); loaders and fitters reject it.
class Dataset {
public:
  Dataset() = default;
  Dataset(Eigen::MatrixXd inputs, Eigen::MatrixXd targets);

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::MatrixXd& targets() const { return targets_; }

  Index rows() const { return inputs_.rows(); }
  Index input_dim() const { return inputs_.cols(); }
  Index output_dim() const { return targets_.cols(); }
  bool empty() const { return rows() == 0; }

  /// Rows picked by index, in the given order; duplicates allowed.
  Dataset subset(std::span<const Index> rows) const;

private:
  Eigen::MatrixXd inputs_;
  Eigen::MatrixXd targets_;
};

struct SplitIndices {
  IndexList train;
  IndexList test;
};

/// Reads a CSV whose header names columns x0..x{n_x-1} and y0..y{n_y-1}.
/// Columns with other names are ignored. The y columns may be absent
/// (query files), the x columns may not.
Dataset load_csv(const std::filesystem::path& path);

/// Writes x0..,y0.. columns with 17 significant digits.
void save_csv(const std::filesystem::path& path, const Dataset& d);

/// Shuffled disjoint partition; test size is round(test_fraction * n).
SplitIndices split_indices(Index n, double test_fraction, std::uint64_t seed);

std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed);

/// Constants of the synthetic stand-in for the noisy, gapped tutorial dataset.
namespace synthetic {
inline constexpr double kDomainLo = -1.0;
inline constexpr double kDomainHi = 1.0;
inline constexpr double kGapLo = 0.2;
inline constexpr double kGapHi = 0.55;
inline constexpr double kNoiseSigma = 0.3;
inline constexpr double kOutlierRate = 0.05;
inline constexpr double kOutlierMagnitude = 2.0;

/// Noise-free curve the samples scatter around.
double reference_curve(double x);
} // namespace synthetic

struct SyntheticDataset {
  Dataset data;
  IndexList outlier_rows; // sorted ascending
};

/// n_p scalar samples over [kDomainLo, kDomainHi] with no sample inside
/// (kGapLo, kGapHi), sorted by x; Gaussian noise plus round(kOutlierRate*n_p)
/// outliers offset by +-kOutlierMagnitude. Pure function of (n_p, seed).
SyntheticDataset generate_synthetic(Index n_p, std::uint64_t seed);

/// Shortest-safe "%.17g" rendering used by every CSV writer.
std::string format_double(double v);

} // namespace regkit
