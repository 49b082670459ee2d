#include "regkit/dataset.hpp"

#include "regkit/errors.hpp"
#include "regkit/random.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

namespace regkit {

Dataset::Dataset(Eigen::MatrixXd inputs, Eigen::MatrixXd targets)
    : inputs_(std::move(inputs)), targets_(std::move(targets)) {
  require(inputs_.rows() == targets_.rows(),
          "dataset: inputs have " + std::to_string(inputs_.rows()) + " rows but targets have " +
              std::to_string(targets_.rows()));
  require(inputs_.allFinite() && targets_.allFinite(), "dataset: non-finite entry");
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Eigen::MatrixXd x(static_cast<Index>(rows.size()), inputs_.cols());
  Eigen::MatrixXd y(static_cast<Index>(rows.size()), targets_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = rows[i];
    require(r >= 0 && r < this->rows(), "dataset: row index " + std::to_string(r) + " out of range");
    x.row(static_cast<Index>(i)) = inputs_.row(r);
    y.row(static_cast<Index>(i)) = targets_.row(r);
  }
  return Dataset(std::move(x), std::move(y));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// "x3" -> 3 for prefix 'x'; anything else -> nullopt
std::optional<Index> column_number(const std::string& name, char prefix) {
  if (name.size() < 2 || name[0] != prefix) return std::nullopt;
  Index value = 0;
  const char* first = name.data() + 1;
  const char* last = name.data() + name.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

std::vector<std::size_t> ordered_columns(const std::vector<std::optional<Index>>& numbers,
                                         char prefix) {
  std::vector<std::pair<Index, std::size_t>> found;
  for (std::size_t c = 0; c < numbers.size(); ++c)
    if (numbers[c]) found.emplace_back(*numbers[c], c);
  std::sort(found.begin(), found.end());
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < found.size(); ++k) {
    require(found[k].first == static_cast<Index>(k),
            std::string("csv: ") + prefix + " columns must be numbered 0.." +
                std::to_string(found.size() - 1) + " without gaps or duplicates");
    out.push_back(found[k].second);
  }
  return out;
}

} // namespace

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "csv: cannot open '" + path.string() + "'");

  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "csv: '" + path.string() + "' has no header");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3); // BOM
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_line(line);
  for (auto& h : header) h = trim(h);

  std::vector<std::optional<Index>> xnum, ynum;
  for (const auto& h : header) {
    xnum.push_back(column_number(h, 'x'));
    ynum.push_back(column_number(h, 'y'));
  }
  const auto xcols = ordered_columns(xnum, 'x');
  const auto ycols = ordered_columns(ynum, 'y');
  require(!xcols.empty(), "csv: header of '" + path.string() + "' has no x0.. input columns");

  std::vector<std::vector<double>> rows;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row_number;
    const auto cells = split_line(line);
    require(cells.size() == header.size(), "csv: row " + std::to_string(row_number) + " has " +
                                               std::to_string(cells.size()) + " cells, header has " +
                                               std::to_string(header.size()));
    std::vector<double> values(cells.size(), 0.0);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!xnum[c] && !ynum[c]) continue;
      const std::string cell = trim(cells[c]);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw ValidationError("csv: non-numeric value '" + cell + "' at row " +
                              std::to_string(row_number) + ", column '" + header[c] + "'");
      values[c] = v;
    }
    rows.push_back(std::move(values));
  }
  require(!rows.empty(), "csv: '" + path.string() + "' has no data rows");

  const auto n = static_cast<Index>(rows.size());
  Eigen::MatrixXd x(n, static_cast<Index>(xcols.size()));
  Eigen::MatrixXd y(n, static_cast<Index>(ycols.size()));
  for (Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < xcols.size(); ++k) x(i, static_cast<Index>(k)) = rows[i][xcols[k]];
    for (std::size_t k = 0; k < ycols.size(); ++k) y(i, static_cast<Index>(k)) = rows[i][ycols[k]];
  }
  return Dataset(std::move(x), std::move(y));
}

void save_csv(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "csv: cannot write '" + path.string() + "'");
  std::string sep;
  for (Index k = 0; k < d.input_dim(); ++k, sep = ",") out << sep << 'x' << k;
  for (Index k = 0; k < d.output_dim(); ++k) out << ",y" << k;
  out << '\n';
  for (Index i = 0; i < d.rows(); ++i) {
    sep.clear();
    for (Index k = 0; k < d.input_dim(); ++k, sep = ",") out << sep << format_double(d.inputs()(i, k));
    for (Index k = 0; k < d.output_dim(); ++k) out << ',' << format_double(d.targets()(i, k));
    out << '\n';
  }
}

SplitIndices split_indices(Index n, double test_fraction, std::uint64_t seed) {
  require(test_fraction >= 0.0 && test_fraction < 1.0, "split: test_fraction must lie in [0, 1)");
  const auto n_test = static_cast<Index>(std::llround(test_fraction * static_cast<double>(n)));
  require(n - n_test >= 1, "split: test_fraction " + format_double(test_fraction) +
                               " leaves no training rows out of " + std::to_string(n));
  IndexList order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto engine = make_engine(seed);
  std::shuffle(order.begin(), order.end(), engine);
  SplitIndices s;
  s.test.assign(order.begin(), order.begin() + n_test);
  s.train.assign(order.begin() + n_test, order.end());
  return s;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed) {
  const auto s = split_indices(d.rows(), test_fraction, seed);
  return {d.subset(s.train), d.subset(s.test)};
}

namespace synthetic {
double reference_curve(double x) { return std::sin(3.0 * x) + 0.5 * x; }
} // namespace synthetic

SyntheticDataset generate_synthetic(Index n_p, std::uint64_t seed) {
  using namespace synthetic;
  require(n_p >= 10, "generate: need at least 10 samples, got " + std::to_string(n_p));
  auto engine = make_engine(seed);

  const double left = kGapLo - kDomainLo;
  const double span = left + (kDomainHi - kGapHi);
  std::uniform_real_distribution<double> position(0.0, span);
  std::vector<double> xs(static_cast<std::size_t>(n_p));
  for (auto& x : xs) {
    const double u = position(engine);
    x = u < left ? kDomainLo + u : kGapHi + (u - left);
  }
  std::sort(xs.begin(), xs.end());

  std::normal_distribution<double> noise(0.0, kNoiseSigma);
  Eigen::MatrixXd x(n_p, 1), y(n_p, 1);
  for (Index i = 0; i < n_p; ++i) {
    x(i, 0) = xs[static_cast<std::size_t>(i)];
    y(i, 0) = reference_curve(x(i, 0)) + noise(engine);
  }

  const auto n_out = static_cast<Index>(std::llround(kOutlierRate * static_cast<double>(n_p)));
  IndexList order(static_cast<std::size_t>(n_p));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), engine);
  IndexList outliers(order.begin(), order.begin() + n_out);
  std::sort(outliers.begin(), outliers.end());
  std::bernoulli_distribution positive(0.5);
  for (Index r : outliers) y(r, 0) += positive(engine) ? kOutlierMagnitude : -kOutlierMagnitude;

  return {Dataset(std::move(x), std::move(y)), std::move(outliers)};
}

} // namespace regkit
