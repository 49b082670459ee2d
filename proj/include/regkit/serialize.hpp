#pragma once

#include "regkit/kernel_models.hpp"
#include "regkit/linear_models.hpp"
#include "regkit/neural_net.hpp"
#include "regkit/physics.hpp"
#include "regkit/symreg.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <variant>

namespace regkit {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Bagged polynomial ensemble: one coefficient column per member.
struct EnsembleModel {
  int degree = 1;
  Eigen::MatrixXd weight_population; // (degree + 1) x n_E
  double j_in_mean = 0.0;
};

using AnyModel = std::variant<LinearModel, KrrModel, GprModel, Mlp, EnsembleModel>;

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j, const char* what);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j, const char* what);

Json to_json(const BasisSpec& basis);
BasisSpec basis_from_json(const Json& j);
Json to_json(const KernelSpec& kernel);
KernelSpec kernel_from_json(const Json& j);

/// Model documents are versioned and record the seed that produced them.
Json model_to_json(const AnyModel& model, std::uint64_t seed);
AnyModel model_from_json(const Json& j);
std::string model_kind(const AnyModel& model);

Json to_json(const ScalarFunction& f);
/// Accepts a bare number, one term object or an array of term objects:
/// {"type": "const", "value"}, {"type": "poly", "coeffs"},
/// {"type": "sin", "amplitude", "frequency", "phase"}.
ScalarFunction function_from_json(const Json& j);

/// Everything a pde-solve run needs besides the method flags.
struct PdeSetup {
  CollocationProblem problem;
  GaussianRbfBasis basis;
  double alpha_reg = 1e-8;
};

/// Problem file layout:
///   domain [lo, hi]; a, b, c, g functions (a defaults to 1, others to 0);
///   boundary [{location, kind: dirichlet|neumann, value}];
///   basis {count, shape} or {centers, shape};
///   collocation: a count (default 2 * basis count, equispaced interior) or
///   an explicit list of points; alpha_reg; optional exact solution.
PdeSetup pde_setup_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);

} // namespace regkit
