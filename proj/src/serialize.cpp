#include "regkit/serialize.hpp"

#include "regkit/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace regkit {

namespace {

template <class... F> struct overloaded : F... { using F::operator()...; };
template <class... F> overloaded(F...) -> overloaded<F...>;

const Json& field(const Json& j, const char* key, const std::string& context) {
  require(j.is_object(), context + ": expected a JSON object");
  auto it = j.find(key);
  require(it != j.end(), context + ": missing field '" + key + "'");
  return *it;
}

double number(const Json& j, const std::string& context) {
  require(j.is_number(), context + ": expected a number");
  const double v = j.get<double>();
  require(std::isfinite(v), context + ": value must be finite");
  return v;
}

double number_or(const Json& j, const char* key, double fallback, const std::string& context) {
  auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, context + "." + key);
}

std::vector<Index> index_list(const Json& j, const char* what) {
  require(j.is_array(), std::string(what) + ": expected an array");
  std::vector<Index> out;
  for (const auto& e : j) {
    require(e.is_number_integer(), std::string(what) + ": expected integers");
    out.push_back(e.get<Index>());
  }
  return out;
}

} // namespace

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j, const char* what) {
  require(j.is_array(), std::string(what) + ": expected an array of rows");
  if (j.empty()) return {};
  const auto cols = static_cast<Index>(j.front().size());
  Eigen::MatrixXd m(static_cast<Index>(j.size()), cols);
  for (Index i = 0; i < m.rows(); ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    require(row.is_array() && static_cast<Index>(row.size()) == cols,
            std::string(what) + ": ragged or malformed row " + std::to_string(i));
    for (Index k = 0; k < cols; ++k) m(i, k) = number(row[static_cast<std::size_t>(k)], what);
  }
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j, const char* what) {
  require(j.is_array(), std::string(what) + ": expected an array");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = number(j[static_cast<std::size_t>(i)], what);
  return v;
}

Json to_json(const BasisSpec& basis) {
  return std::visit(overloaded{
                        [](const PolynomialBasis& b) {
                          return Json{{"type", "polynomial"}, {"degree", b.degree}};
                        },
                        [](const GaussianRbfBasis& b) {
                          return Json{{"type", "rbf"},
                                      {"centers", matrix_to_json(b.centers)},
                                      {"shapes", vector_to_json(b.shapes)}};
                        },
                        [](const IdentityBasis&) { return Json{{"type", "identity"}}; },
                    },
                    basis);
}

BasisSpec basis_from_json(const Json& j) {
  const std::string type = field(j, "type", "basis").get<std::string>();
  BasisSpec out;
  if (type == "polynomial") {
    out = PolynomialBasis{field(j, "degree", "basis").get<int>()};
  } else if (type == "rbf") {
    out = GaussianRbfBasis{matrix_from_json(field(j, "centers", "basis"), "basis.centers"),
                           vector_from_json(field(j, "shapes", "basis"), "basis.shapes")};
  } else if (type == "identity") {
    out = IdentityBasis{};
  } else {
    throw ValidationError("basis: unknown type '" + type + "'");
  }
  validate_basis(out);
  return out;
}

Json to_json(const KernelSpec& kernel) {
  return std::visit(overloaded{
                        [](const GaussianKernel& k) {
                          return Json{{"type", "gaussian"}, {"gamma", k.gamma}};
                        },
                        [](const LinearKernel&) { return Json{{"type", "linear"}}; },
                        [](const PolynomialKernel& k) {
                          return Json{{"type", "polynomial"}, {"degree", k.degree}, {"offset", k.offset}};
                        },
                    },
                    kernel);
}

KernelSpec kernel_from_json(const Json& j) {
  const std::string type = field(j, "type", "kernel").get<std::string>();
  KernelSpec out;
  if (type == "gaussian") out = GaussianKernel{number(field(j, "gamma", "kernel"), "kernel.gamma")};
  else if (type == "linear") out = LinearKernel{};
  else if (type == "polynomial")
    out = PolynomialKernel{field(j, "degree", "kernel").get<int>(), number_or(j, "offset", 1.0, "kernel")};
  else throw ValidationError("kernel: unknown type '" + type + "'");
  validate_kernel(out);
  return out;
}

std::string model_kind(const AnyModel& model) {
  return std::visit(overloaded{
                        [](const LinearModel&) { return std::string("linear"); },
                        [](const KrrModel&) { return std::string("krr"); },
                        [](const GprModel&) { return std::string("gpr"); },
                        [](const Mlp&) { return std::string("mlp"); },
                        [](const EnsembleModel&) { return std::string("ensemble"); },
                    },
                    model);
}

Json model_to_json(const AnyModel& model, std::uint64_t seed) {
  Json j{{"schema_version", kSchemaVersion}, {"kind", model_kind(model)}, {"seed", seed}};
  std::visit(overloaded{
                 [&](const LinearModel& m) {
                   j["basis"] = to_json(m.basis);
                   j["weights"] = matrix_to_json(m.weights);
                   j["condition_estimate"] = m.info.condition_estimate;
                 },
                 [&](const KrrModel& m) {
                   j["kernel"] = to_json(m.kernel);
                   j["alpha"] = m.regularizer;
                   j["jitter"] = m.jitter;
                   j["train_inputs"] = matrix_to_json(m.train_inputs);
                   j["dual_coefficients"] = matrix_to_json(m.dual_coefficients);
                 },
                 [&](const GprModel& m) {
                   j["kernel"] = to_json(m.kernel);
                   j["noise_variance"] = m.noise_variance;
                   j["jitter"] = m.jitter;
                   j["train_inputs"] = matrix_to_json(m.train_inputs);
                   j["dual_coefficients"] = matrix_to_json(m.dual_coefficients);
                 },
                 [&](const Mlp& m) {
                   j["layer_sizes"] = m.layer_sizes();
                   Json acts = Json::array();
                   for (auto a : m.activations()) acts.push_back(activation_name(a));
                   j["activations"] = acts;
                   j["params"] = vector_to_json(flatten_params(m));
                 },
                 [&](const EnsembleModel& m) {
                   j["degree"] = m.degree;
                   j["j_in_mean"] = m.j_in_mean;
                   j["weight_population"] = matrix_to_json(m.weight_population);
                 },
             },
             model);
  return j;
}

AnyModel model_from_json(const Json& j) {
  const auto version = field(j, "schema_version", "model").get<int>();
  require(version == kSchemaVersion,
          "model: unsupported schema_version " + std::to_string(version));
  const std::string kind = field(j, "kind", "model").get<std::string>();
  if (kind == "linear") {
    LinearModel m;
    m.basis = basis_from_json(field(j, "basis", "model"));
    m.weights = matrix_from_json(field(j, "weights", "model"), "model.weights");
    m.info.condition_estimate = number_or(j, "condition_estimate", 1.0, "model");
    return m;
  }
  if (kind == "krr" || kind == "gpr") {
    const auto kernel = kernel_from_json(field(j, "kernel", "model"));
    const auto inputs = matrix_from_json(field(j, "train_inputs", "model"), "model.train_inputs");
    const auto dual = matrix_from_json(field(j, "dual_coefficients", "model"), "model.dual_coefficients");
    require(inputs.rows() == dual.rows(), "model: train_inputs and dual_coefficients disagree in rows");
    const double jitter = number_or(j, "jitter", 0.0, "model");
    if (kind == "krr") return KrrModel{kernel, inputs, dual, number(field(j, "alpha", "model"), "alpha"), jitter};
    return GprModel{kernel, inputs, dual,
                    number(field(j, "noise_variance", "model"), "noise_variance"), jitter};
  }
  if (kind == "mlp") {
    const auto sizes = index_list(field(j, "layer_sizes", "model"), "model.layer_sizes");
    std::vector<Activation> acts;
    for (const auto& a : field(j, "activations", "model")) acts.push_back(parse_activation(a.get<std::string>()));
    const Mlp shape(sizes, acts);
    return unflatten_params(shape, vector_from_json(field(j, "params", "model"), "model.params"));
  }
  if (kind == "ensemble") {
    EnsembleModel m;
    m.degree = field(j, "degree", "model").get<int>();
    m.j_in_mean = number(field(j, "j_in_mean", "model"), "j_in_mean");
    m.weight_population = matrix_from_json(field(j, "weight_population", "model"), "model.weight_population");
    require(m.degree >= 0 && m.weight_population.rows() == m.degree + 1,
            "model: ensemble weight rows must equal degree + 1");
    return m;
  }
  throw ValidationError("model: unknown kind '" + kind + "'");
}

Json to_json(const ScalarFunction& f) {
  Json terms = Json::array();
  for (const auto& t : f.terms)
    terms.push_back(std::visit(
        overloaded{
            [](const ConstTerm& c) { return Json{{"type", "const"}, {"value", c.value}}; },
            [](const PolyTerm& p) { return Json{{"type", "poly"}, {"coeffs", p.coeffs}}; },
            [](const SinTerm& s) {
              return Json{{"type", "sin"}, {"amplitude", s.amplitude}, {"frequency", s.frequency},
                          {"phase", s.phase}};
            },
        },
        t));
  return terms;
}

ScalarFunction function_from_json(const Json& j) {
  if (j.is_number()) return ScalarFunction::constant(number(j, "function"));
  if (j.is_array()) {
    ScalarFunction f;
    for (const auto& t : j) {
      auto one = function_from_json(t);
      f.terms.insert(f.terms.end(), one.terms.begin(), one.terms.end());
    }
    return f;
  }
  const std::string type = field(j, "type", "function").get<std::string>();
  if (type == "const") return ScalarFunction::constant(number(field(j, "value", "const"), "const.value"));
  if (type == "poly") {
    std::vector<double> coeffs;
    for (const auto& c : field(j, "coeffs", "poly")) coeffs.push_back(number(c, "poly.coeffs"));
    require(!coeffs.empty(), "poly: coeffs must not be empty");
    return ScalarFunction::polynomial(std::move(coeffs));
  }
  if (type == "sin")
    return ScalarFunction::sine(number_or(j, "amplitude", 1.0, "sin"), number_or(j, "frequency", 1.0, "sin"),
                                number_or(j, "phase", 0.0, "sin"));
  throw ValidationError("function: unknown term type '" + type + "'");
}

PdeSetup pde_setup_from_json(const Json& j) {
  PdeSetup s;
  CollocationProblem& p = s.problem;
  const Json& domain = field(j, "domain", "problem");
  require(domain.is_array() && domain.size() == 2, "problem: domain must be [lo, hi]");
  p.x_lo = number(domain[0], "problem.domain");
  p.x_hi = number(domain[1], "problem.domain");
  require(p.x_lo < p.x_hi, "problem: domain must satisfy lo < hi");
  if (j.contains("a")) p.a = function_from_json(j["a"]);
  if (j.contains("b")) p.b = function_from_json(j["b"]);
  if (j.contains("c")) p.c = function_from_json(j["c"]);
  if (j.contains("g")) p.g = function_from_json(j["g"]);
  if (j.contains("exact")) p.exact = function_from_json(j["exact"]);

  for (const auto& bc : field(j, "boundary", "problem")) {
    BoundaryCondition b;
    b.location = number(field(bc, "location", "boundary"), "boundary.location");
    const std::string kind = field(bc, "kind", "boundary").get<std::string>();
    require(kind == "dirichlet" || kind == "neumann",
            "boundary: kind must be dirichlet or neumann, got '" + kind + "'");
    b.kind = kind == "dirichlet" ? BoundaryKind::Dirichlet : BoundaryKind::Neumann;
    b.value = number(field(bc, "value", "boundary"), "boundary.value");
    p.boundary.push_back(b);
  }

  const Json& basis = field(j, "basis", "problem");
  if (basis.contains("centers")) {
    s.basis.centers = vector_from_json(basis["centers"], "basis.centers");
  } else {
    const auto count = field(basis, "count", "basis").get<Index>();
    require(count >= 1, "basis: count must be >= 1");
    s.basis = equispaced_rbf_basis(p.x_lo, p.x_hi, count, 1.0);
  }
  const Index nb = s.basis.centers.rows();
  const double shape = basis.contains("shape") ? number(basis["shape"], "basis.shape")
                                               : default_rbf_shape(s.basis.centers);
  require(shape > 0.0, "basis: shape must be > 0");
  s.basis.shapes = Eigen::VectorXd::Constant(nb, shape);

  if (!j.contains("collocation")) {
    p.collocation = equispaced_interior(p.x_lo, p.x_hi, 2 * nb);
  } else if (j["collocation"].is_array()) {
    p.collocation = vector_from_json(j["collocation"], "collocation");
  } else {
    const auto n_c = j["collocation"].get<Index>();
    p.collocation = equispaced_interior(p.x_lo, p.x_hi, n_c);
  }
  s.alpha_reg = number_or(j, "alpha_reg", s.alpha_reg, "problem");
  p.validate();
  return s;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  require(out.good(), "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

} // namespace regkit
