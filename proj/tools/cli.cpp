#include "cli.hpp"

#include "regkit/dataset.hpp"
#include "regkit/errors.hpp"
#include "regkit/kernel_models.hpp"
#include "regkit/linear_models.hpp"
#include "regkit/losses.hpp"
#include "regkit/neural_net.hpp"
#include "regkit/optimizers.hpp"
#include "regkit/physics.hpp"
#include "regkit/resampling.hpp"
#include "regkit/serialize.hpp"
#include "regkit/symreg.hpp"
#include "regkit/training.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace regkit::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;
constexpr double kBandZ = 1.96; // half-width of the 95% band in standard deviations
constexpr Index kSolutionSamples = 200;

struct Common {
  std::string input;
  std::string output;
  std::string report;
  std::uint64_t seed = kDefaultSeed;
};

void add_common(CLI::App* app, Common& c, bool input_required = true) {
  auto* in = app->add_option("--input", c.input, "Input file");
  if (input_required) in->required();
  app->add_option("--output", c.output, "Primary output file")->required();
  app->add_option("--report", c.report, "JSON report (default: <output stem>.report.json)");
  app->add_option("--seed", c.seed, "Random seed")->default_val(kDefaultSeed);
}

fs::path report_path(const Common& c) {
  if (!c.report.empty()) return c.report;
  const fs::path out(c.output);
  return out.parent_path() / (out.stem().string() + ".report.json");
}

Json report_header(const std::string& command, std::uint64_t seed) {
  return Json{{"schema_version", kSchemaVersion}, {"command", command}, {"seed", seed}};
}

class CsvWriter {
public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    require(out_.good(), "cannot write '" + path.string() + "'");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_double(values[i]);
    out_ << '\n';
  }

private:
  std::ofstream out_;
};

std::vector<std::string> column_names(const char* prefix, Index n, const char* suffix = "") {
  std::vector<std::string> names;
  for (Index k = 0; k < n; ++k) names.push_back(prefix + std::to_string(k) + suffix);
  return names;
}

std::vector<Index> parse_sizes(const std::string& text) {
  std::vector<Index> sizes;
  std::stringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    try {
      const long v = std::stol(tok);
      require(v >= 1, "");
      sizes.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError("layer list: '" + tok + "' is not a positive integer");
    }
  }
  return sizes;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// Timing is kept out of the written artifacts so repeated runs stay byte-identical.
void print_timing(const std::string& command, const Timer& t) {
  std::cerr << command << ": finished in " << t.seconds() << " s\n";
}

struct OptimizerFlags {
  std::string kind = "adam";
  double eta = 1e-3, beta = 0.9, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Index batch = 32;
  int epochs = 100;

  void add(CLI::App* app) {
    app->add_option("--optimizer", kind, "gd | momentum | rmsprop | adam")->default_val(kind);
    app->add_option("--eta", eta, "Learning rate")->default_val(eta);
    app->add_option("--beta", beta, "Momentum / RMSprop decay")->default_val(beta);
    app->add_option("--beta1", beta1, "Adam first-moment decay")->default_val(beta1);
    app->add_option("--beta2", beta2, "Adam second-moment decay")->default_val(beta2);
    app->add_option("--eps", eps, "RMSprop / Adam epsilon")->default_val(eps);
    app->add_option("--batch", batch, "Mini-batch size")->default_val(batch);
    app->add_option("--epochs", epochs, "Training epochs")->default_val(epochs);
  }
  OptimizerState make() const { return make_optimizer({kind, eta, beta, beta1, beta2, eps}); }
  BatchSchedule schedule(std::uint64_t seed) const { return {batch, epochs, seed}; }
  Json to_json() const {
    return Json{{"kind", kind}, {"eta", eta},   {"beta", beta},     {"beta1", beta1},
                {"beta2", beta2}, {"eps", eps}, {"batch", batch}, {"epochs", epochs}};
  }
};

void write_history(const std::string& path, const TrainResult& r) {
  if (path.empty()) return;
  CsvWriter csv(path, {"epoch", "loss"});
  csv.row({0.0, r.initial_loss});
  for (std::size_t e = 0; e < r.loss_history.size(); ++e)
    csv.row({static_cast<double>(e + 1), r.loss_history[e]});
}

Json train_json(const TrainResult& r) {
  return Json{{"initial_loss", r.initial_loss},
              {"final_loss", r.loss_history.empty() ? r.initial_loss : r.loss_history.back()},
              {"epochs_run", r.loss_history.size()},
              {"optimizer_steps", r.steps},
              {"diverged", r.diverged}};
}

// ---------------------------------------------------------------- gen-data

struct GenData {
  Common c;
  Index n = 60;
};

int gen_data(const GenData& g) {
  const auto synth = generate_synthetic(g.n, g.c.seed);
  save_csv(g.c.output, synth.data);
  Json r = report_header("gen-data", g.c.seed);
  r["rows"] = g.n;
  r["outlier_rows"] = synth.outlier_rows;
  write_json(report_path(g.c), r);
  return 0;
}

// --------------------------------------------------------------------- fit

struct Fit {
  Common c;
  std::string model = "ridge";
  int degree = 3;
  Index rbf_centers = 0;
  double rbf_shape = 0.0;
  double alpha = 0.0;
  std::string kernel = "gaussian";
  double gamma = 1.0;
  int kernel_degree = 2;
  double kernel_offset = 1.0;
  double noise = 0.0;
  std::string hidden = "16";
  std::string activation = "tanh";
  std::string loss;
  std::string sigma;
  int max_iter = 100000;
  double tol = 1e-10;
  std::string history;
  OptimizerFlags opt;
};

BasisSpec fit_basis(const Fit& f, const Dataset& d) {
  if (f.rbf_centers == 0) return PolynomialBasis{f.degree};
  require(d.input_dim() == 1, "fit: RBF bases from --rbf-centers need a single input column");
  const double lo = d.inputs().minCoeff(), hi = d.inputs().maxCoeff();
  auto basis = equispaced_rbf_basis(lo, hi, f.rbf_centers, 1.0);
  const double shape = f.rbf_shape > 0.0 ? f.rbf_shape : default_rbf_shape(basis.centers);
  basis.shapes.setConstant(shape);
  return basis;
}

KernelSpec fit_kernel(const Fit& f) {
  KernelSpec k;
  if (f.kernel == "gaussian") k = GaussianKernel{f.gamma};
  else if (f.kernel == "linear") k = LinearKernel{};
  else if (f.kernel == "polynomial") k = PolynomialKernel{f.kernel_degree, f.kernel_offset};
  else throw ValidationError("fit: unknown kernel '" + f.kernel + "' (gaussian | linear | polynomial)");
  validate_kernel(k);
  return k;
}

LossSpec fit_loss(const Fit& f, const Dataset& d) {
  LossSpec loss = f.loss.empty() ? LossSpec{} : parse_loss(f.loss);
  if (!f.sigma.empty()) {
    auto* w = std::get_if<WeightedMseLoss>(&loss.data);
    require(w != nullptr, "fit: --sigma only applies to --loss wmse");
    const Dataset s = load_csv(f.sigma);
    require(s.rows() == d.rows() && s.input_dim() == d.rows(),
            "fit: --sigma must hold an n_p x n_p matrix in columns x0..x{n_p-1}");
    w->sigma = s.inputs();
  }
  loss.validate();
  return loss;
}

int fit(const Fit& f) {
  const Timer timer;
  const Dataset d = load_csv(f.c.input);
  require(!d.empty(), "fit: '" + f.c.input + "' has no data rows");
  require(d.output_dim() >= 1, "fit: '" + f.c.input + "' has no y columns");
  const bool iterative = f.model == "mlp" || f.model == "linear";
  require(iterative || (f.loss.empty() && f.sigma.empty()),
          "fit: --loss applies to the mlp and linear models only");

  Json report = report_header("fit", f.c.seed);
  report["model"] = f.model;
  report["rows"] = d.rows();
  AnyModel model;
  Eigen::MatrixXd fitted;

  if (f.model == "ridge") {
    auto m = ridge_fit(d, fit_basis(f, d), f.alpha);
    report["alpha"] = f.alpha;
    report["condition_estimate"] = m.info.condition_estimate;
    report["ill_conditioned"] = m.info.ill_conditioned;
    if (m.info.ill_conditioned)
      std::cerr << "warning: normal matrix condition estimate " << m.info.condition_estimate << '\n';
    fitted = predict(m, d.inputs());
    model = std::move(m);
  } else if (f.model == "lasso") {
    auto m = lasso_fit(d, fit_basis(f, d), f.alpha, f.max_iter, f.tol);
    report["alpha"] = f.alpha;
    report["iterations"] = m.info.iterations;
    report["converged"] = m.info.converged;
    report["objective"] = m.info.objective_history.empty() ? 0.0 : m.info.objective_history.back();
    fitted = predict(m, d.inputs());
    model = std::move(m);
  } else if (f.model == "krr") {
    auto m = krr_fit(d, fit_kernel(f), f.alpha);
    report["alpha"] = f.alpha;
    report["jitter"] = m.jitter;
    fitted = krr_predict(m, d.inputs());
    model = std::move(m);
  } else if (f.model == "gpr") {
    auto m = gpr_fit(d, fit_kernel(f), f.noise);
    report["noise_variance"] = f.noise;
    report["jitter"] = m.jitter;
    fitted = gpr_predict(m, d.inputs()).mean;
    model = std::move(m);
  } else if (f.model == "linear") {
    const LossSpec loss = fit_loss(f, d);
    const BasisSpec basis = fit_basis(f, d);
    LinearModel init{basis, Eigen::MatrixXd::Zero(basis_size(basis, d.input_dim()), d.output_dim()), {}};
    OptimizerState opt = f.opt.make();
    auto r = train_linear(init, d, loss, opt, f.opt.schedule(f.c.seed));
    report["loss"] = loss_name(loss);
    report["optimizer"] = f.opt.to_json();
    report["training"] = train_json(r.train);
    write_history(f.history, r.train);
    fitted = predict(r.model, d.inputs());
    model = std::move(r.model);
  } else if (f.model == "mlp") {
    const LossSpec loss = fit_loss(f, d);
    std::vector<Index> sizes{d.input_dim()};
    for (Index s : parse_sizes(f.hidden)) sizes.push_back(s);
    sizes.push_back(d.output_dim());
    std::vector<Activation> acts(sizes.size() - 1, parse_activation(f.activation));
    acts.back() = Activation::Identity;
    OptimizerState opt = f.opt.make();
    auto r = train_mlp(Mlp::random(sizes, acts, f.c.seed), d, loss, opt, f.opt.schedule(f.c.seed));
    report["loss"] = loss_name(loss);
    report["layer_sizes"] = sizes;
    report["optimizer"] = f.opt.to_json();
    report["training"] = train_json(r.train);
    write_history(f.history, r.train);
    if (r.train.diverged) std::cerr << "warning: training diverged; kept the last finite parameters\n";
    fitted = evaluate(r.net, d.inputs());
    model = std::move(r.net);
  } else {
    throw ValidationError("fit: unknown model '" + f.model + "' (ridge | lasso | krr | gpr | linear | mlp)");
  }

  report["train_mse"] = mse(d.targets(), fitted);
  write_json(f.c.output, model_to_json(model, f.c.seed));
  write_json(report_path(f.c), report);
  print_timing("fit", timer);
  return 0;
}

// ----------------------------------------------------------------- predict

struct Predict {
  Common c;
  std::string model;
};

int predict_cmd(const Predict& p) {
  const AnyModel model = model_from_json(read_json(p.model));
  const Dataset q = load_csv(p.c.input);
  const Eigen::MatrixXd& x = q.inputs();

  Eigen::MatrixXd mean;
  std::optional<Eigen::MatrixXd> unc;
  Index expected_dim = -1;
  if (const auto* m = std::get_if<LinearModel>(&model)) {
    if (std::holds_alternative<PolynomialBasis>(m->basis)) expected_dim = 1;
    else if (const auto* r = std::get_if<GaussianRbfBasis>(&m->basis)) expected_dim = r->centers.cols();
    else expected_dim = m->weights.rows();
  } else if (const auto* m = std::get_if<KrrModel>(&model)) {
    expected_dim = m->train_inputs.cols();
  } else if (const auto* m = std::get_if<GprModel>(&model)) {
    expected_dim = m->train_inputs.cols();
  } else if (const auto* m = std::get_if<Mlp>(&model)) {
    expected_dim = m->input_dim();
  } else {
    expected_dim = 1;
  }
  require(x.cols() == expected_dim, "predict: model expects " + std::to_string(expected_dim) +
                                        " input columns, query has " + std::to_string(x.cols()));

  if (const auto* m = std::get_if<LinearModel>(&model)) {
    mean = predict(*m, x);
  } else if (const auto* m = std::get_if<KrrModel>(&model)) {
    mean = krr_predict(*m, x);
  } else if (const auto* m = std::get_if<GprModel>(&model)) {
    const auto post = gpr_predict(*m, x);
    mean = post.mean;
    const Eigen::VectorXd band = kBandZ * post.variance().cwiseMax(0.0).cwiseSqrt();
    unc = band.replicate(1, mean.cols());
  } else if (const auto* m = std::get_if<Mlp>(&model)) {
    mean = evaluate(*m, x);
  } else {
    const auto& e = std::get<EnsembleModel>(model);
    const auto pred = ensemble_predict(x, e.weight_population, e.j_in_mean,
                                       [](const Eigen::MatrixXd& xq, const Eigen::VectorXd& w) {
                                         return polyval(w, xq.col(0));
                                       });
    mean = pred.mean;
    unc = Eigen::MatrixXd(kBandZ * pred.uncertainty);
  }

  auto header = column_names("x", x.cols());
  for (const auto& n : column_names("y", mean.cols(), "_mean")) header.push_back(n);
  if (unc)
    for (const auto& n : column_names("y", mean.cols(), "_unc")) header.push_back(n);
  CsvWriter csv(p.c.output, header);
  for (Index i = 0; i < x.rows(); ++i) {
    std::vector<double> row;
    for (Index k = 0; k < x.cols(); ++k) row.push_back(x(i, k));
    for (Index k = 0; k < mean.cols(); ++k) row.push_back(mean(i, k));
    if (unc)
      for (Index k = 0; k < mean.cols(); ++k) row.push_back((*unc)(i, k));
    csv.row(row);
  }
  return 0;
}

// ---------------------------------------------------------------------- cv

struct Cv {
  Common c;
  int degree = 3;
  double alpha = 0.0;
  Index k = 5;
  bool no_shuffle = false;
};

int cv_cmd(const Cv& v) {
  const Timer timer;
  const Dataset d = load_csv(v.c.input);
  require(d.input_dim() == 1, "cv: polynomial models need a single input column");
  const auto report = kfold_cv(d, polynomial_fitter(v.degree, v.alpha), v.k, v.c.seed, !v.no_shuffle);
  CsvWriter csv(v.c.output, {"fold", "test_rows", "J_i", "J_o"});
  for (std::size_t f = 0; f < report.folds.size(); ++f)
    csv.row({static_cast<double>(f), static_cast<double>(report.folds[f].test.size()),
             report.per_fold_in_sample_mse[f], report.per_fold_mse[f]});
  Json r = report_header("cv", v.c.seed);
  r["degree"] = v.degree;
  r["alpha"] = v.alpha;
  r["K"] = v.k;
  r["shuffle"] = !v.no_shuffle;
  r["mean"] = report.mean;
  r["std"] = report.std;
  write_json(report_path(v.c), r);
  print_timing("cv", timer);
  return 0;
}

// --------------------------------------------------------------- bootstrap

struct Bootstrap {
  Common c;
  int degree = 3;
  double alpha = 0.0;
  Index members = 100;
  double test_fraction = 0.2;
  std::string mode = "split";
  std::string model_output;
};

int bootstrap_cmd(const Bootstrap& b) {
  const Timer timer;
  const Dataset d = load_csv(b.c.input);
  require(d.input_dim() == 1, "bootstrap: polynomial models need a single input column");
  require(b.mode == "split" || b.mode == "replacement", "bootstrap: --mode must be split or replacement");
  const auto mode = b.mode == "split" ? ResampleMode::Split : ResampleMode::Replacement;
  const auto e = bootstrap_ensemble(d, polynomial_fitter(b.degree, b.alpha), b.members, b.test_fraction,
                                    mode, b.c.seed);

  CsvWriter csv(b.c.output, {"member", "J_i", "J_o"});
  for (Index m = 0; m < b.members; ++m)
    csv.row({static_cast<double>(m), e.in_sample_mse(m), e.out_sample_mse(m)});

  auto mean_std = [](const Eigen::VectorXd& v) {
    const double mean = v.mean();
    return std::pair{mean, std::sqrt((v.array() - mean).square().mean())};
  };
  const auto [jo_mean, jo_std] = mean_std(e.out_sample_mse);
  const auto [ji_mean, ji_std] = mean_std(e.in_sample_mse);
  Json r = report_header("bootstrap", b.c.seed);
  r["degree"] = b.degree;
  r["alpha"] = b.alpha;
  r["mode"] = b.mode;
  r["test_fraction"] = b.test_fraction;
  r["n_E"] = b.members;
  r["mean"] = jo_mean;
  r["std"] = jo_std;
  r["J_i_mean"] = ji_mean;
  r["J_i_std"] = ji_std;
  write_json(report_path(b.c), r);

  if (!b.model_output.empty())
    write_json(b.model_output, model_to_json(EnsembleModel{b.degree, e.weight_population, ji_mean}, b.c.seed));
  print_timing("bootstrap", timer);
  return 0;
}

// --------------------------------------------------------------- pde-solve

struct PdeSolve {
  Common c;
  std::string method = "constrained";
  std::string data;
  std::string residuals;
  std::optional<double> alpha_phys;
  std::optional<double> boundary_weight;
  std::optional<double> alpha_reg;
  std::string hidden = "20,20";
  std::string activation = "tanh";
  double fd_step = 1e-3;
  std::string history;
  OptimizerFlags opt;
};

int pde_solve(const PdeSolve& s) {
  const Timer timer;
  PdeSetup setup = pde_setup_from_json(read_json(s.c.input));
  const CollocationProblem& problem = setup.problem;
  if (s.alpha_reg) setup.alpha_reg = *s.alpha_reg;
  std::optional<Dataset> data;
  if (!s.data.empty()) data = load_csv(s.data);

  Json r = report_header("pde-solve", s.c.seed);
  r["method"] = s.method;
  r["basis_count"] = setup.basis.centers.rows();
  r["collocation_count"] = problem.collocation.size();

  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(kSolutionSamples, problem.x_lo, problem.x_hi);
  Eigen::VectorXd u, interior, boundary;

  if (s.method == "constrained" || s.method == "penalized") {
    Eigen::VectorXd w;
    r["alpha_reg"] = setup.alpha_reg;
    if (s.method == "constrained") {
      const auto sol = constrained_solve(problem, setup.basis, setup.alpha_reg, data);
      w = sol.weights;
      r["kkt_rcond"] = sol.rcond;
      r["kkt_jitter"] = sol.jitter;
      r["stationarity_residual"] = sol.stationarity_residual;
      r["multipliers"] = vector_to_json(sol.multipliers);
    } else {
      PhysicsCost cost{s.alpha_phys.value_or(1.0), s.boundary_weight, problem};
      w = penalized_fit(data, cost, setup.basis, setup.alpha_reg).weights.col(0);
      r["alpha_phys"] = cost.alpha_phys;
      if (s.boundary_weight) r["boundary_weight"] = *s.boundary_weight;
    }
    u = feature_matrix(setup.basis, grid) * w;
    interior = pde_residual(problem, setup.basis, w);
    boundary = boundary_residual(problem, setup.basis, w);
    r["weights"] = vector_to_json(w);
  } else if (s.method == "pinn") {
    std::vector<Index> sizes{1};
    for (Index n : parse_sizes(s.hidden)) sizes.push_back(n);
    sizes.push_back(1);
    std::vector<Activation> acts(sizes.size() - 1, parse_activation(s.activation));
    acts.back() = Activation::Identity;
    const double alpha_phys = s.alpha_phys.value_or(1.0);
    OptimizerState opt = s.opt.make();
    const auto res = pinn_train(Mlp::random(sizes, acts, s.c.seed), problem, data, alpha_phys, opt,
                                s.opt.schedule(s.c.seed), s.fd_step);
    write_history(s.history, res.train);
    r["alpha_phys"] = alpha_phys;
    r["layer_sizes"] = sizes;
    r["optimizer"] = s.opt.to_json();
    r["training"] = train_json(res.train);
    u = evaluate(res.net, grid).col(0);
    const auto nd = fd_derivatives(res.net, problem.collocation, s.fd_step);
    const Eigen::VectorXd& xc = problem.collocation;
    interior = problem.a(xc).cwiseProduct(nd.d2u) + problem.b(xc).cwiseProduct(nd.du) +
               problem.c(xc).cwiseProduct(nd.u) - problem.g(xc);
    Eigen::VectorXd xb(static_cast<Index>(problem.boundary.size()));
    for (Index i = 0; i < xb.size(); ++i) xb(i) = problem.boundary[static_cast<std::size_t>(i)].location;
    const auto bd = fd_derivatives(res.net, xb, s.fd_step);
    boundary.resize(xb.size());
    for (Index i = 0; i < xb.size(); ++i) {
      const auto& bc = problem.boundary[static_cast<std::size_t>(i)];
      boundary(i) = (bc.kind == BoundaryKind::Dirichlet ? bd.u(i) : bd.du(i)) - bc.value;
    }
  } else {
    throw ValidationError("pde-solve: unknown method '" + s.method + "' (constrained | penalized | pinn)");
  }
  require(u.allFinite(), "pde-solve: solution is not finite");

  std::vector<std::string> header{"x", "u"};
  if (problem.exact) {
    header.push_back("u_exact");
    header.push_back("abs_error");
  }
  CsvWriter csv(s.c.output, header);
  double linf = 0.0;
  for (Index i = 0; i < grid.size(); ++i) {
    std::vector<double> row{grid(i), u(i)};
    if (problem.exact) {
      const double ue = (*problem.exact)(grid(i));
      row.push_back(ue);
      row.push_back(std::abs(u(i) - ue));
      linf = std::max(linf, std::abs(u(i) - ue));
    }
    csv.row(row);
  }
  if (!s.residuals.empty()) {
    CsvWriter res(s.residuals, {"x", "residual"});
    for (Index i = 0; i < interior.size(); ++i) res.row({problem.collocation(i), interior(i)});
  }

  r["pde_residual_rms"] = interior.size() ? std::sqrt(interior.squaredNorm() / static_cast<double>(interior.size())) : 0.0;
  r["pde_residual_max"] = interior.size() ? interior.cwiseAbs().maxCoeff() : 0.0;
  r["boundary_residual_max"] = boundary.size() ? boundary.cwiseAbs().maxCoeff() : 0.0;
  if (problem.exact) r["linf_error"] = linf;
  write_json(report_path(s.c), r);
  print_timing("pde-solve", timer);
  return 0;
}

// ------------------------------------------------------------------ symreg

struct Symreg {
  Common c;
  std::string expression;
  std::string primitives = "+,*,x,const";
  GpConfig gp;
};

int symreg_cmd(Symreg s) {
  const Timer timer;
  const Dataset d = load_csv(s.c.input);
  s.gp.primitives = parse_primitives(s.primitives, static_cast<int>(d.input_dim()));
  s.gp.seed = s.c.seed;
  const auto result = evolve(d, s.gp);

  CsvWriter csv(s.c.output, {"generation", "best_fitness", "mean_fitness", "best_size"});
  for (const auto& g : result.history)
    csv.row({static_cast<double>(g.generation), g.best_fitness, g.mean_fitness,
             static_cast<double>(g.best_size)});

  const fs::path expr_path = s.expression.empty()
                                 ? fs::path(s.c.output).parent_path() / (fs::path(s.c.output).stem().string() + ".expr.txt")
                                 : fs::path(s.expression);
  std::ofstream expr(expr_path);
  require(expr.good(), "cannot write '" + expr_path.string() + "'");
  expr << to_prefix(result.best) << '\n' << to_infix(result.best) << '\n';

  Json r = report_header("symreg", s.c.seed);
  r["primitives"] = s.primitives;
  r["population"] = s.gp.population_size;
  r["generations"] = s.gp.generations;
  r["max_depth"] = s.gp.max_depth;
  r["best_fitness"] = result.best_fitness;
  r["best_prefix"] = to_prefix(result.best);
  r["best_infix"] = to_infix(result.best);
  r["best_depth"] = tree_depth(result.best);
  write_json(report_path(s.c), r);
  print_timing("symreg", timer);
  return 0;
}

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Regression and physics-constrained fitting toolkit", "regkit"};
  app.require_subcommand(1);

  GenData gd;
  auto* gen = app.add_subcommand("gen-data", "Write the synthetic gapped, noisy 1-D dataset");
  add_common(gen, gd.c, false);
  gen->add_option("--n", gd.n, "Number of samples")->default_val(gd.n);

  Fit ft;
  auto* fit_app = app.add_subcommand("fit", "Fit a model and write it as JSON");
  add_common(fit_app, ft.c);
  fit_app->add_option("--model", ft.model, "ridge | lasso | krr | gpr | linear | mlp")->default_val(ft.model);
  fit_app->add_option("--degree", ft.degree, "Polynomial degree")->default_val(ft.degree);
  fit_app->add_option("--rbf-centers", ft.rbf_centers, "Use this many equispaced Gaussian RBFs instead");
  fit_app->add_option("--rbf-shape", ft.rbf_shape, "RBF shape factor (default from center spacing)");
  fit_app->add_option("--alpha", ft.alpha, "Ridge / lasso / KRR regularizer")->default_val(ft.alpha);
  fit_app->add_option("--kernel", ft.kernel, "gaussian | linear | polynomial")->default_val(ft.kernel);
  fit_app->add_option("--gamma", ft.gamma, "Gaussian kernel gamma")->default_val(ft.gamma);
  fit_app->add_option("--kernel-degree", ft.kernel_degree, "Polynomial kernel degree")->default_val(ft.kernel_degree);
  fit_app->add_option("--kernel-offset", ft.kernel_offset, "Polynomial kernel offset")->default_val(ft.kernel_offset);
  fit_app->add_option("--noise", ft.noise, "GPR noise variance")->default_val(ft.noise);
  fit_app->add_option("--hidden", ft.hidden, "MLP hidden layer sizes, comma separated")->default_val(ft.hidden);
  fit_app->add_option("--activation", ft.activation, "tanh | relu | identity")->default_val(ft.activation);
  fit_app->add_option("--loss", ft.loss, "mse | wmse | huber:d | eps:e | ridge:a | lasso:a");
  fit_app->add_option("--sigma", ft.sigma, "CSV holding the wmse covariance (columns x0..)");
  fit_app->add_option("--max-iter", ft.max_iter, "Lasso iteration cap")->default_val(ft.max_iter);
  fit_app->add_option("--tol", ft.tol, "Lasso tolerance")->default_val(ft.tol);
  fit_app->add_option("--history", ft.history, "CSV of the loss per epoch");
  ft.opt.add(fit_app);

  Predict pr;
  auto* pred = app.add_subcommand("predict", "Evaluate a saved model on query inputs");
  add_common(pred, pr.c);
  pred->add_option("--model", pr.model, "Model JSON written by fit or bootstrap")->required();

  Cv cv;
  auto* cv_app = app.add_subcommand("cv", "K-fold cross-validation of a polynomial model");
  add_common(cv_app, cv.c);
  cv_app->add_option("--degree", cv.degree, "Polynomial degree")->default_val(cv.degree);
  cv_app->add_option("--alpha", cv.alpha, "Ridge regularizer")->default_val(cv.alpha);
  cv_app->add_option("--k", cv.k, "Number of folds")->default_val(cv.k);
  cv_app->add_flag("--no-shuffle", cv.no_shuffle, "Keep rows in file order");

  Bootstrap bs;
  auto* bs_app = app.add_subcommand("bootstrap", "Bootstrap ensemble of polynomial models");
  add_common(bs_app, bs.c);
  bs_app->add_option("--degree", bs.degree, "Polynomial degree")->default_val(bs.degree);
  bs_app->add_option("--alpha", bs.alpha, "Ridge regularizer")->default_val(bs.alpha);
  bs_app->add_option("--members", bs.members, "Ensemble size")->default_val(bs.members);
  bs_app->add_option("--test-fraction", bs.test_fraction, "Held-out fraction")->default_val(bs.test_fraction);
  bs_app->add_option("--mode", bs.mode, "split | replacement")->default_val(bs.mode);
  bs_app->add_option("--model-output", bs.model_output, "Write the ensemble as a model JSON");

  PdeSolve ps;
  auto* pde = app.add_subcommand("pde-solve", "Solve a 1-D linear boundary value problem");
  add_common(pde, ps.c);
  pde->add_option("--method", ps.method, "constrained | penalized | pinn")->default_val(ps.method);
  pde->add_option("--data", ps.data, "Optional observations CSV");
  pde->add_option("--residuals", ps.residuals, "CSV of interior residuals at the collocation points");
  pde->add_option("--alpha-phys", ps.alpha_phys, "Physics penalty weight (penalized, pinn; default 1)");
  pde->add_option("--boundary-weight", ps.boundary_weight, "Boundary penalty weight (penalized)");
  pde->add_option("--alpha-reg", ps.alpha_reg, "Override the problem's weight regularizer");
  pde->add_option("--hidden", ps.hidden, "PINN hidden layer sizes")->default_val(ps.hidden);
  pde->add_option("--activation", ps.activation, "PINN activation")->default_val(ps.activation);
  pde->add_option("--fd-step", ps.fd_step, "PINN finite-difference step")->default_val(ps.fd_step);
  pde->add_option("--history", ps.history, "CSV of the PINN cost per epoch");
  ps.opt.add(pde);

  Symreg sr;
  auto* sym = app.add_subcommand("symreg", "Genetic-programming symbolic regression");
  add_common(sym, sr.c);
  sym->add_option("--expression", sr.expression, "Best expression file (default: <output stem>.expr.txt)");
  sym->add_option("--primitives", sr.primitives, "Comma list of + - * / sin cos exp x const")->default_val(sr.primitives);
  sym->add_option("--population", sr.gp.population_size, "Population size")->default_val(sr.gp.population_size);
  sym->add_option("--generations", sr.gp.generations, "Generations")->default_val(sr.gp.generations);
  sym->add_option("--max-depth", sr.gp.max_depth, "Maximum tree depth")->default_val(sr.gp.max_depth);
  sym->add_option("--tournament", sr.gp.tournament_size, "Tournament size")->default_val(sr.gp.tournament_size);
  sym->add_option("--elitism", sr.gp.elitism_rate, "Elitism rate")->default_val(sr.gp.elitism_rate);
  sym->add_option("--replication", sr.gp.replication_rate, "Replication rate")->default_val(sr.gp.replication_rate);
  sym->add_option("--crossover", sr.gp.crossover_rate, "Crossover rate")->default_val(sr.gp.crossover_rate);
  sym->add_option("--mutation", sr.gp.mutation_rate, "Mutation rate")->default_val(sr.gp.mutation_rate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*gen) return gen_data(gd);
  if (*fit_app) return fit(ft);
  if (*pred) return predict_cmd(pr);
  if (*cv_app) return cv_cmd(cv);
  if (*bs_app) return bootstrap_cmd(bs);
  if (*pde) return pde_solve(ps);
  return symreg_cmd(sr);
}

} // namespace

int run(int argc, const char* const* argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON document: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"regkit"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace regkit::cli
