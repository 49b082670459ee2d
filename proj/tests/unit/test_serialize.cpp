#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "regkit/errors.hpp"
#include "regkit/serialize.hpp"
#include "support.hpp"

#include <cmath>

using namespace regkit;

namespace {

Dataset sample_data(unsigned seed, Index n = 15) {
  const Eigen::MatrixXd x = testing::random_matrix(n, 1, seed);
  return Dataset(x, Eigen::MatrixXd((3.0 * x.array()).sin()));
}

AnyModel round_trip(const AnyModel& m, testing::TempDir& dir) {
  write_json(dir / "m.json", model_to_json(m, 7));
  return model_from_json(read_json(dir / "m.json"));
}

} // namespace

TEST_CASE("matrices and vectors") {
  const Eigen::MatrixXd m = testing::random_matrix(3, 4, 2);
  const Json j = matrix_to_json(m);
  CHECK(j.size() == 3);
  CHECK(j[0].size() == 4);
  CHECK(matrix_from_json(j, "m") == m);
  const Eigen::VectorXd v = testing::random_matrix(5, 1, 3);
  CHECK(vector_from_json(vector_to_json(v), "v") == v);
  CHECK_THROWS_AS(matrix_from_json(Json::parse("[[1,2],[3]]"), "m"), ValidationError);
  CHECK_THROWS_AS(vector_from_json(Json::parse("[1,\"a\"]"), "v"), ValidationError);
}

TEST_CASE("models round-trip with identical predictions") {
  testing::TempDir dir;
  const Dataset d = sample_data(1);
  const Eigen::MatrixXd q = testing::random_matrix(9, 1, 4);

  SUBCASE("ridge on polynomial features") {
    const auto m = ridge_fit(d, PolynomialBasis{4}, 1e-3);
    const auto back = std::get<LinearModel>(round_trip(m, dir));
    CHECK(predict(back, q) == predict(m, q));
  }
  SUBCASE("ridge on rbf features") {
    const auto m = ridge_fit(d, equispaced_rbf_basis(-1, 1, 6, 2.5), 1e-3);
    const auto back = std::get<LinearModel>(round_trip(m, dir));
    CHECK(predict(back, q) == predict(m, q));
  }
  SUBCASE("krr with each kernel") {
    for (const KernelSpec& k : {KernelSpec{GaussianKernel{2.0}}, KernelSpec{LinearKernel{}},
                                KernelSpec{PolynomialKernel{3, 0.5}}}) {
      const auto m = krr_fit(d, k, 0.1);
      const auto back = std::get<KrrModel>(round_trip(m, dir));
      CHECK(krr_predict(back, q) == krr_predict(m, q));
    }
  }
  SUBCASE("gpr") {
    const auto m = gpr_fit(d, GaussianKernel{1.5}, 0.01);
    const auto back = std::get<GprModel>(round_trip(m, dir));
    const auto a = gpr_predict(m, q), b = gpr_predict(back, q);
    CHECK(a.mean == b.mean);
    CHECK(a.covariance == b.covariance);
  }
  SUBCASE("mlp") {
    const Mlp m = Mlp::random({1, 5, 3, 1}, {Activation::Relu, Activation::Tanh, Activation::Identity}, 3);
    const Mlp back = std::get<Mlp>(round_trip(m, dir));
    CHECK(back.layer_sizes() == m.layer_sizes());
    CHECK(back.activations() == m.activations());
    CHECK(evaluate(back, q) == evaluate(m, q));
  }
  SUBCASE("ensemble") {
    EnsembleModel e{2, testing::random_matrix(3, 10, 5), 0.125};
    const auto back = std::get<EnsembleModel>(round_trip(e, dir));
    CHECK(back.degree == 2);
    CHECK(back.j_in_mean == 0.125);
    CHECK(back.weight_population == e.weight_population);
  }
}

TEST_CASE("model documents") {
  const Json j = model_to_json(ridge_fit(sample_data(2), PolynomialBasis{2}, 0.0), 99);
  CHECK(j["schema_version"] == kSchemaVersion);
  CHECK(j["kind"] == "linear");
  CHECK(j["seed"] == 99);

  Json bad = j;
  bad["schema_version"] = 2;
  CHECK_THROWS_AS(model_from_json(bad), ValidationError);
  bad = j;
  bad["kind"] = "forest";
  CHECK_THROWS_AS(model_from_json(bad), ValidationError);
  bad = j;
  bad.erase("weights");
  CHECK_THROWS_AS(model_from_json(bad), ValidationError);
}

TEST_CASE("doubles survive the text round trip bit for bit") {
  testing::TempDir dir;
  Eigen::MatrixXd m(1, 4);
  m << 0.1, 1.0 / 3.0, 6.02214076e23, -std::nextafter(1.0, 2.0);
  write_json(dir / "x.json", Json{{"m", matrix_to_json(m)}});
  CHECK(matrix_from_json(read_json(dir / "x.json")["m"], "m") == m);
  CHECK(testing::read_text(dir / "x.json").back() == '\n');
}

TEST_CASE("scalar functions from json") {
  CHECK(function_from_json(Json(2.5))(10.0) == 2.5);
  const auto f = function_from_json(Json::parse(R"([{"type":"poly","coeffs":[1,0,-2]},
                                                    {"type":"sin","amplitude":2,"frequency":3}])"));
  CHECK(f(0.5) == doctest::Approx(0.25 - 2 + 2 * std::sin(1.5)));
  const auto round = function_from_json(to_json(f));
  CHECK(round(0.3) == f(0.3));
  CHECK_THROWS_AS(function_from_json(Json::parse(R"({"type":"tan"})")), ValidationError);
}

TEST_CASE("problem files") {
  const PdeSetup s = pde_setup_from_json(read_json(std::filesystem::path(REGKIT_TEST_DATA_DIR) / "poisson.json"));
  CHECK(s.problem.x_lo == 0.0);
  CHECK(s.problem.x_hi == 1.0);
  CHECK(s.problem.collocation.size() == 80);
  CHECK(s.basis.centers.rows() == 40);
  CHECK(s.basis.shapes(0) == 8.0);
  CHECK(s.alpha_reg == 1e-8);
  REQUIRE(s.problem.boundary.size() == 2);
  CHECK(s.problem.exact.has_value());
  CHECK((*s.problem.exact)(0.5) == doctest::Approx(1.0));

  const Json minimal = Json::parse(R"({"domain":[0,2],"g":1,
      "boundary":[{"location":0,"kind":"dirichlet","value":0},{"location":2,"kind":"neumann","value":1}],
      "basis":{"count":10}})");
  const PdeSetup m = pde_setup_from_json(minimal);
  CHECK(m.problem.collocation.size() == 20);
  CHECK(m.problem.boundary[1].kind == BoundaryKind::Neumann);
  CHECK(m.basis.shapes(0) == doctest::Approx(default_rbf_shape(m.basis.centers)));

  Json broken = minimal;
  broken["boundary"][0]["kind"] = "robin";
  CHECK_THROWS_AS(pde_setup_from_json(broken), ValidationError);
  broken = minimal;
  broken["domain"] = Json::parse("[1, 0]");
  CHECK_THROWS_AS(pde_setup_from_json(broken), ValidationError);
}

TEST_CASE("unreadable files") {
  testing::TempDir dir;
  CHECK_THROWS_AS(read_json(dir / "missing.json"), ValidationError);
  testing::write_text(dir / "bad.json", "{ nope");
  CHECK_THROWS_AS(read_json(dir / "bad.json"), ValidationError);
}
