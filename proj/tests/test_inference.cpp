#include <doctest.h>

#include <Eigen/QR>

#include "cgp/datasets.hpp"
#include "cgp/inference.hpp"
#include "helpers.hpp"

using namespace cgp;
using namespace testing;

namespace {

// Trained once. A short schedule on 40 samples: long runs let the interior
// training potentials drift (the log-det term rewards bunched inputs), which
// costs about 1e-2 in recovered interior potentials at 200k epochs.
TrainConfig toy_config() {
  TrainConfig c;
  c.epochs = 2000;
  return c;
}

const Dataset& toy_data() {
  static const Dataset d = generate(GeneratorConfig::toy_series(40, 0));
  return d;
}

const Surrogate& toy_model() {
  static const Surrogate s(train(toy_data().problem(), toy_config()));
  return s;
}

// Hand-built single-edge surrogate: 0 -> 1, both endpoints observed.
Surrogate one_edge(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, double log_ell, double log_noise) {
  TrainedSurrogate t;
  t.graph = build_graph({{0, 1}}, {O, O}, {O});
  t.encoding = Encoding::gradient;
  t.edges.push_back({log_ell, inputs, targets});
  t.log_noise_variance = log_noise;
  t.u_un_hat = Eigen::MatrixXd::Zero(0, inputs.rows());
  return Surrogate(t);
}

Eigen::RowVectorXd row(double v) { return Eigen::RowVectorXd::Constant(1, v); }

}  // namespace

TEST_CASE("predict_edge closed forms") {
  SUBCASE("single training point") {
    const double s2 = 0.3;
    const Surrogate m = one_edge(Eigen::MatrixXd::Constant(1, 1, 0.7), Eigen::VectorXd::Constant(1, 2.0), 0.0,
                                 std::log(s2));
    const EdgePrediction p = predict_edge(m, 0, row(0.7));
    CHECK(p.variance == doctest::Approx(s2 / (1.0 + s2)).epsilon(1e-12));
    CHECK(p.mean == doctest::Approx(2.0 / (1.0 + s2)).epsilon(1e-12));
  }
  SUBCASE("prior reversion far from the data") {
    Eigen::MatrixXd x(3, 1);
    x << -1, 0, 1;
    const Surrogate m = one_edge(x, Eigen::Vector3d(1, 2, 3), std::log(0.5), -6.0);
    const EdgePrediction p = predict_edge(m, 0, row(40.0));
    CHECK(p.variance == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(p.mean) < 1e-12);
  }
  SUBCASE("interpolation as the noise vanishes") {
    Eigen::MatrixXd x(3, 1);
    x << -1, 0, 1;
    const Eigen::Vector3d y(0.5, -0.2, 1.5);
    double prev = 1.0;
    for (double ln : {-4.0, -8.0, -12.0, -16.0}) {
      const Surrogate m = one_edge(x, y, 0.0, ln);
      const double err = std::abs(predict_edge(m, 0, row(0.0)).mean - y(1));
      CHECK(err < prev);
      prev = err;
    }
    CHECK(prev < 1e-5);
  }
  SUBCASE("unknown edge and wrong dimension") {
    const Surrogate m = one_edge(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1), 0.0, -2.0);
    CHECK_THROWS_AS(predict_edge(m, 1, row(0.0)), ValidationError);
    CHECK_THROWS_AS(predict_edge(m, -1, row(0.0)), ValidationError);
    CHECK_THROWS_AS(predict_edge(m, 0, Eigen::RowVectorXd::Zero(2)), ValidationError);
  }
}

TEST_CASE("posterior variance does not grow as training points are added") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd x = random_matrix(8, 1, rng, -2.0, 2.0);
    const Eigen::VectorXd y = random_matrix(8, 1, rng);
    const Eigen::RowVectorXd q = random_matrix(1, 1, rng, -3.0, 3.0);
    double prev = 1.0 + 1e-12;
    for (Index n = 1; n <= 8; ++n) {
      const Surrogate m = one_edge(x.topRows(n), y.head(n), 0.2, -3.0);
      const double v = predict_edge(m, 0, q).variance;
      CHECK(v >= 0.0);
      CHECK(v <= prev + 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("bound ingredients") {
  CHECK(gaussian_tail_factor(0.05) == doctest::Approx(2.71620).epsilon(1e-5));
  CHECK_THROWS_AS(gaussian_tail_factor(0.0), ConfigError);
  CHECK_THROWS_AS(gaussian_tail_factor(1.0), ConfigError);

  const BoundReport b = compose_bounds(0.2, 0.9, 3.0, 0.01, 0.05);
  CHECK(b.mse_bound == doctest::Approx(0.04 * 9.0 + 0.01 * 0.81).epsilon(1e-14));
  CHECK(b.pointwise_bound == doctest::Approx(0.2 * 3.0 + 0.1 * 0.9 * 2.716203).epsilon(1e-6));
  double prev = -1.0;
  for (double r : {0.0, 0.5, 1.0, 4.0}) {
    const double v = compose_bounds(0.2, 0.9, r, 0.01, 0.05).pointwise_bound;
    CHECK(v >= prev);
    prev = v;
  }
  prev = -1.0;
  for (double p : {0.0, 0.5, 1.0, 4.0}) {
    const BoundReport r = compose_bounds(0.2, p, 1.0, 0.01, 0.05);
    CHECK(r.pointwise_bound >= prev);
    prev = r.pointwise_bound;
  }

  // At a training input the bound collapses with the noise.
  Eigen::MatrixXd x(3, 1);
  x << -1, 0, 1;
  prev = 1e300;
  for (double ln : {-6.0, -12.0, -18.0, -24.0}) {
    const Surrogate m = one_edge(x, Eigen::Vector3d(0.5, -0.2, 1.5), 0.0, ln);
    const BoundReport r = error_bounds(m, 0, row(0.0), 0.05);
    CHECK(r.sigma_x >= 0.0);
    CHECK(r.pointwise_bound < prev);
    prev = r.pointwise_bound;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("reproducing-kernel lemma inequality") {
  // k^T A^-1 (A - s2 I) A^-1 k <= k^T A^-1 k for A = K + s2 I.
  std::mt19937_64 rng(99);
  for (int t = 0; t < 1000; ++t) {
    const Index n = 1 + static_cast<Index>(rng() % 8);
    const Eigen::MatrixXd x = random_matrix(n, 1, rng, -2.0, 2.0);
    const double ell = std::exp(random_matrix(1, 1, rng, -2.0, 2.0)(0));
    const double s2 = std::exp(random_matrix(1, 1, rng, -8.0, 1.0)(0));
    const Eigen::MatrixXd a = kernel_matrix(x, ell, s2);
    const Eigen::RowVectorXd q = random_matrix(1, 1, rng, -3.0, 3.0);
    Eigen::VectorXd k(n);
    for (Index i = 0; i < n; ++i) k(i) = rbf(q, x.row(i), ell);
    const Eigen::VectorXd ak = a.ldlt().solve(k);
    const Eigen::MatrixXd km = a - s2 * Eigen::MatrixXd::Identity(n, n);
    const double lhs = ak.dot(km * ak), rhs = k.dot(ak);
    CHECK(lhs <= rhs * (1.0 + 1e-10) + 1e-14);
  }
}

TEST_CASE("toy circuit: Newton recovers the linear interior") {
  const Surrogate& m = toy_model();
  Eigen::MatrixXd b(2, 1);
  b << 1.0, 0.0;
  const InferenceResult r = d2n_evaluate(m, b);
  REQUIRE(r.converged[0]);
  CHECK(r.u_full(1, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
  CHECK(r.u_full(2, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
  CHECK(std::abs(r.u_full(1, 0) - 2.0 / 3.0) < 1e-3);
  CHECK(std::abs(r.u_full(2, 0) - 1.0 / 3.0) < 1e-3);
  CHECK(r.residual_norm(0) <= 1e-10);
  CHECK(r.u_full(0, 0) == 1.0);
  CHECK(r.u_full(3, 0) == 0.0);

  const InferenceResult z = d2n_evaluate(m, Eigen::MatrixXd::Zero(2, 1));
  REQUIRE(z.converged[0]);
  CHECK(z.u_full.cwiseAbs().maxCoeff() < 1e-3);
  CHECK(z.f_full.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("toy circuit: boundary fluxes within the pointwise bound") {
  const Surrogate& m = toy_model();
  const double lo = toy_data().obs.u_obs.minCoeff(), hi = toy_data().obs.u_obs.maxCoeff();
  Eigen::MatrixXd b(2, 5);
  for (Index c = 0; c < 5; ++c) {
    const double s = 0.15 + 0.15 * static_cast<double>(c);
    b(0, c) = lo + s * (hi - lo);
    b(1, c) = hi - s * (hi - lo);
  }
  const InferenceResult r = d2n_evaluate(m, b);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  const PoissonSolution truth = poisson_oracle(m.graph(), ones, b);
  for (Index c = 0; c < 5; ++c) {
    REQUIRE(r.converged[static_cast<std::size_t>(c)]);
    for (Index e : m.graph().observed_edges()) {
      const Eigen::RowVectorXd x = edge_inputs(m.graph(), e, r.u_full.col(c), m.model().encoding);
      const BoundReport br = error_bounds(m, e, x, 0.05);
      CHECK(std::abs(r.f_full(e, c) - truth.f_full(e, c)) <= br.pointwise_bound);
    }
  }
}

TEST_CASE("toy circuit: 500 test columns conserve flux") {
  const Surrogate& m = toy_model();
  const Dataset test = generate(GeneratorConfig::toy_series(500, 1000));
  const InferenceResult r = d2n_evaluate(m, test.obs.u_obs);
  CHECK(r.num_converged() == 500);
  CHECK(r.residual_norm.maxCoeff() <= 1e-8);
  CHECK(interior_divergence_residual(m.graph(), r.f_full).maxCoeff() <= 1e-8);
}

TEST_CASE("tree graph: interior fluxes are forced by the boundary") {
  const Dataset d = generate(GeneratorConfig::resistor_network(8, 0, 6, 4));
  TrainConfig c;
  c.epochs = 2000;
  const Surrogate m(train(d.problem(), c));
  const DirectedGraph& g = m.graph();
  const InferenceResult r = d2n_evaluate(m, d.obs.u_obs);
  const Eigen::MatrixXd d0 = incidence_matrix(g);
  const auto& ue = g.unobserved_edges();
  const auto& uv = g.unobserved_vertices();
  Eigen::MatrixXd d0_un(static_cast<Index>(ue.size()), static_cast<Index>(uv.size()));
  for (std::size_t i = 0; i < ue.size(); ++i)
    for (std::size_t v = 0; v < uv.size(); ++v) d0_un(static_cast<Index>(i), static_cast<Index>(v)) = d0(ue[i], uv[v]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d0_un.transpose());
  REQUIRE(qr.rank() == static_cast<Index>(ue.size()));
  int checked = 0;
  for (Index col = 0; col < r.columns(); ++col) {
    if (!r.converged[static_cast<std::size_t>(col)]) continue;
    // Conservation at the interior: D0_un^T F_un = -D0_obs,un^T F_obs.
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Index>(uv.size()));
    for (Index e : g.observed_edges())
      for (std::size_t v = 0; v < uv.size(); ++v) rhs(static_cast<Index>(v)) -= d0(e, uv[v]) * r.f_full(e, col);
    const Eigen::VectorXd forced = qr.solve(rhs);
    for (std::size_t i = 0; i < ue.size(); ++i) CHECK(std::abs(forced(static_cast<Index>(i)) - r.f_full(ue[i], col)) < 1e-8);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("diamond: the returned flow is one member of the cycle family") {
  // 0 -> 1 -> {2, 3} -> 4 -> 5; the two branches form a cycle.
  const DirectedGraph g =
      build_graph({{0, 1}, {1, 2}, {1, 3}, {2, 4}, {3, 4}, {4, 5}}, {O, U, U, U, U, O}, {O, U, U, U, U, O});
  Eigen::VectorXd cond(6);
  cond << 1.0, 2.0, 0.5, 1.0, 1.5, 1.0;
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd ub = random_matrix(2, 8, rng, 0.0, 1.0);
  const PoissonSolution truth = poisson_oracle(g, cond, ub);
  Dataset d;
  d.graph = g;
  d.obs.u_obs = ub;
  d.obs.f_obs.resize(2, 8);
  d.obs.f_obs.row(0) = truth.f_full.row(0);
  d.obs.f_obs.row(1) = truth.f_full.row(5);
  TrainConfig c;
  c.epochs = 2000;
  const Surrogate m(train(d.problem(), c));
  const InferenceResult r = d2n_evaluate(m, ub);
  int checked = 0;
  for (Index col = 0; col < 8; ++col) {
    if (!r.converged[static_cast<std::size_t>(col)]) continue;
    const Eigen::VectorXd f = r.f_full.col(col);
    // Family: F12 = F24 = t, F13 = F34 = F01 - t, F45 = F01.
    CHECK(std::abs(f(1) - f(3)) < 1e-8);
    CHECK(std::abs(f(2) - f(4)) < 1e-8);
    CHECK(std::abs(f(1) + f(2) - f(0)) < 1e-8);
    CHECK(std::abs(f(5) - f(0)) < 1e-8);
    ++checked;
  }
  CHECK(checked > 0);
  CHECK(r.rank_deficient.size() == 8);
}

TEST_CASE("infer_potentials validation") {
  const Surrogate& m = toy_model();
  CHECK_THROWS_AS(infer_potentials(m, Eigen::MatrixXd::Zero(3, 1)), ValidationError);
  NewtonOptions o;
  o.max_iterations = 0;
  CHECK_THROWS_AS(infer_potentials(m, Eigen::MatrixXd::Zero(2, 1), o), ConfigError);
}
