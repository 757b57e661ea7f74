#include <doctest.h>

#include <Eigen/LU>

#include <algorithm>
#include <numeric>

#include "cgp/conservation.hpp"
#include "helpers.hpp"

using namespace cgp;
using namespace testing;

namespace {

Hyperparameters theta_for(const DirectedGraph& g, double log_l, double log_noise) {
  Hyperparameters h;
  h.log_lengthscales = Eigen::VectorXd::Constant(g.num_edges(), log_l);
  h.log_noise_variance = log_noise;
  return h;
}

// Dense KKT oracle: [Khat D0hat; D0hat^T 0] [F; lambda] = [0; b] with the
// block matrices written out explicitly and a generic LU solve.
struct Oracle {
  Eigen::VectorXd f, lambda;
};

Oracle dense_kkt(const KktAssembly& a) {
  const Eigen::MatrixXd khat = a.khat();
  const Eigen::MatrixXd d0hat = a.d0hat();
  const Index nf = khat.rows(), nl = d0hat.cols();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nf + nl, nf + nl);
  m.topLeftCorner(nf, nf) = khat;
  m.topRightCorner(nf, nl) = d0hat;
  m.bottomLeftCorner(nl, nf) = d0hat.transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + nl);
  rhs.tail(nl) = a.b_vec;
  const Eigen::VectorXd sol = m.fullPivLu().solve(rhs);
  return {sol.head(nf), sol.tail(nl)};
}

}  // namespace

TEST_CASE("row-major vectorization round trip") {
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const Eigen::VectorXd v = vec_row_major(m);
  CHECK(v == (Eigen::VectorXd(6) << 1, 2, 3, 4, 5, 6).finished());
  CHECK(unvec_row_major(v, 2, 3) == m);
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd r = random_matrix(4, 7, rng);
  CHECK(unvec_row_major(vec_row_major(r), 4, 7) == r);
  CHECK_THROWS_AS(unvec_row_major(v, 4, 2), ValidationError);
}

TEST_CASE("series graph assembly and solution") {
  const DirectedGraph g = series_graph();
  Eigen::MatrixXd u(4, 1);
  u << 1, 0.6, 0.3, 0;
  Eigen::MatrixXd f_obs(2, 1);
  f_obs << 0.5, 0.5;
  const KktAssembly a = assemble_kkt(g, theta_for(g, 0.0, -4.0), u, f_obs);
  // Hand assembly: D0[E_obs, V_un] = [[1, 0], [0, -1]], b = -that^T F_obs.
  CHECK(a.b(0, 0) == -0.5);
  CHECK(a.b(1, 0) == 0.5);
  CHECK(a.d0_un.rows() == 1);
  CHECK(a.d0_un(0, 0) == -1.0);
  CHECK(a.d0_un(0, 1) == 1.0);

  const FluxSolution s = solve_flux(a);
  CHECK(s.f_un(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  // One edge, two interior vertices: the flow is pinned but S is rank 1.
  CHECK(s.non_unique);
  CHECK(s.kkt_residual < 1e-8);
  const Eigen::MatrixXd full = merge_edge_values(g, f_obs, s.f_un);
  CHECK(interior_divergence_residual(g, full)(0) < 1e-12);
}

TEST_CASE("Y graph forces the outflow") {
  const DirectedGraph g = build_graph({{0, 2}, {1, 2}, {2, 3}}, {O, O, U, O}, {O, O, U});
  Eigen::MatrixXd u(4, 1);
  u << 1.0, 0.8, 0.5, 0.0;
  Eigen::MatrixXd f_obs(2, 1);
  f_obs << 0.3, 0.7;
  const FluxSolution s = solve_flux(assemble_kkt(g, theta_for(g, 0.0, -3.0), u, f_obs));
  CHECK(s.f_un(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("parallel unobserved edges split symmetrically") {
  // 0 -> 1 observed inflow, two parallel 1 -> 2 edges, 2 -> 3 observed outflow.
  const DirectedGraph g = build_graph({{0, 1}, {1, 2}, {1, 2}, {2, 3}}, {O, U, U, O}, {O, U, U, O});
  Eigen::MatrixXd u(4, 2);
  u << 1, 2, 0.7, 1.1, 0.4, 0.2, 0, 0;
  Eigen::MatrixXd f_obs(2, 2);
  f_obs << 1, 0.4, 1, 0.4;
  const FluxSolution s = solve_flux(assemble_kkt(g, theta_for(g, 0.3, -5.0), u, f_obs));
  CHECK(s.f_un(0, 0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(s.f_un(1, 0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(s.f_un(0, 1) == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(s.f_un(1, 1) == doctest::Approx(0.2).epsilon(1e-10));
}

TEST_CASE("degenerate assemblies") {
  // No unobserved edges: nothing to solve.
  const DirectedGraph g = build_graph({{0, 1}, {1, 2}}, {O, U, O}, {O, O});
  Eigen::MatrixXd u(3, 1);
  u << 1, 0.5, 0;
  Eigen::MatrixXd f_obs(2, 1);
  f_obs << 0.2, 0.2;
  const KktAssembly a = assemble_kkt(g, theta_for(g, 0.0, -2.0), u, f_obs);
  CHECK(a.num_unobserved_edges() == 0);
  CHECK(a.khat().size() == 0);
  const FluxSolution s = solve_flux(a);
  CHECK(s.f_un.rows() == 0);
  CHECK(s.data_fit == 0.0);
  CHECK_FALSE(s.non_unique);

  CHECK_THROWS_AS(assemble_kkt(g, theta_for(g, 0.0, -2.0), u, Eigen::MatrixXd::Zero(3, 1)), ValidationError);
}

TEST_CASE("Kronecker layout with two data columns") {
  const DirectedGraph g = build_graph({{0, 1}, {1, 2}, {2, 3}, {3, 4}}, {O, U, U, U, O}, {O, U, U, O});
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd u = random_matrix(5, 2, rng);
  const Eigen::MatrixXd f_obs = random_matrix(2, 2, rng);
  const KktAssembly a = assemble_kkt(g, theta_for(g, 0.1, -3.0), u, f_obs);
  const Eigen::MatrixXd d0hat = a.d0hat();
  CHECK(d0hat.rows() == 4);
  CHECK(d0hat.cols() == 6);
  for (Index i = 0; i < a.d0_un.rows(); ++i)
    for (Index v = 0; v < a.d0_un.cols(); ++v)
      CHECK(d0hat.block(2 * i, 2 * v, 2, 2) == a.d0_un(i, v) * Eigen::Matrix2d::Identity());
  const Eigen::MatrixXd khat = a.khat();
  for (Index i = 0; i < 2; ++i) {
    const Eigen::MatrixXd ai = a.blocks[i].regularized;
    CHECK((khat.block(2 * i, 2 * i, 2, 2) * ai - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(khat.block(0, 2, 2, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.b_vec == vec_row_major(a.b));
}

TEST_CASE("solve_flux matches a dense KKT oracle on random instances") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int t = 0; checked < 50 && t < 500; ++t) {
    const Index nv = 4 + static_cast<Index>(rng() % 3);
    const DirectedGraph base = random_graph(nv, static_cast<Index>(rng() % 2), 2, rng);
    // Let some boundary edges carry unknown flux so the interior is reachable.
    std::vector<Partition> ef;
    for (const Edge& e : base.edges()) {
      const bool touches = base.vertex_partition(e.source) == O || base.vertex_partition(e.target) == O;
      ef.push_back(touches && rng() % 2 ? O : U);
    }
    std::vector<Partition> vf;
    for (Index v = 0; v < nv; ++v) vf.push_back(base.vertex_partition(v));
    const DirectedGraph g = build_graph(base.edges(), vf, ef);
    const auto eu = g.unobserved_edges().size();
    if (eu == 0 || eu > 4) continue;
    const Index n = 1 + static_cast<Index>(rng() % 3);
    const Eigen::MatrixXd u = random_matrix(nv, n, rng);
    const Eigen::MatrixXd f_obs = random_matrix(static_cast<Index>(g.observed_edges().size()), n, rng);
    const KktAssembly a = assemble_kkt(g, theta_for(g, std::log(0.5 + (t % 5)), -2.0 - (t % 3)), u, f_obs);
    if (a.constraint_rank < a.num_unobserved_vertices()) continue;
    const FluxSolution s = solve_flux(a);
    const Oracle o = dense_kkt(a);
    CHECK_FALSE(s.non_unique);
    CHECK((vec_row_major(s.f_un) - o.f).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((vec_row_major(s.lambda) - o.lambda).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(s.kkt_residual < 1e-8);
    // Schur substitution: F^T Khat F at the optimum equals b^T S^{-1} b.
    const Eigen::VectorXd fv = vec_row_major(s.f_un);
    CHECK(fv.dot(a.khat() * fv) == doctest::Approx(s.data_fit).epsilon(1e-10));
    ++checked;
  }
  CHECK(checked == 50);
}

TEST_CASE("optimality against feasible perturbations") {
  std::mt19937_64 rng(77);
  const DirectedGraph g = build_graph({{0, 1}, {1, 2}, {2, 3}, {1, 3}, {3, 4}, {2, 4}},
                                      {O, U, U, U, O}, {O, U, U, U, U, O});
  const Eigen::MatrixXd u = random_matrix(5, 2, rng);
  const Eigen::MatrixXd f_obs = random_matrix(2, 2, rng);
  const KktAssembly a = assemble_kkt(g, theta_for(g, 0.2, -3.0), u, f_obs);
  const FluxSolution s = solve_flux(a);
  const Eigen::MatrixXd khat = a.khat();
  const Eigen::MatrixXd null = Eigen::FullPivLU<Eigen::MatrixXd>(a.d0hat().transpose()).kernel();
  REQUIRE(null.cols() > 0);
  const Eigen::VectorXd f = vec_row_major(s.f_un);
  const double best = f.dot(khat * f);
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd z = null * random_matrix(null.cols(), 1, rng);
    const Eigen::VectorXd fz = f + z;
    CHECK((a.d0hat().transpose() * fz - a.b_vec).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(best <= fz.dot(khat * fz) + 1e-12);
  }
}

TEST_CASE("relabeling edges permutes the solution") {
  std::mt19937_64 rng(9);
  std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {1, 3}, {3, 4}, {2, 4}};
  std::vector<Partition> ef{O, U, U, U, O, O};
  const std::vector<Partition> vf{O, U, U, U, O};
  const DirectedGraph g = build_graph(edges, vf, ef);
  const Eigen::MatrixXd u = random_matrix(5, 3, rng);
  const Eigen::MatrixXd f_obs = random_matrix(3, 3, rng);
  Hyperparameters h;
  h.log_lengthscales = random_matrix(6, 1, rng);
  h.log_noise_variance = -3.0;
  const FluxSolution s = solve_flux(assemble_kkt(g, h, u, f_obs));

  std::vector<std::size_t> perm{5, 3, 1, 0, 4, 2};  // new edge k is old edge perm[k]
  std::vector<Edge> pe;
  std::vector<Partition> pf;
  Hyperparameters ph = h;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    pe.push_back(edges[perm[k]]);
    pf.push_back(ef[perm[k]]);
    ph.log_lengthscales(static_cast<Index>(k)) = h.log_lengthscales(static_cast<Index>(perm[k]));
  }
  const DirectedGraph pg = build_graph(pe, vf, pf);
  Eigen::MatrixXd pf_obs(3, 3);
  for (std::size_t k = 0; k < pg.observed_edges().size(); ++k) {
    const Index old = static_cast<Index>(perm[pg.observed_edges()[k]]);
    pf_obs.row(static_cast<Index>(k)) = f_obs.row(g.edge_slot(old));
  }
  const FluxSolution ps = solve_flux(assemble_kkt(pg, ph, u, pf_obs));
  for (Index e : pg.unobserved_edges()) {
    const Index old = static_cast<Index>(perm[e]);
    CHECK((ps.f_un.row(pg.edge_slot(e)) - s.f_un.row(g.edge_slot(old))).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("interior vertex without unobserved edges makes the Schur matrix singular") {
  // v1 touches only observed edges, so its constraint row is empty.
  const DirectedGraph g = build_graph({{0, 1}, {1, 2}, {2, 3}}, {O, U, U, O}, {O, O, U});
  Eigen::MatrixXd u(4, 1);
  u << 1, 0.6, 0.3, 0;
  Eigen::MatrixXd f_obs(2, 1);
  f_obs << 0.5, 0.5;
  const KktAssembly a = assemble_kkt(g, theta_for(g, 0.0, -4.0), u, f_obs);
  CHECK(a.constraint_rank == 1);
  const FluxSolution s = solve_flux(a);
  CHECK(s.non_unique);
  CHECK(s.f_un.allFinite());
  CHECK(s.f_un(0, 0) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("sparse Schur path agrees with the dense oracle") {
  // V_un * N above the dense limit.
  std::mt19937_64 rng(31);
  std::vector<Edge> edges;
  std::vector<Partition> ef;
  for (Index i = 0; i + 1 < 12; ++i) {
    edges.push_back({i, i + 1});
    ef.push_back(i == 0 || i == 10 ? O : U);
    if (i % 2 == 0 && i + 2 < 12) {
      edges.push_back({i, i + 2});
      ef.push_back(U);
    }
  }
  std::vector<Partition> vf(12, U);
  vf[0] = vf[11] = O;
  const DirectedGraph g = build_graph(edges, vf, ef);
  const Index n = 45;
  const Eigen::MatrixXd u = random_matrix(12, n, rng);
  const Eigen::MatrixXd f_obs = random_matrix(static_cast<Index>(g.observed_edges().size()), n, rng);
  const KktAssembly a = assemble_kkt(g, theta_for(g, 0.5, -2.0), u, f_obs);
  REQUIRE(a.num_unobserved_vertices() * n > 400);
  REQUIRE(a.constraint_rank == a.num_unobserved_vertices());
  const FluxSolution s = solve_flux(a);
  const Eigen::MatrixXd sd = Eigen::MatrixXd(s.schur);
  const Eigen::VectorXd beta = sd.ldlt().solve(a.b_vec);
  CHECK(s.data_fit == doctest::Approx(a.b_vec.dot(beta)).epsilon(1e-9));
  CHECK(s.kkt_residual < 1e-8);
  CHECK((graph_divergence(g, merge_edge_values(g, f_obs, s.f_un))).norm() > 0.0);
  CHECK(interior_divergence_residual(g, merge_edge_values(g, f_obs, s.f_un)).maxCoeff() < 1e-8);
}
