#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "cgp/graph.hpp"
#include "cgp/objective.hpp"

namespace testing {

using cgp::Index;
using cgp::Partition;
constexpr Partition O = Partition::observed;
constexpr Partition U = Partition::unobserved;

// 0 -> 1 -> 2 -> 3 with v0, v3, e0, e2 observed.
inline cgp::DirectedGraph series_graph() {
  return cgp::build_graph({{0, 1}, {1, 2}, {2, 3}}, {O, U, U, O}, {O, U, O});
}

// Random connected graph: spanning tree plus extra edges, random orientation.
// Boundary = vertices listed first (n_boundary of them); observed edges are
// those touching a boundary vertex.
inline cgp::DirectedGraph random_graph(Index nv, Index extra, Index n_boundary, std::mt19937_64& rng) {
  std::vector<cgp::Edge> edges;
  std::vector<std::pair<Index, Index>> used;
  auto has = [&](Index a, Index b) {
    for (auto& p : used)
      if ((p.first == a && p.second == b) || (p.first == b && p.second == a)) return true;
    return false;
  };
  auto add = [&](Index a, Index b) {
    if (rng() % 2) std::swap(a, b);
    edges.push_back({a, b});
    used.push_back({a, b});
  };
  for (Index v = 1; v < nv; ++v) add(static_cast<Index>(rng() % static_cast<std::uint64_t>(v)), v);
  for (Index k = 0, tries = 0; k < extra && tries < 1000; ++tries) {
    Index a = static_cast<Index>(rng() % static_cast<std::uint64_t>(nv));
    Index b = static_cast<Index>(rng() % static_cast<std::uint64_t>(nv));
    if (a == b || has(a, b)) continue;
    add(a, b);
    ++k;
  }
  std::vector<Partition> vf(static_cast<std::size_t>(nv), U), ef;
  for (Index v = 0; v < n_boundary; ++v) vf[v] = O;
  for (auto& e : edges) ef.push_back(vf[e.source] == O || vf[e.target] == O ? O : U);
  return cgp::build_graph(edges, vf, ef);
}

inline Eigen::MatrixXd random_matrix(Index r, Index c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::MatrixXd m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = d(rng);
  return m;
}

inline Eigen::MatrixXd random_spd(Index n, std::mt19937_64& rng) {
  const Eigen::MatrixXd b = random_matrix(n, n, rng);
  return b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

// Central differences of the total loss over the flat parameter vector.
inline Eigen::VectorXd fd_gradient(const cgp::TrainingProblem& p, const cgp::Params& x, double h) {
  const Eigen::VectorXd flat = x.flatten();
  Eigen::VectorXd g(flat.size());
  for (Index k = 0; k < flat.size(); ++k) {
    cgp::Params a = x, b = x;
    Eigen::VectorXd fa = flat, fb = flat;
    fa(k) += h;
    fb(k) -= h;
    a.unflatten(fa);
    b.unflatten(fb);
    g(k) = (cgp::loss(p, a).total - cgp::loss(p, b).total) / (2.0 * h);
  }
  return g;
}

// Componentwise relative error, absolute below `floor` magnitude.
inline double max_rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-8) {
  double worst = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    const double scale = std::max(std::abs(a(k)), std::abs(b(k)));
    const double err = std::abs(a(k) - b(k));
    worst = std::max(worst, scale > floor ? err / scale : err);
  }
  return worst;
}

}  // namespace testing
