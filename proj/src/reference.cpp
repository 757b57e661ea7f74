#include "cgp/reference.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>

namespace cgp::reference {

namespace {

struct Dense {
  Eigen::MatrixXd u;                   // V x N
  std::vector<Eigen::MatrixXd> x;      // per edge N x d
  std::vector<Eigen::MatrixXd> a;      // per edge A_e
  Eigen::MatrixXd khat;                // blockdiag(A_i^{-1}), unobserved edges
  Eigen::MatrixXd d0hat;
  Eigen::VectorXd b;
  Eigen::VectorXd beta;                // S^+ b
  Eigen::VectorXd gamma;               // D0hat beta, the stacked A_i^{-1} F_i
  std::vector<Eigen::VectorXd> alpha;  // observed edges
  LossBreakdown loss;
};

double log_abs_det(const Eigen::MatrixXd& m) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  return lu.matrixLU().diagonal().cwiseAbs().array().log().sum();
}

Dense build(const TrainingProblem& p, const Params& params) {
  p.validate();
  const DirectedGraph& g = p.graph;
  const Index n = p.n_data();
  const Index ne = g.num_edges();
  const double noise = std::exp(params.log_noise_variance);
  Dense d;
  d.u = merge_vertex_values(g, p.obs.u_obs, params.u_un);
  d.x.resize(ne);
  d.a.resize(ne);
  d.alpha.resize(ne);
  for (Index e = 0; e < ne; ++e) {
    d.x[e] = edge_inputs(g, e, d.u, p.encoding);
    const double ell = std::exp(params.log_lengthscales(e));
    d.a[e].resize(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        d.a[e](i, j) = rbf(d.x[e].row(i), d.x[e].row(j), ell) + (i == j ? noise : 0.0);
      }
    }
    d.loss.complexity += log_abs_det(d.a[e]);
  }
  for (std::size_t k = 0; k < g.observed_edges().size(); ++k) {
    const Index e = g.observed_edges()[k];
    const Eigen::VectorXd f = p.obs.f_obs.row(static_cast<Index>(k)).transpose();
    d.alpha[e] = d.a[e].partialPivLu().solve(f);
    d.loss.data_fit_observed += f.dot(d.alpha[e]);
  }

  const auto& un_e = g.unobserved_edges();
  const auto& un_v = g.unobserved_vertices();
  const auto eu = static_cast<Index>(un_e.size());
  const auto vu = static_cast<Index>(un_v.size());
  d.khat = Eigen::MatrixXd::Zero(eu * n, eu * n);
  for (Index i = 0; i < eu; ++i) d.khat.block(i * n, i * n, n, n) = d.a[un_e[i]].inverse();
  const Eigen::MatrixXd d0 = incidence_matrix(g);
  Eigen::MatrixXd d0_un(eu, vu), d0_obs_un(static_cast<Index>(g.observed_edges().size()), vu);
  for (Index i = 0; i < eu; ++i)
    for (Index v = 0; v < vu; ++v) d0_un(i, v) = d0(un_e[i], un_v[v]);
  for (Index i = 0; i < d0_obs_un.rows(); ++i)
    for (Index v = 0; v < vu; ++v) d0_obs_un(i, v) = d0(g.observed_edges()[i], un_v[v]);
  d.d0hat = Eigen::kroneckerProduct(d0_un, Eigen::MatrixXd::Identity(n, n)).eval();

  const Eigen::MatrixXd bmat = -d0_obs_un.transpose() * p.obs.f_obs;
  d.b = vec_row_major(bmat);
  if (vu > 0 && n > 0) {
    const Eigen::MatrixXd s = d.d0hat.transpose() * d.khat.inverse() * d.d0hat;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(s);
    d.beta = cod.solve(d.b);
    d.loss.data_fit_constrained = d.b.dot(d.beta);
  } else {
    d.beta = Eigen::VectorXd::Zero(vu * n);
  }
  d.gamma = d.d0hat * d.beta;
  d.loss.total = d.loss.data_fit_observed + d.loss.data_fit_constrained + d.loss.complexity;
  return d;
}

// dL/dp given the per-edge derivative matrices dA_e/dp (empty = zero).
double directional(const TrainingProblem& p, const Dense& d, const std::vector<Eigen::MatrixXd>& da) {
  const DirectedGraph& g = p.graph;
  const Index n = p.n_data();
  double out = 0.0;
  for (Index e = 0; e < g.num_edges(); ++e) {
    if (da[e].size() == 0) continue;
    out += d.a[e].partialPivLu().solve(da[e]).trace();
    if (g.edge_partition(e) == Partition::observed) out -= d.alpha[e].dot(da[e] * d.alpha[e]);
  }
  const auto& un_e = g.unobserved_edges();
  const auto eu = static_cast<Index>(un_e.size());
  // d(b^T S^{-1} b) = -beta^T D0hat^T blockdiag(dA) D0hat beta.
  for (Index i = 0; i < eu && d.beta.size() > 0; ++i) {
    if (da[un_e[i]].size() == 0) continue;
    const Eigen::VectorXd gi = d.gamma.segment(i * n, n);
    out -= gi.dot(da[un_e[i]] * gi);
  }
  return out;
}

}  // namespace

LossBreakdown loss(const TrainingProblem& problem, const Params& params) {
  return build(problem, params).loss;
}

ParamGradient loss_gradient(const TrainingProblem& problem, const Params& params) {
  const Dense d = build(problem, params);
  const DirectedGraph& g = problem.graph;
  const Index n = problem.n_data();
  const Index ne = g.num_edges();
  const double noise = std::exp(params.log_noise_variance);
  ParamGradient grad;
  grad.d_log_lengthscales.resize(ne);

  for (Index e = 0; e < ne; ++e) {
    std::vector<Eigen::MatrixXd> da(ne);
    const double ell = std::exp(params.log_lengthscales(e));
    da[e].resize(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        const double r2 = (d.x[e].row(i) - d.x[e].row(j)).squaredNorm();
        da[e](i, j) = std::exp(-r2 / ell) * r2 / ell;
      }
    grad.d_log_lengthscales(e) = directional(problem, d, da);
  }
  {
    std::vector<Eigen::MatrixXd> da(ne);
    for (Index e = 0; e < ne; ++e) da[e] = noise * Eigen::MatrixXd::Identity(n, n);
    grad.d_log_noise_variance = directional(problem, d, da);
  }

  const auto& un_v = g.unobserved_vertices();
  grad.d_u_un = Eigen::MatrixXd::Zero(static_cast<Index>(un_v.size()), n);
  for (std::size_t slot = 0; slot < un_v.size(); ++slot) {
    const Index v = un_v[slot];
    for (Index col = 0; col < n; ++col) {
      std::vector<Eigen::MatrixXd> da(ne);
      for (Index e = 0; e < ne; ++e) {
        const Edge& ed = g.edge(e);
        if (ed.source != v && ed.target != v) continue;
        // dx_col / du_v for this edge's encoding.
        Eigen::RowVectorXd dxdu = Eigen::RowVectorXd::Zero(input_dimension(problem.encoding));
        if (problem.encoding == Encoding::gradient) {
          dxdu(0) = ed.target == v ? 1.0 : -1.0;
        } else {
          dxdu(ed.source == v ? 0 : 1) = 1.0;
        }
        const double ell = std::exp(params.log_lengthscales(e));
        da[e] = Eigen::MatrixXd::Zero(n, n);
        for (Index j = 0; j < n; ++j) {
          if (j == col) continue;
          const Eigen::RowVectorXd diff = d.x[e].row(col) - d.x[e].row(j);
          const double k = std::exp(-diff.squaredNorm() / ell);
          const double val = k * (-2.0 / ell) * diff.dot(dxdu);
          da[e](col, j) = val;
          da[e](j, col) = val;
        }
      }
      grad.d_u_un(static_cast<Index>(slot), col) = directional(problem, d, da);
    }
  }
  return grad;
}

}  // namespace cgp::reference
