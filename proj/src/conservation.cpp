#include "cgp/conservation.hpp"

#include <Eigen/QR>
#include <Eigen/SparseCholesky>

#include "cgp/parallel.hpp"

namespace cgp {

namespace {

// Dense factorization is faster below this Schur dimension.
constexpr Index kDenseSchurLimit = 400;

}  // namespace

std::vector<EdgeSystem> build_edge_systems(const DirectedGraph& g, const Hyperparameters& theta,
                                           const Eigen::Ref<const Eigen::MatrixXd>& u,
                                           const std::vector<Index>& edge_ids) {
  if (theta.log_lengthscales.size() != g.num_edges()) {
    throw ValidationError("hyperparameters need one length scale per edge");
  }
  std::vector<EdgeSystem> out(edge_ids.size());
  const double noise = theta.noise_variance();
  parallel::for_each_index(static_cast<std::ptrdiff_t>(edge_ids.size()), [&](std::ptrdiff_t i) {
    const Index e = edge_ids[static_cast<std::size_t>(i)];
    EdgeSystem& s = out[static_cast<std::size_t>(i)];
    s.inputs = edge_inputs(g, e, u, theta.encoding);
    s.kernel = kernel_matrix(s.inputs, theta.lengthscale(e), 0.0);
    Eigen::MatrixXd a = s.kernel;
    a.diagonal().array() += noise;
    try {
      s.factor = factorize_spd(a);
    } catch (const NumericalError& err) {
      throw NumericalError("edge " + std::to_string(e) + ": " + err.what());
    }
    a.diagonal().array() += s.factor.jitter;
    s.regularized = std::move(a);
  });
  return out;
}

Eigen::VectorXd vec_row_major(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Eigen::VectorXd v(m.size());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  }
  return v;
}

Eigen::MatrixXd unvec_row_major(const Eigen::Ref<const Eigen::VectorXd>& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw ValidationError("unvec_row_major: size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  }
  return m;
}

Eigen::MatrixXd KktAssembly::khat() const {
  const Index n = n_data;
  const Index eu = num_unobserved_edges();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(eu * n, eu * n);
  for (Index i = 0; i < eu; ++i) k.block(i * n, i * n, n, n) = blocks[i].factor.inverse();
  return k;
}

Eigen::MatrixXd KktAssembly::d0hat() const {
  const Index n = n_data;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(d0_un.rows() * n, d0_un.cols() * n);
  for (Index i = 0; i < d0_un.rows(); ++i) {
    for (Index v = 0; v < d0_un.cols(); ++v) {
      if (d0_un(i, v) != 0.0) {
        d.block(i * n, v * n, n, n) = d0_un(i, v) * Eigen::MatrixXd::Identity(n, n);
      }
    }
  }
  return d;
}

KktAssembly assemble_kkt(const DirectedGraph& g, std::vector<EdgeSystem> unobserved_blocks,
                         const Eigen::Ref<const Eigen::MatrixXd>& f_obs) {
  const auto& obs_e = g.observed_edges();
  const auto& un_e = g.unobserved_edges();
  const auto& un_v = g.unobserved_vertices();
  if (f_obs.rows() != static_cast<Index>(obs_e.size())) {
    throw ValidationError("assemble_kkt: F_obs has " + std::to_string(f_obs.rows()) +
                          " rows, expected " + std::to_string(obs_e.size()));
  }
  if (unobserved_blocks.size() != un_e.size()) {
    throw ValidationError("assemble_kkt: one kernel block per unobserved edge is required");
  }
  KktAssembly a;
  a.n_data = f_obs.cols();
  for (const EdgeSystem& s : unobserved_blocks) {
    if (obs_e.empty()) a.n_data = s.factor.size();
    if (s.factor.size() != a.n_data) throw ValidationError("assemble_kkt: kernel block size mismatch");
  }
  a.d0_un = incidence_block(g, un_e, un_v);
  a.blocks = std::move(unobserved_blocks);
  const Eigen::MatrixXd d0_obs_un = incidence_block(g, obs_e, un_v);
  a.b = obs_e.empty() ? Eigen::MatrixXd::Zero(static_cast<Index>(un_v.size()), a.n_data)
                      : Eigen::MatrixXd(-d0_obs_un.transpose() * f_obs);
  a.b_vec = vec_row_major(a.b);
  if (a.d0_un.size() > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.d0_un);
    a.constraint_rank = qr.rank();
  }
  return a;
}

KktAssembly assemble_kkt(const DirectedGraph& g, const Hyperparameters& theta,
                         const Eigen::Ref<const Eigen::MatrixXd>& u,
                         const Eigen::Ref<const Eigen::MatrixXd>& f_obs) {
  return assemble_kkt(g, build_edge_systems(g, theta, u, g.unobserved_edges()), f_obs);
}

FluxSolution solve_flux(const KktAssembly& a) {
  const Index n = a.n_data;
  const Index eu = a.num_unobserved_edges();
  const Index vu = a.num_unobserved_vertices();
  FluxSolution sol;
  sol.f_un = Eigen::MatrixXd::Zero(eu, n);
  sol.weights = Eigen::MatrixXd::Zero(eu, n);
  sol.lambda = Eigen::MatrixXd::Zero(vu, n);
  sol.schur.resize(vu * n, vu * n);
  if (vu == 0 || n == 0 || eu == 0) return sol;

  // S block (v, w) = sum_i D0[i, v] D0[i, w] A_i.
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(eu * 4 * n * n));
  for (Index i = 0; i < eu; ++i) {
    const Eigen::MatrixXd& ai = a.blocks[i].regularized;
    for (Index v = 0; v < vu; ++v) {
      const double dv = a.d0_un(i, v);
      if (dv == 0.0) continue;
      for (Index w = 0; w < vu; ++w) {
        const double dw = a.d0_un(i, w);
        if (dw == 0.0) continue;
        for (Index c = 0; c < n; ++c) {
          for (Index r = 0; r < n; ++r) {
            trips.emplace_back(v * n + r, w * n + c, dv * dw * ai(r, c));
          }
        }
      }
    }
  }
  sol.schur.setFromTriplets(trips.begin(), trips.end());

  Eigen::VectorXd beta;
  bool solved = false;
  if (a.constraint_rank == vu) {
    if (vu * n <= kDenseSchurLimit) {
      Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(sol.schur));
      if (llt.info() == Eigen::Success) {
        beta = llt.solve(a.b_vec);
        solved = true;
      }
    } else {
      Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(sol.schur);
      if (llt.info() == Eigen::Success) {
        beta = llt.solve(a.b_vec);
        solved = llt.info() == Eigen::Success;
      }
    }
  }
  if (!solved) {
    sol.non_unique = true;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Eigen::MatrixXd(sol.schur));
    beta = cod.solve(a.b_vec);
  }

  const Eigen::MatrixXd beta_m = unvec_row_major(beta, vu, n);
  sol.lambda = -beta_m;
  sol.weights = a.d0_un * beta_m;  // row i: sum_v D0[i, v] beta_v
  for (Index i = 0; i < eu; ++i) {
    sol.f_un.row(i) = (a.blocks[i].regularized * sol.weights.row(i).transpose()).transpose();
  }
  sol.data_fit = a.b_vec.dot(beta);

  // Residual of the full KKT system [Khat D0hat; D0hat^T 0][F; lambda] = [0; b].
  double res = 0.0;
  for (Index i = 0; i < eu; ++i) {
    const Eigen::VectorXd khat_f = a.blocks[i].factor.solve(sol.f_un.row(i).transpose());
    const Eigen::VectorXd d0_lambda = (a.d0_un.row(i) * sol.lambda).transpose();
    res = std::max(res, (khat_f + d0_lambda).cwiseAbs().maxCoeff());
  }
  const Eigen::MatrixXd primal = a.d0_un.transpose() * sol.f_un - a.b;
  if (primal.size() > 0) res = std::max(res, primal.cwiseAbs().maxCoeff());
  sol.kkt_residual = res;
  return sol;
}

}  // namespace cgp
