#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

#include "cgp/graph.hpp"
#include "cgp/kernel.hpp"

namespace cgp {

// Regularized kernel system of one edge, A = K(X, X) + noise * I.
struct EdgeSystem {
  Eigen::MatrixXd inputs;  // N x d
  Eigen::MatrixXd kernel;  // K(X, X) without the nugget
  Eigen::MatrixXd regularized;  // A, including any jitter the factorization added
  SpdFactor factor;             // Cholesky of A
};

// Builds the systems of the listed edges from the full potentials u (V x N).
// Edges are processed in parallel; numerical failures name the edge.
std::vector<EdgeSystem> build_edge_systems(const DirectedGraph& g, const Hyperparameters& theta,
                                           const Eigen::Ref<const Eigen::MatrixXd>& u,
                                           const std::vector<Index>& edge_ids);

// Row-major vectorization: vec(M)[i * cols + j] = M(i, j).
Eigen::VectorXd vec_row_major(const Eigen::Ref<const Eigen::MatrixXd>& m);
Eigen::MatrixXd unvec_row_major(const Eigen::Ref<const Eigen::VectorXd>& v, Index rows, Index cols);

// Linearly-constrained QP for the unobserved fluxes
//
//   min_F  F^T Khat F   s.t.  D0hat^T F = b
//
// with F = vec(F_un), Khat = diag(A_i^{-1}) over unobserved edges,
// D0hat = D0[E_un, V_un] (x) I_N and b = -D0[E_obs, V_un]^T F_obs.
// The regularized blocks A_i are stored instead of their inverses; khat()
// and d0hat() materialize the explicit block layouts.
struct KktAssembly {
  Index n_data = 0;
  Eigen::MatrixXd d0_un;              // E_un x V_un
  std::vector<EdgeSystem> blocks;     // one per unobserved edge, in slot order
  Eigen::MatrixXd b;                  // V_un x N
  Eigen::VectorXd b_vec;              // vec_row_major(b)
  Index constraint_rank = 0;          // column rank of d0_un

  Index num_unobserved_edges() const { return d0_un.rows(); }
  Index num_unobserved_vertices() const { return d0_un.cols(); }

  Eigen::MatrixXd khat() const;
  Eigen::MatrixXd d0hat() const;
};

KktAssembly assemble_kkt(const DirectedGraph& g, const Hyperparameters& theta,
                         const Eigen::Ref<const Eigen::MatrixXd>& u,
                         const Eigen::Ref<const Eigen::MatrixXd>& f_obs);

// Same, reusing already-built systems of the unobserved edges (slot order).
KktAssembly assemble_kkt(const DirectedGraph& g, std::vector<EdgeSystem> unobserved_blocks,
                         const Eigen::Ref<const Eigen::MatrixXd>& f_obs);

struct FluxSolution {
  Eigen::MatrixXd f_un;     // E_un x N
  Eigen::MatrixXd lambda;   // V_un x N Lagrange multipliers
  Eigen::MatrixXd weights;  // E_un x N, row i = A_i^{-1} F_i
  Eigen::SparseMatrix<double> schur;  // D0hat^T Khat^{-1} D0hat
  double data_fit = 0.0;    // b^T S^{-1} b  (= F^T Khat F at the optimum)
  bool non_unique = false;  // Schur matrix singular; pseudo-inverse used
  double kkt_residual = 0.0;
};

// Solves the KKT system through the Schur complement
//   S = D0hat^T Khat^{-1} D0hat,  lambda = -S^{-1} b,  F = Khat^{-1} D0hat S^{-1} b.
// Singular S (a component of the unobserved subgraph without incident
// unobserved edge to the boundary) falls back to the pseudo-inverse and sets
// non_unique.
FluxSolution solve_flux(const KktAssembly& a);

}  // namespace cgp
