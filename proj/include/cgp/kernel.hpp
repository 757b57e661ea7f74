#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "cgp/graph.hpp"

namespace cgp {

// Kernel input for an edge e = (a, b).
//   gradient:  x = u_b - u_a          (1-D, the graph gradient of u on e)
//   endpoints: x = (u_a, u_b)         (2-D, source first)
enum class Encoding { gradient, endpoints };

int input_dimension(Encoding enc);
std::string to_string(Encoding enc);
Encoding parse_encoding(const std::string& name);

// exp(-|x - y|^2 / lengthscale). Note the division by the length scale itself,
// not by 2 l^2; learned length scales are specific to this convention.
double rbf(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::Ref<const Eigen::RowVectorXd>& y,
           double lengthscale);

// K(A, B) for row-stacked inputs A (n x d) and B (m x d).
Eigen::MatrixXd cross_kernel(const Eigen::Ref<const Eigen::MatrixXd>& a,
                             const Eigen::Ref<const Eigen::MatrixXd>& b, double lengthscale);

// K(X, X) + noise_variance * I, exactly symmetric.
Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& inputs, double lengthscale,
                              double noise_variance);

// Cholesky factor of an SPD matrix with the jitter escalation policy:
// on failure add 1e-12 * mean(diag) * I and escalate by 10x up to 1e-6 * mean(diag).
struct SpdFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;  // absolute diagonal shift that was applied
  double logdet = 0.0;  // log det of the (possibly jittered) matrix

  Index size() const { return llt.rows(); }
  Eigen::MatrixXd solve(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const { return llt.solve(rhs); }
  Eigen::MatrixXd inverse() const;
};

// Throws NumericalError when the matrix is not SPD even at maximum jitter.
SpdFactor factorize_spd(const Eigen::Ref<const Eigen::MatrixXd>& m);

struct CholSolveResult {
  Eigen::MatrixXd solution;
  double logdet = 0.0;
  double jitter = 0.0;
};

CholSolveResult chol_solve_logdet(const Eigen::Ref<const Eigen::MatrixXd>& m,
                                  const Eigen::Ref<const Eigen::MatrixXd>& rhs);

// Kernel inputs of edge e for every data column of the full potential matrix
// u (V x N). Returns N x d.
Eigen::MatrixXd edge_inputs(const DirectedGraph& g, Index e, const Eigen::Ref<const Eigen::MatrixXd>& u,
                            Encoding enc);

// Per-edge kernel hyperparameters plus the shared noise level, all in log space.
struct Hyperparameters {
  Eigen::VectorXd log_lengthscales;  // one per edge
  double log_noise_variance = -20.0;
  Encoding encoding = Encoding::gradient;

  double lengthscale(Index e) const { return std::exp(log_lengthscales(e)); }
  double noise_variance() const { return std::exp(log_noise_variance); }
};

}  // namespace cgp
