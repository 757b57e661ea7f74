#include "cgp/kernel.hpp"

#include <cmath>

namespace cgp {

int input_dimension(Encoding enc) { return enc == Encoding::gradient ? 1 : 2; }

std::string to_string(Encoding enc) { return enc == Encoding::gradient ? "gradient" : "endpoints"; }

Encoding parse_encoding(const std::string& name) {
  if (name == "gradient") return Encoding::gradient;
  if (name == "endpoints") return Encoding::endpoints;
  throw ConfigError("unknown encoding '" + name + "' (expected gradient or endpoints)");
}

double rbf(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::Ref<const Eigen::RowVectorXd>& y,
           double lengthscale) {
  if (!(lengthscale > 0.0)) throw NumericalError("rbf: length scale must be positive");
  if (x.size() != y.size()) throw ValidationError("rbf: input dimensions differ");
  return std::exp(-(x - y).squaredNorm() / lengthscale);
}

Eigen::MatrixXd cross_kernel(const Eigen::Ref<const Eigen::MatrixXd>& a,
                             const Eigen::Ref<const Eigen::MatrixXd>& b, double lengthscale) {
  if (!(lengthscale > 0.0)) throw NumericalError("cross_kernel: length scale must be positive");
  if (a.cols() != b.cols()) throw ValidationError("cross_kernel: input dimensions differ");
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      k(i, j) = std::exp(-(a.row(i) - b.row(j)).squaredNorm() / lengthscale);
    }
  }
  return k;
}

Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& inputs, double lengthscale,
                              double noise_variance) {
  if (!(lengthscale > 0.0)) throw NumericalError("kernel_matrix: length scale must be positive");
  const Index n = inputs.rows();
  if (n < 1) throw ValidationError("kernel_matrix: at least one input is required");
  Eigen::MatrixXd k(n, n);
  for (Index j = 0; j < n; ++j) {
    k(j, j) = 1.0 + noise_variance;
    for (Index i = j + 1; i < n; ++i) {
      const double v = std::exp(-(inputs.row(i) - inputs.row(j)).squaredNorm() / lengthscale);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Eigen::MatrixXd SpdFactor::inverse() const {
  return llt.solve(Eigen::MatrixXd::Identity(size(), size()));
}

SpdFactor factorize_spd(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.rows() != m.cols()) throw ValidationError("factorize_spd: matrix is not square");
  SpdFactor f;
  const Index n = m.rows();
  if (n == 0) return f;
  if (!m.allFinite()) throw NumericalError("factorize_spd: matrix has non-finite entries");
  f.llt.compute(m);
  if (f.llt.info() != Eigen::Success) {
    const double scale = m.trace() / static_cast<double>(n);
    bool ok = false;
    for (double rel = 1e-12; rel <= 1e-6 * (1.0 + 1e-9); rel *= 10.0) {
      f.jitter = rel * scale;
      Eigen::MatrixXd shifted = m;
      shifted.diagonal().array() += f.jitter;
      f.llt.compute(shifted);
      if (f.llt.info() == Eigen::Success) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw NumericalError("Cholesky factorization failed after jitter escalation to " +
                           std::to_string(f.jitter));
    }
  }
  f.logdet = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
  return f;
}

CholSolveResult chol_solve_logdet(const Eigen::Ref<const Eigen::MatrixXd>& m,
                                  const Eigen::Ref<const Eigen::MatrixXd>& rhs) {
  if (rhs.rows() != m.rows()) throw ValidationError("chol_solve_logdet: right-hand side rows differ");
  SpdFactor f = factorize_spd(m);
  return {f.solve(rhs), f.logdet, f.jitter};
}

Eigen::MatrixXd edge_inputs(const DirectedGraph& g, Index e, const Eigen::Ref<const Eigen::MatrixXd>& u,
                            Encoding enc) {
  if (u.rows() != g.num_vertices()) throw ValidationError("edge_inputs: potentials need V rows");
  const Edge& ed = g.edge(e);
  if (enc == Encoding::gradient) {
    return (u.row(ed.target) - u.row(ed.source)).transpose();
  }
  Eigen::MatrixXd x(u.cols(), 2);
  x.col(0) = u.row(ed.source).transpose();
  x.col(1) = u.row(ed.target).transpose();
  return x;
}

}  // namespace cgp
