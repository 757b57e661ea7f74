#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "cgp/trainer.hpp"

namespace cgp {

// GP posterior of a single edge, prepared from its cached training set.
class EdgePosterior {
 public:
  EdgePosterior(const EdgeModel& model, double noise_variance);

  double lengthscale() const { return lengthscale_; }
  double noise_variance() const { return noise_variance_; }
  Index input_dim() const { return inputs_.cols(); }

  // K(x, X) as a column vector.
  Eigen::VectorXd cross(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  // phi(x) = [K(X, X) + noise I]^{-1} K(X, x); the mean is phi(x)^T Y.
  Eigen::VectorXd phi(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  double mean(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  // d mean / d x.
  Eigen::RowVectorXd mean_gradient(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  // K(x, x) - K(x, X) A^{-1} K(X, x), floored at 0.
  double variance(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  // ||f_hat||_{H_K} = sqrt(alpha^T K alpha), alpha = A^{-1} Y.
  double rkhs_norm() const { return rkhs_norm_; }

 private:
  void check_dim(Index d) const;

  Eigen::MatrixXd inputs_;
  Eigen::VectorXd alpha_;
  SpdFactor factor_;
  double lengthscale_;
  double noise_variance_;
  double rkhs_norm_ = 0.0;
};

// A trained surrogate with every edge posterior ready for evaluation.
class Surrogate {
 public:
  explicit Surrogate(TrainedSurrogate model);

  const TrainedSurrogate& model() const { return model_; }
  const DirectedGraph& graph() const { return model_.graph; }
  // Throws ValidationError for an unknown edge id.
  const EdgePosterior& edge(Index e) const;

  // Posterior-mean fluxes on every edge for full potentials u (V x M).
  Eigen::MatrixXd fluxes(const Eigen::Ref<const Eigen::MatrixXd>& u) const;

 private:
  TrainedSurrogate model_;
  std::vector<EdgePosterior> edges_;
};

struct EdgePrediction {
  double mean = 0.0;
  double variance = 0.0;
};

EdgePrediction predict_edge(const Surrogate& model, Index e, const Eigen::Ref<const Eigen::RowVectorXd>& x);

enum class InitialGuess { harmonic, uniform_random, midrange };

struct NewtonOptions {
  InitialGuess initial_guess = InitialGuess::harmonic;
  int max_iterations = 100;
  double tolerance = 1e-10;
  // Scale the tolerance by max(1, ||F||_inf) of the current flux iterate.
  bool scaled_tolerance = false;
  // Project interior potentials onto [0, max boundary potential] after each step.
  bool box_constraint = false;
  double damping_factor = 0.5;
  int max_halvings = 20;
  // Extra seeded uniform-random starts tried when a solve stalls.
  int restarts = 5;
  std::uint64_t seed = 0;
  // d2n_evaluate accepts non-converged best iterates (flagged) when true.
  bool accept_best_iterate = true;

  void validate() const;
};

struct InferenceResult {
  Eigen::MatrixXd u_full;  // V x M, boundary pasted, interior inferred
  Eigen::MatrixXd f_full;  // E x M
  std::vector<int> newton_iters;
  Eigen::VectorXd residual_norm;  // max-abs interior divergence per column
  std::vector<bool> converged;
  std::vector<bool> rank_deficient;  // a pseudo-inverse Newton step was taken
  std::vector<int> restarts_used;

  Index columns() const { return u_full.cols(); }
  Index num_converged() const;
};

// Solves div f(u) = 0 at the interior vertices for u_un, one column of
// boundary potentials u_obs (V_obs x M) at a time. Columns are independent
// and run in parallel.
InferenceResult infer_potentials(const Surrogate& model, const Eigen::Ref<const Eigen::MatrixXd>& u_obs,
                                 const NewtonOptions& options = {});

// Global Dirichlet-to-Neumann evaluation: boundary potentials to fluxes on
// every edge. Throws NumericalError for non-converged columns unless
// options.accept_best_iterate is set.
InferenceResult d2n_evaluate(const Surrogate& model, const Eigen::Ref<const Eigen::MatrixXd>& u_obs,
                             const NewtonOptions& options = {});

struct BoundReport {
  double sigma_x = 0.0;             // posterior standard deviation
  double phi_norm = 0.0;            // ||K(x, X) A^{-1}||_2
  double rkhs_norm_estimate = 0.0;  // plug-in ||f||_{H_K}
  double delta = 0.05;
  double noise_std = 0.0;
  double tail_factor = 0.0;         // sqrt(2 log(2 / delta))
  double mse_bound = 0.0;           // sigma^2 ||f||^2 + noise ||phi||^2
  double pointwise_bound = 0.0;     // sigma ||f|| + noise_std ||phi|| tail_factor
};

double gaussian_tail_factor(double delta);

// Bounds from explicit ingredients; monotone in rkhs_norm and phi_norm.
BoundReport compose_bounds(double sigma_x, double phi_norm, double rkhs_norm, double noise_variance,
                           double delta);

// The RKHS norm of the true edge map is estimated by the trained regressor's
// own norm times rkhs_safety.
BoundReport error_bounds(const Surrogate& model, Index e, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                         double delta, double rkhs_safety = 1.0);

}  // namespace cgp
