#pragma once

#include <Eigen/Dense>

#include "cgp/conservation.hpp"
#include "cgp/graph.hpp"
#include "cgp/kernel.hpp"

namespace cgp {

// Boundary data: u_obs is V_obs x N, f_obs is E_obs x N (rows in slot order).
struct Observations {
  Eigen::MatrixXd u_obs;
  Eigen::MatrixXd f_obs;
};

struct TrainingProblem {
  DirectedGraph graph;
  Observations obs;
  Encoding encoding = Encoding::gradient;

  Index n_data() const;
  // Throws ValidationError when the observation shapes disagree with the graph.
  void validate() const;
};

// Trainable quantities: theta = {log l_e, log noise variance} and u_un.
struct Params {
  Eigen::VectorXd log_lengthscales;  // E
  double log_noise_variance = -20.0;
  Eigen::MatrixXd u_un;              // V_un x N

  Hyperparameters hyper(Encoding enc) const { return {log_lengthscales, log_noise_variance, enc}; }

  // Flat layout used by the optimizer: [log l (E), log noise (1), vec_row_major(u_un)].
  Index flat_size() const { return log_lengthscales.size() + 1 + u_un.size(); }
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat);
};

struct LossBreakdown {
  double data_fit_observed = 0.0;     // sum_{e obs} F_e^T A_e^{-1} F_e
  double data_fit_constrained = 0.0;  // b^T S^{-1} b
  double complexity = 0.0;            // sum_e log det A_e
  double total = 0.0;

  double data_fit() const { return data_fit_observed + data_fit_constrained; }
};

struct ParamGradient {
  Eigen::VectorXd d_log_lengthscales;
  double d_log_noise_variance = 0.0;
  Eigen::MatrixXd d_u_un;

  Eigen::VectorXd flatten() const;
};

struct ObjectiveEvaluation {
  LossBreakdown loss;
  ParamGradient gradient;
  FluxSolution flux;
  double max_jitter = 0.0;
};

// Reduced training objective. The inner flux problem is solved in closed form,
// so the loss depends on (theta, u_un) only.
LossBreakdown loss(const TrainingProblem& problem, const Params& params);

// Loss plus its analytic gradient with respect to (theta, u_un).
ObjectiveEvaluation loss_gradient(const TrainingProblem& problem, const Params& params);

}  // namespace cgp
