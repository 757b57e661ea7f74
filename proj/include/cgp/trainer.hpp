#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgp/objective.hpp"

namespace cgp {

// Starting point for the unobserved potentials.
//   harmonic: unit-weight Laplacian interpolation of each column's boundary values
//   uniform:  seeded uniform draws within [min, max] of the column's boundary values
enum class PotentialInit { harmonic, uniform };

std::string to_string(PotentialInit p);
PotentialInit parse_potential_init(const std::string& name);

struct TrainConfig {
  long epochs = 200000;
  double lr0 = 1e-3;
  double decay_factor = 0.98;
  long decay_every = 10000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  double log_noise_init = -20.0;
  PotentialInit u_init = PotentialInit::harmonic;
  // Relative loss change over one checkpoint interval below which training
  // stops early. 0 disables early stopping.
  double convergence_tol = 1e-9;
  long checkpoint_every = 1000;
  long trace_every = 10;
  double log_lengthscale_min = -30.0;
  double log_lengthscale_max = 30.0;
  double log_noise_min = -30.0;
  double log_noise_max = 30.0;

  void validate() const;
  // Step decay: lr0 * decay_factor^floor(epoch / decay_every).
  double learning_rate(long epoch) const;
};

// Adam with bias correction, operating on a flat parameter vector.
class Adam {
 public:
  Adam(Index size, double beta1, double beta2, double eps);
  // Applies one update in place. The step counter starts at 1.
  void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad, double lr);
  long steps() const { return t_; }

 private:
  Eigen::VectorXd m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

// Median of |x_i - x_j| over pairs i < j; 0 when fewer than two inputs.
double median_pairwise_distance(const Eigen::Ref<const Eigen::MatrixXd>& inputs);

struct InitResult {
  Params params;
  std::vector<std::string> warnings;
};

// u_un follows config.u_init (uniform draws are seeded). Each log l_e is the log median pairwise distance of the
// edge's inputs under that u_un, falling back to l_e = 1 with a warning.
InitResult init_params(const TrainingProblem& problem, const TrainConfig& config);

struct TraceEntry {
  long epoch = 0;
  double loss = 0.0;
};

struct EdgeModel {
  double log_lengthscale = 0.0;
  Eigen::MatrixXd inputs;   // N x d training inputs
  Eigen::VectorXd targets;  // training fluxes (observed or KKT-recovered)
};

struct TrainedSurrogate {
  DirectedGraph graph;
  Encoding encoding = Encoding::gradient;
  std::vector<EdgeModel> edges;
  double log_noise_variance = 0.0;
  Eigen::MatrixXd u_un_hat;  // V_un x N
  LossBreakdown best_loss;
  long best_epoch = 0;
  long epochs_run = 0;
  std::vector<TraceEntry> loss_trace;
  TrainConfig config;
  std::string dataset_fingerprint;
  std::vector<std::string> warnings;
  bool clamp_active = false;

  double noise_variance() const { return std::exp(log_noise_variance); }
};

class TrainingError : public NumericalError {
 public:
  TrainingError(long epoch, Params snapshot, const std::string& what)
      : NumericalError(what), epoch_(epoch), snapshot_(std::move(snapshot)) {}
  long epoch() const { return epoch_; }
  const Params& snapshot() const { return snapshot_; }

 private:
  long epoch_;
  Params snapshot_;
};

// Builds the surrogate (per-edge training sets) from a parameter state.
TrainedSurrogate make_surrogate(const TrainingProblem& problem, const Params& params);

// Full-batch Adam over (theta, u_un) with step decay. Returns the parameters
// with the lowest loss seen. Throws TrainingError on a non-finite loss.
TrainedSurrogate train(const TrainingProblem& problem, const TrainConfig& config,
                       const std::string& dataset_fingerprint = {});

// Continues from an explicit starting point instead of init_params().
TrainedSurrogate train_from(const TrainingProblem& problem, const TrainConfig& config, Params start,
                            const std::string& dataset_fingerprint = {});

}  // namespace cgp
