#include "cgp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace cgp {

std::string to_string(PotentialInit p) { return p == PotentialInit::harmonic ? "harmonic" : "uniform"; }

PotentialInit parse_potential_init(const std::string& name) {
  if (name == "harmonic") return PotentialInit::harmonic;
  if (name == "uniform") return PotentialInit::uniform;
  throw ConfigError("unknown potential initialisation '" + name + "' (expected harmonic or uniform)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw ConfigError("decay_factor must be in (0, 1]");
  if (decay_every < 1) throw ConfigError("decay_every must be >= 1");
  if (checkpoint_every < 1 || trace_every < 1) throw ConfigError("checkpoint/trace cadence must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must be in [0, 1)");
  }
  if (convergence_tol < 0.0) throw ConfigError("convergence_tol must be >= 0");
}

double TrainConfig::learning_rate(long epoch) const {
  return lr0 * std::pow(decay_factor, static_cast<double>(epoch / decay_every));
}

Adam::Adam(Index size, double beta1, double beta2, double eps)
    : m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad, double lr) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

double median_pairwise_distance(const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  const Index n = inputs.rows();
  if (n < 2) return 0.0;
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) dist.push_back((inputs.row(i) - inputs.row(j)).norm());
  std::sort(dist.begin(), dist.end());
  const std::size_t m = dist.size();
  return m % 2 == 1 ? dist[m / 2] : 0.5 * (dist[m / 2 - 1] + dist[m / 2]);
}

InitResult init_params(const TrainingProblem& problem, const TrainConfig& config) {
  problem.validate();
  const DirectedGraph& g = problem.graph;
  const Index n = problem.n_data();
  const auto vu = static_cast<Index>(g.unobserved_vertices().size());
  InitResult out;
  out.params.log_noise_variance = config.log_noise_init;
  out.params.u_un.resize(vu, n);

  std::mt19937_64 rng(config.seed);
  if (config.u_init == PotentialInit::harmonic) out.params.u_un = harmonic_extension(g, problem.obs.u_obs);
  for (Index c = 0; c < n && config.u_init == PotentialInit::uniform; ++c) {
    double lo = 0.0, hi = 0.0;
    if (problem.obs.u_obs.rows() > 0) {
      lo = problem.obs.u_obs.col(c).minCoeff();
      hi = problem.obs.u_obs.col(c).maxCoeff();
    }
    for (Index v = 0; v < vu; ++v) {
      out.params.u_un(v, c) = lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
    }
  }

  const Eigen::MatrixXd u = merge_vertex_values(g, problem.obs.u_obs, out.params.u_un);
  out.params.log_lengthscales.resize(g.num_edges());
  for (Index e = 0; e < g.num_edges(); ++e) {
    const double med = median_pairwise_distance(edge_inputs(g, e, u, problem.encoding));
    if (med > 0.0 && std::isfinite(med)) {
      out.params.log_lengthscales(e) = std::log(med);
    } else {
      out.params.log_lengthscales(e) = 0.0;
      out.warnings.push_back("edge " + std::to_string(e) +
                             ": median pairwise input distance is zero or undefined; using l = 1");
    }
  }
  return out;
}

TrainedSurrogate make_surrogate(const TrainingProblem& problem, const Params& params) {
  const ObjectiveEvaluation ev = loss_gradient(problem, params);
  const DirectedGraph& g = problem.graph;
  const Eigen::MatrixXd u = merge_vertex_values(g, problem.obs.u_obs, params.u_un);
  TrainedSurrogate s;
  s.graph = g;
  s.encoding = problem.encoding;
  s.log_noise_variance = params.log_noise_variance;
  s.u_un_hat = params.u_un;
  s.best_loss = ev.loss;
  s.edges.resize(static_cast<std::size_t>(g.num_edges()));
  for (Index e = 0; e < g.num_edges(); ++e) {
    EdgeModel& m = s.edges[static_cast<std::size_t>(e)];
    m.log_lengthscale = params.log_lengthscales(e);
    m.inputs = edge_inputs(g, e, u, problem.encoding);
    m.targets = g.edge_partition(e) == Partition::observed
                    ? Eigen::VectorXd(problem.obs.f_obs.row(g.edge_slot(e)).transpose())
                    : Eigen::VectorXd(ev.flux.f_un.row(g.edge_slot(e)).transpose());
  }
  return s;
}

namespace {

bool clamp(Params& p, const TrainConfig& c) {
  bool active = false;
  for (Index e = 0; e < p.log_lengthscales.size(); ++e) {
    const double v = std::clamp(p.log_lengthscales(e), c.log_lengthscale_min, c.log_lengthscale_max);
    active |= v != p.log_lengthscales(e);
    p.log_lengthscales(e) = v;
  }
  const double nv = std::clamp(p.log_noise_variance, c.log_noise_min, c.log_noise_max);
  active |= nv != p.log_noise_variance;
  p.log_noise_variance = nv;
  return active;
}

}  // namespace

TrainedSurrogate train(const TrainingProblem& problem, const TrainConfig& config,
                       const std::string& dataset_fingerprint) {
  config.validate();
  InitResult init = init_params(problem, config);
  TrainedSurrogate s = train_from(problem, config, std::move(init.params), dataset_fingerprint);
  s.warnings.insert(s.warnings.begin(), init.warnings.begin(), init.warnings.end());
  return s;
}

TrainedSurrogate train_from(const TrainingProblem& problem, const TrainConfig& config, Params start,
                            const std::string& dataset_fingerprint) {
  config.validate();
  problem.validate();
  Params current = std::move(start);
  bool clamp_active = clamp(current, config);
  Params best = current;
  double best_loss = std::numeric_limits<double>::infinity();
  long best_epoch = 0;
  std::vector<TraceEntry> trace;
  Adam adam(current.flat_size(), config.adam_beta1, config.adam_beta2, config.adam_eps);
  Eigen::VectorXd flat = current.flatten();
  double checkpoint_loss = std::numeric_limits<double>::quiet_NaN();

  long epoch = 0;
  for (; epoch < config.epochs; ++epoch) {
    ObjectiveEvaluation ev;
    try {
      ev = loss_gradient(problem, current);
    } catch (const NumericalError& err) {
      throw TrainingError(epoch, current, "epoch " + std::to_string(epoch) + ": " + err.what());
    }
    const Eigen::VectorXd grad = ev.gradient.flatten();
    if (!std::isfinite(ev.loss.total) || !grad.allFinite()) {
      throw TrainingError(epoch, current, "non-finite loss or gradient at epoch " + std::to_string(epoch));
    }
    if (ev.loss.total < best_loss) {
      best_loss = ev.loss.total;
      best = current;
      best_epoch = epoch;
    }
    if (epoch % config.trace_every == 0) trace.push_back({epoch, ev.loss.total});

    adam.step(flat, grad, config.learning_rate(epoch));
    current.unflatten(flat);
    if (clamp(current, config)) {
      clamp_active = true;
      flat = current.flatten();
    }

    if ((epoch + 1) % config.checkpoint_every == 0) {
      for (Index e = 0; e < current.log_lengthscales.size(); ++e) {
        const double l = std::exp(current.log_lengthscales(e));
        if (!(std::isfinite(l) && l > 0.0)) {
          throw TrainingError(epoch, current, "length scale of edge " + std::to_string(e) + " left (0, inf)");
        }
      }
      const double nv = std::exp(current.log_noise_variance);
      if (!(std::isfinite(nv) && nv > 0.0)) throw TrainingError(epoch, current, "noise variance left (0, inf)");
      if (config.convergence_tol > 0.0 && std::isfinite(checkpoint_loss)) {
        const double rel = std::abs(ev.loss.total - checkpoint_loss) /
                           std::max(std::abs(checkpoint_loss), std::numeric_limits<double>::min());
        if (rel < config.convergence_tol) {
          ++epoch;
          break;
        }
      }
      checkpoint_loss = ev.loss.total;
    }
  }

  // The state after the last update has not been scored yet.
  try {
    const double final_loss = loss(problem, current).total;
    if (std::isfinite(final_loss) && final_loss < best_loss) {
      best_loss = final_loss;
      best = current;
      best_epoch = epoch;
    }
  } catch (const NumericalError&) {
    // keep the best recorded state
  }

  TrainedSurrogate s = make_surrogate(problem, best);
  s.best_epoch = best_epoch;
  s.epochs_run = epoch;
  trace.push_back({epoch, s.best_loss.total});
  s.loss_trace = std::move(trace);
  s.config = config;
  s.dataset_fingerprint = dataset_fingerprint;
  s.clamp_active = clamp_active;
  if (clamp_active) s.warnings.push_back("parameter clamping was active during training");
  return s;
}

}  // namespace cgp
