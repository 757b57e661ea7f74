#include "cgp/inference.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cgp/parallel.hpp"

namespace cgp {

EdgePosterior::EdgePosterior(const EdgeModel& model, double noise_variance)
    : inputs_(model.inputs), lengthscale_(std::exp(model.log_lengthscale)), noise_variance_(noise_variance) {
  if (model.inputs.rows() != model.targets.size()) {
    throw ValidationError("edge model: inputs and targets disagree in length");
  }
  const Eigen::MatrixXd k = kernel_matrix(inputs_, lengthscale_, 0.0);
  Eigen::MatrixXd a = k;
  a.diagonal().array() += noise_variance_;
  factor_ = factorize_spd(a);
  alpha_ = factor_.solve(model.targets);
  rkhs_norm_ = std::sqrt(std::max(0.0, alpha_.dot(k * alpha_)));
}

void EdgePosterior::check_dim(Index d) const {
  if (d != inputs_.cols()) {
    throw ValidationError("query input has dimension " + std::to_string(d) + ", expected " +
                          std::to_string(inputs_.cols()));
  }
}

Eigen::VectorXd EdgePosterior::cross(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  check_dim(x.size());
  Eigen::VectorXd k(inputs_.rows());
  for (Index i = 0; i < inputs_.rows(); ++i) k(i) = std::exp(-(inputs_.row(i) - x).squaredNorm() / lengthscale_);
  return k;
}

Eigen::VectorXd EdgePosterior::phi(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return factor_.solve(cross(x));
}

double EdgePosterior::mean(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return cross(x).dot(alpha_); }

Eigen::RowVectorXd EdgePosterior::mean_gradient(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  check_dim(x.size());
  Eigen::RowVectorXd grad = Eigen::RowVectorXd::Zero(x.size());
  for (Index i = 0; i < inputs_.rows(); ++i) {
    const Eigen::RowVectorXd diff = x - inputs_.row(i);
    grad += alpha_(i) * std::exp(-diff.squaredNorm() / lengthscale_) * (-2.0 / lengthscale_) * diff;
  }
  return grad;
}

double EdgePosterior::variance(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const Eigen::VectorXd k = cross(x);
  return std::max(0.0, 1.0 - k.dot(Eigen::VectorXd(factor_.solve(k))));
}

Surrogate::Surrogate(TrainedSurrogate model) : model_(std::move(model)) {
  if (static_cast<Index>(model_.edges.size()) != model_.graph.num_edges()) {
    throw ValidationError("surrogate needs one edge model per graph edge");
  }
  edges_.reserve(model_.edges.size());
  for (std::size_t e = 0; e < model_.edges.size(); ++e) {
    try {
      edges_.emplace_back(model_.edges[e], model_.noise_variance());
    } catch (const NumericalError& err) {
      throw NumericalError("edge " + std::to_string(e) + ": " + err.what());
    }
  }
}

const EdgePosterior& Surrogate::edge(Index e) const {
  if (e < 0 || e >= static_cast<Index>(edges_.size())) {
    throw ValidationError("unknown edge id " + std::to_string(e));
  }
  return edges_[static_cast<std::size_t>(e)];
}

Eigen::MatrixXd Surrogate::fluxes(const Eigen::Ref<const Eigen::MatrixXd>& u) const {
  const DirectedGraph& g = graph();
  Eigen::MatrixXd f(g.num_edges(), u.cols());
  for (Index e = 0; e < g.num_edges(); ++e) {
    const Eigen::MatrixXd x = edge_inputs(g, e, u, model_.encoding);
    for (Index c = 0; c < u.cols(); ++c) f(e, c) = edges_[e].mean(x.row(c));
  }
  return f;
}

EdgePrediction predict_edge(const Surrogate& model, Index e, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const EdgePosterior& p = model.edge(e);
  return {p.mean(x), p.variance(x)};
}

Index InferenceResult::num_converged() const {
  return static_cast<Index>(std::count(converged.begin(), converged.end(), true));
}

namespace {

struct ColumnOutcome {
  Eigen::VectorXd u;
  Eigen::VectorXd f;
  int iters = 0;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  bool rank_deficient = false;
  int restarts = 0;
};

class ColumnSolver {
 public:
  ColumnSolver(const Surrogate& model, const NewtonOptions& opt) : m_(model), g_(model.graph()), opt_(opt) {}

  ColumnOutcome solve(const Eigen::VectorXd& u_obs, Index column) const {
    const auto vu = static_cast<Index>(g_.unobserved_vertices().size());
    const double lo = u_obs.size() > 0 ? u_obs.minCoeff() : 0.0;
    const double hi = u_obs.size() > 0 ? u_obs.maxCoeff() : 0.0;
    box_hi_ = std::max(0.0, hi);

    ColumnOutcome best;
    if (vu == 0) {
      best.u = assemble(u_obs, Eigen::VectorXd());
      best.f = m_.fluxes(best.u);
      best.residual = 0.0;
      best.converged = true;
      return best;
    }
    std::mt19937_64 rng(opt_.seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(column + 1)));
    for (int attempt = 0; attempt <= opt_.restarts; ++attempt) {
      Eigen::VectorXd start(vu);
      const InitialGuess policy = attempt == 0 ? opt_.initial_guess : InitialGuess::uniform_random;
      if (policy == InitialGuess::harmonic) {
        start = harmonic(u_obs, lo, hi);
      } else if (policy == InitialGuess::midrange) {
        start.setConstant(0.5 * (lo + hi));
      } else {
        for (Index i = 0; i < vu; ++i) start(i) = lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
      }
      if (opt_.box_constraint) project(start);
      ColumnOutcome out = newton(u_obs, start);
      out.restarts = attempt;
      if (attempt == 0 || out.residual < best.residual) {
        const bool deficient = best.rank_deficient || out.rank_deficient;
        const int iters = best.iters + out.iters;
        best = std::move(out);
        best.rank_deficient = deficient;
        best.iters = iters;
      } else {
        best.rank_deficient |= out.rank_deficient;
        best.iters += out.iters;
      }
      if (best.converged) break;
    }
    return best;
  }

 private:
  Eigen::VectorXd assemble(const Eigen::VectorXd& u_obs, const Eigen::VectorXd& u_un) const {
    Eigen::VectorXd u(g_.num_vertices());
    for (std::size_t i = 0; i < g_.observed_vertices().size(); ++i) u(g_.observed_vertices()[i]) = u_obs(static_cast<Index>(i));
    for (std::size_t i = 0; i < g_.unobserved_vertices().size(); ++i) u(g_.unobserved_vertices()[i]) = u_un(static_cast<Index>(i));
    return u;
  }

  Eigen::VectorXd harmonic(const Eigen::VectorXd& u_obs, double lo, double hi) const {
    Eigen::VectorXd x = harmonic_extension(g_, u_obs).col(0);
    if (!x.allFinite()) x.setConstant(0.5 * (lo + hi));
    return x;
  }

  void project(Eigen::VectorXd& u_un) const { u_un = u_un.cwiseMax(0.0).cwiseMin(box_hi_); }

  // Residual at the interior vertices and the posterior-mean fluxes.
  void residual(const Eigen::VectorXd& u, Eigen::VectorXd& r, Eigen::VectorXd& f) const {
    f = m_.fluxes(u);
    const Eigen::MatrixXd div = graph_divergence(g_, f);
    r.resize(static_cast<Index>(g_.unobserved_vertices().size()));
    for (std::size_t i = 0; i < g_.unobserved_vertices().size(); ++i) r(static_cast<Index>(i)) = div(g_.unobserved_vertices()[i], 0);
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) const {
    const auto vu = static_cast<Index>(g_.unobserved_vertices().size());
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(vu, vu);
    const Encoding enc = m_.model().encoding;
    for (Index e = 0; e < g_.num_edges(); ++e) {
      const Edge& ed = g_.edge(e);
      const bool su = g_.vertex_partition(ed.source) == Partition::unobserved;
      const bool tu = g_.vertex_partition(ed.target) == Partition::unobserved;
      if (!su && !tu) continue;
      const Eigen::MatrixXd x = edge_inputs(g_, e, u, enc);
      const Eigen::RowVectorXd dm = m_.edge(e).mean_gradient(x.row(0));
      // d f_e / d u_source and d f_e / d u_target
      const double ds = enc == Encoding::gradient ? -dm(0) : dm(0);
      const double dt = enc == Encoding::gradient ? dm(0) : dm(1);
      // Divergence row: -f_e at the source, +f_e at the target.
      for (auto [v, sign] : {std::pair{ed.source, -1.0}, std::pair{ed.target, 1.0}}) {
        if (g_.vertex_partition(v) != Partition::unobserved) continue;
        const Index row = g_.vertex_slot(v);
        if (su) j(row, g_.vertex_slot(ed.source)) += sign * ds;
        if (tu) j(row, g_.vertex_slot(ed.target)) += sign * dt;
      }
    }
    return j;
  }

  double threshold(const Eigen::VectorXd& f) const {
    const double scale = opt_.scaled_tolerance && f.size() > 0 ? std::max(1.0, f.cwiseAbs().maxCoeff()) : 1.0;
    return opt_.tolerance * scale;
  }

  ColumnOutcome newton(const Eigen::VectorXd& u_obs, Eigen::VectorXd u_un) const {
    ColumnOutcome out;
    Eigen::VectorXd u = assemble(u_obs, u_un);
    Eigen::VectorXd r, f;
    residual(u, r, f);
    double norm = r.norm();
    for (int it = 0; it < opt_.max_iterations; ++it) {
      if (r.cwiseAbs().maxCoeff() <= threshold(f)) {
        out.converged = true;
        break;
      }
      const Eigen::MatrixXd jac = jacobian(u);
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jac);
      if (cod.rank() < jac.cols()) out.rank_deficient = true;
      const Eigen::VectorXd step = cod.solve(-r);
      if (!step.allFinite()) break;
      ++out.iters;

      auto try_step = [&](const Eigen::VectorXd& d) {
        Eigen::VectorXd trial = u_un + d;
        if (opt_.box_constraint) project(trial);
        Eigen::VectorXd u_trial = assemble(u_obs, trial);
        Eigen::VectorXd r_trial, f_trial;
        residual(u_trial, r_trial, f_trial);
        const double n_trial = r_trial.norm();
        if (!(std::isfinite(n_trial) && n_trial < norm)) return false;
        u_un = std::move(trial);
        u = std::move(u_trial);
        r = std::move(r_trial);
        f = std::move(f_trial);
        norm = n_trial;
        return true;
      };
      double t = 1.0;
      bool accepted = false;
      for (int h = 0; h <= opt_.max_halvings && !accepted; ++h, t *= opt_.damping_factor) accepted = try_step(t * step);
      if (!accepted) {
        // Damped least-squares steps when the Newton direction fails, e.g.
        // near a singular Jacobian; mu grows until the residual drops.
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r;
        const double scale = std::max(jtj.diagonal().maxCoeff(), std::numeric_limits<double>::min());
        for (double mu = 1e-8; mu <= 1e8 && !accepted; mu *= 10.0) {
          Eigen::MatrixXd lm = jtj;
          lm.diagonal().array() += mu * scale;
          const Eigen::VectorXd d = lm.ldlt().solve(-jtr);
          if (d.allFinite()) accepted = try_step(d);
        }
      }
      if (!accepted) break;
    }
    if (!out.converged && r.size() > 0 && r.cwiseAbs().maxCoeff() <= threshold(f)) out.converged = true;
    out.u = u;
    out.f = f;
    out.residual = r.size() > 0 ? r.cwiseAbs().maxCoeff() : 0.0;
    return out;
  }

  const Surrogate& m_;
  const DirectedGraph& g_;
  NewtonOptions opt_;
  mutable double box_hi_ = 0.0;
};

}  // namespace

void NewtonOptions::validate() const {
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw ConfigError("Newton tolerance must be positive");
  if (!(damping_factor > 0.0 && damping_factor < 1.0)) throw ConfigError("damping factor must lie in (0, 1)");
  if (max_halvings < 0 || restarts < 0) throw ConfigError("halvings and restarts must be >= 0");
}

InferenceResult infer_potentials(const Surrogate& model, const Eigen::Ref<const Eigen::MatrixXd>& u_obs,
                                 const NewtonOptions& options) {
  options.validate();
  const DirectedGraph& g = model.graph();
  if (u_obs.rows() != static_cast<Index>(g.observed_vertices().size())) {
    throw ValidationError("boundary potentials need one row per observed vertex (" +
                          std::to_string(g.observed_vertices().size()) + "), got " +
                          std::to_string(u_obs.rows()));
  }
  const Index m = u_obs.cols();
  std::vector<ColumnOutcome> cols(static_cast<std::size_t>(m));
  parallel::for_each_index(m, [&](std::ptrdiff_t c) {
    ColumnSolver solver(model, options);
    cols[static_cast<std::size_t>(c)] = solver.solve(u_obs.col(c), c);
  });

  InferenceResult res;
  res.u_full.resize(g.num_vertices(), m);
  res.f_full.resize(g.num_edges(), m);
  res.residual_norm.resize(m);
  for (Index c = 0; c < m; ++c) {
    const ColumnOutcome& o = cols[static_cast<std::size_t>(c)];
    res.u_full.col(c) = o.u;
    res.f_full.col(c) = o.f;
    res.residual_norm(c) = o.residual;
    res.newton_iters.push_back(o.iters);
    res.converged.push_back(o.converged);
    res.rank_deficient.push_back(o.rank_deficient);
    res.restarts_used.push_back(o.restarts);
  }
  return res;
}

InferenceResult d2n_evaluate(const Surrogate& model, const Eigen::Ref<const Eigen::MatrixXd>& u_obs,
                             const NewtonOptions& options) {
  InferenceResult res = infer_potentials(model, u_obs, options);
  if (!options.accept_best_iterate) {
    for (Index c = 0; c < res.columns(); ++c) {
      if (!res.converged[static_cast<std::size_t>(c)]) {
        throw NumericalError("Newton solve did not converge for column " + std::to_string(c) +
                             " (residual " + std::to_string(res.residual_norm(c)) + ")");
      }
    }
  }
  return res;
}

double gaussian_tail_factor(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  return std::sqrt(2.0 * std::log(2.0 / delta));
}

BoundReport compose_bounds(double sigma_x, double phi_norm, double rkhs_norm, double noise_variance,
                           double delta) {
  BoundReport b;
  b.sigma_x = sigma_x;
  b.phi_norm = phi_norm;
  b.rkhs_norm_estimate = rkhs_norm;
  b.delta = delta;
  b.noise_std = std::sqrt(noise_variance);
  b.tail_factor = gaussian_tail_factor(delta);
  b.mse_bound = sigma_x * sigma_x * rkhs_norm * rkhs_norm + noise_variance * phi_norm * phi_norm;
  b.pointwise_bound = sigma_x * rkhs_norm + b.noise_std * phi_norm * b.tail_factor;
  return b;
}

BoundReport error_bounds(const Surrogate& model, Index e, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                         double delta, double rkhs_safety) {
  const EdgePosterior& p = model.edge(e);
  return compose_bounds(std::sqrt(p.variance(x)), p.phi(x).norm(), rkhs_safety * p.rkhs_norm(),
                        p.noise_variance(), delta);
}

}  // namespace cgp
