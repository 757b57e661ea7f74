#include "cgp/objective.hpp"

#include "cgp/parallel.hpp"

namespace cgp {

Index TrainingProblem::n_data() const {
  return obs.f_obs.rows() > 0 ? obs.f_obs.cols() : obs.u_obs.cols();
}

void TrainingProblem::validate() const {
  const auto v_obs = static_cast<Index>(graph.observed_vertices().size());
  const auto e_obs = static_cast<Index>(graph.observed_edges().size());
  if (obs.u_obs.rows() != v_obs) {
    throw ValidationError("u_obs has " + std::to_string(obs.u_obs.rows()) + " rows, expected " +
                          std::to_string(v_obs));
  }
  if (obs.f_obs.rows() != e_obs) {
    throw ValidationError("F_obs has " + std::to_string(obs.f_obs.rows()) + " rows, expected " +
                          std::to_string(e_obs));
  }
  if (v_obs > 0 && e_obs > 0 && obs.u_obs.cols() != obs.f_obs.cols()) {
    throw ValidationError("u_obs and F_obs have different column counts");
  }
  if (n_data() < 1) throw ValidationError("at least one data column is required");
}

Eigen::VectorXd Params::flatten() const {
  Eigen::VectorXd flat(flat_size());
  const Index ne = log_lengthscales.size();
  flat.head(ne) = log_lengthscales;
  flat(ne) = log_noise_variance;
  flat.tail(u_un.size()) = vec_row_major(u_un);
  return flat;
}

void Params::unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != flat_size()) throw ValidationError("Params::unflatten: size mismatch");
  const Index ne = log_lengthscales.size();
  log_lengthscales = flat.head(ne);
  log_noise_variance = flat(ne);
  u_un = unvec_row_major(flat.tail(u_un.size()), u_un.rows(), u_un.cols());
}

Eigen::VectorXd ParamGradient::flatten() const {
  Eigen::VectorXd flat(d_log_lengthscales.size() + 1 + d_u_un.size());
  const Index ne = d_log_lengthscales.size();
  flat.head(ne) = d_log_lengthscales;
  flat(ne) = d_log_noise_variance;
  flat.tail(d_u_un.size()) = vec_row_major(d_u_un);
  return flat;
}

namespace {

struct Evaluated {
  std::vector<EdgeSystem> systems;  // all edges, by edge id
  LossBreakdown loss;
  FluxSolution flux;
  std::vector<Eigen::VectorXd> alpha;  // observed edges: A^{-1} F, by edge id (empty otherwise)
  double max_jitter = 0.0;
};

Evaluated evaluate(const TrainingProblem& problem, const Params& params) {
  problem.validate();
  const DirectedGraph& g = problem.graph;
  const Index n = problem.n_data();
  if (params.u_un.rows() != static_cast<Index>(g.unobserved_vertices().size()) ||
      (params.u_un.size() > 0 && params.u_un.cols() != n)) {
    throw ValidationError("u_un must be V_un x N_data");
  }
  if (!params.log_lengthscales.allFinite() || !std::isfinite(params.log_noise_variance)) {
    throw NumericalError("non-finite hyperparameters");
  }
  const Eigen::MatrixXd u_un = params.u_un.size() > 0 ? params.u_un
                                                      : Eigen::MatrixXd::Zero(params.u_un.rows(), n);
  const Eigen::MatrixXd u = merge_vertex_values(g, problem.obs.u_obs, u_un);

  std::vector<Index> all_edges(static_cast<std::size_t>(g.num_edges()));
  for (Index e = 0; e < g.num_edges(); ++e) all_edges[e] = e;

  Evaluated ev;
  ev.systems = build_edge_systems(g, params.hyper(problem.encoding), u, all_edges);
  ev.alpha.resize(all_edges.size());

  parallel::for_each_index(static_cast<std::ptrdiff_t>(g.observed_edges().size()), [&](std::ptrdiff_t k) {
    const Index e = g.observed_edges()[static_cast<std::size_t>(k)];
    ev.alpha[e] = ev.systems[e].factor.solve(problem.obs.f_obs.row(k).transpose());
  });
  // Reductions run serially in edge order so the result is independent of the thread count.
  for (std::size_t k = 0; k < g.observed_edges().size(); ++k) {
    const Index e = g.observed_edges()[k];
    ev.loss.data_fit_observed += problem.obs.f_obs.row(static_cast<Index>(k)).dot(ev.alpha[e]);
  }
  for (const EdgeSystem& s : ev.systems) {
    ev.loss.complexity += s.factor.logdet;
    ev.max_jitter = std::max(ev.max_jitter, s.factor.jitter);
  }

  std::vector<EdgeSystem> un_blocks;
  un_blocks.reserve(g.unobserved_edges().size());
  for (Index e : g.unobserved_edges()) un_blocks.push_back(ev.systems[e]);
  ev.flux = solve_flux(assemble_kkt(g, std::move(un_blocks), problem.obs.f_obs));
  ev.loss.data_fit_constrained = ev.flux.data_fit;
  ev.loss.total = ev.loss.data_fit_observed + ev.loss.data_fit_constrained + ev.loss.complexity;
  return ev;
}

}  // namespace

LossBreakdown loss(const TrainingProblem& problem, const Params& params) {
  return evaluate(problem, params).loss;
}

// Every term has the form q(A_e) = w^T A_e^{-1} w or log det A_e, so
//   dL = sum_e tr(W_e dA_e),  W_e = A_e^{-1} - c_e c_e^T,
// where c_e = A_e^{-1} F_e for observed edges and c_e = weights_e (the
// back-substituted S^{-1} b mapped onto edge e) for unobserved edges; the
// latter follows from d(b^T S^{-1} b) = -beta^T dS beta and b not depending on u.
ObjectiveEvaluation loss_gradient(const TrainingProblem& problem, const Params& params) {
  Evaluated ev = evaluate(problem, params);
  const DirectedGraph& g = problem.graph;
  const Index n = problem.n_data();
  const Index ne = g.num_edges();
  const int d = input_dimension(problem.encoding);
  const double noise = std::exp(params.log_noise_variance);

  Eigen::VectorXd d_log_l(ne);
  Eigen::VectorXd trace_w(ne);
  std::vector<Eigen::MatrixXd> d_inputs(static_cast<std::size_t>(ne));

  parallel::for_each_index(ne, [&](std::ptrdiff_t e) {
    const EdgeSystem& s = ev.systems[e];
    Eigen::MatrixXd w = s.factor.inverse();
    if (g.edge_partition(e) == Partition::observed) {
      w.noalias() -= ev.alpha[e] * ev.alpha[e].transpose();
    } else {
      const Eigen::VectorXd c = ev.flux.weights.row(g.edge_slot(e)).transpose();
      w.noalias() -= c * c.transpose();
    }
    const double ell = std::exp(params.log_lengthscales(e));
    double dl = 0.0;
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(n, d);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) {
        if (i == j) continue;
        const double wk = w(i, j) * s.kernel(i, j);
        const Eigen::RowVectorXd diff = s.inputs.row(i) - s.inputs.row(j);
        dl += wk * diff.squaredNorm() / ell;
        // d K_ij / d x_i = -2 (x_i - x_j) / l * K_ij, counted twice by symmetry of W.
        dx.row(i) += (-4.0 / ell) * wk * diff;
      }
    }
    d_log_l(e) = dl;
    trace_w(e) = w.trace();
    d_inputs[static_cast<std::size_t>(e)] = std::move(dx);
  });

  ObjectiveEvaluation out;
  out.loss = ev.loss;
  out.max_jitter = ev.max_jitter;
  out.gradient.d_log_lengthscales = d_log_l;
  double tr = 0.0;
  for (Index e = 0; e < ne; ++e) tr += trace_w(e);
  out.gradient.d_log_noise_variance = noise * tr;

  // Chain rule from edge inputs to unobserved potentials.
  out.gradient.d_u_un = Eigen::MatrixXd::Zero(static_cast<Index>(g.unobserved_vertices().size()), n);
  for (Index e = 0; e < ne; ++e) {
    const Edge& ed = g.edge(e);
    const Eigen::MatrixXd& dx = d_inputs[static_cast<std::size_t>(e)];
    const bool src_un = g.vertex_partition(ed.source) == Partition::unobserved;
    const bool tgt_un = g.vertex_partition(ed.target) == Partition::unobserved;
    if (problem.encoding == Encoding::gradient) {
      if (src_un) out.gradient.d_u_un.row(g.vertex_slot(ed.source)) -= dx.col(0).transpose();
      if (tgt_un) out.gradient.d_u_un.row(g.vertex_slot(ed.target)) += dx.col(0).transpose();
    } else {
      if (src_un) out.gradient.d_u_un.row(g.vertex_slot(ed.source)) += dx.col(0).transpose();
      if (tgt_un) out.gradient.d_u_un.row(g.vertex_slot(ed.target)) += dx.col(1).transpose();
    }
  }
  out.flux = std::move(ev.flux);
  return out;
}

}  // namespace cgp
