#include "cgp/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "cgp/csv.hpp"

namespace cgp {

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  if (m % 2 == 1) return values[m / 2];
  const double a = values[m / 2 - 1], b = values[m / 2];
  if (std::isinf(a) && a < 0) return a;
  return 0.5 * (a + b);
}

Histogram make_histogram(const std::vector<double>& values, int bins, double lo, double hi) {
  if (bins < 1 || !(hi > lo)) throw ConfigError("histogram needs bins >= 1 and hi > lo");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  const double w = (hi - lo) / bins;
  for (int i = 0; i <= bins; ++i) h.edges.push_back(lo + w * i);
  for (double v : values) {
    if (std::isnan(v)) continue;
    long k = v <= lo ? 0 : static_cast<long>(std::floor((v - lo) / w));
    k = std::clamp<long>(k, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(k)];
  }
  return h;
}

EvaluationReport evaluate(const Surrogate& model, const Dataset& test, const NewtonOptions& newton,
                          const EvaluationOptions& options) {
  test.validate();
  const DirectedGraph& g = model.graph();
  if (!(g == test.graph)) throw ValidationError("test dataset graph differs from the model graph");
  if (test.encoding != model.model().encoding) {
    throw ValidationError("test dataset encoding '" + to_string(test.encoding) + "' differs from the model's '" +
                          to_string(model.model().encoding) + "'");
  }
  gaussian_tail_factor(options.delta);

  EvaluationReport r;
  r.inference = d2n_evaluate(model, test.obs.u_obs, newton);
  const Eigen::MatrixXd& f = r.inference.f_full;
  const Index m = f.cols();
  r.conservation_residual = interior_divergence_residual(g, f);

  // Reference fluxes; rows without a reference stay NaN.
  Eigen::MatrixXd ref = Eigen::MatrixXd::Constant(g.num_edges(), m, std::numeric_limits<double>::quiet_NaN());
  if (test.truth) {
    ref = test.truth->f_full;
  } else {
    const auto& oe = g.observed_edges();
    for (std::size_t k = 0; k < oe.size(); ++k) ref.row(oe[k]) = test.obs.f_obs.row(static_cast<Index>(k));
  }
  r.edge_mse.resize(g.num_edges());
  for (Index e = 0; e < g.num_edges(); ++e) {
    r.edge_mse(e) = m > 0 ? (f.row(e) - ref.row(e)).squaredNorm() / static_cast<double>(m)
                          : std::numeric_limits<double>::quiet_NaN();
  }

  double num = 0.0, den = 0.0;
  long exceed = 0;
  std::vector<double> ratios;
  for (Index c = 0; c < m; ++c) {
    for (Index e : g.observed_edges()) {
      const Eigen::MatrixXd x = edge_inputs(g, e, r.inference.u_full.col(c), model.model().encoding);
      const BoundReport b = error_bounds(model, e, x.row(0), options.delta, options.rkhs_safety);
      BoundSample s;
      s.column = c;
      s.edge = e;
      s.input = x(0, 0);
      s.prediction = f(e, c);
      s.reference = ref(e, c);
      s.error = s.prediction - s.reference;
      s.sigma_x = b.sigma_x;
      s.bound = b.pointwise_bound;
      const double ae = std::abs(s.error);
      if (ae == 0.0) {
        s.log2_ratio = -std::numeric_limits<double>::infinity();
      } else if (s.bound == 0.0) {
        s.log2_ratio = std::numeric_limits<double>::infinity();
      } else {
        s.log2_ratio = std::log2(ae / s.bound);
      }
      s.exceeds = ae > s.bound;
      exceed += s.exceeds ? 1 : 0;
      num += s.error * s.error;
      den += s.reference * s.reference;
      ratios.push_back(s.log2_ratio);
      r.samples.push_back(s);
    }
  }
  r.exceedance_fraction = r.samples.empty() ? 0.0 : static_cast<double>(exceed) / static_cast<double>(r.samples.size());
  r.median_log2_ratio = median(ratios);
  r.boundary_relative_l2 = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  r.histogram = make_histogram(ratios, options.histogram_bins, options.histogram_lo, options.histogram_hi);
  return r;
}

std::string edge_mse_csv(const EvaluationReport& r) {
  CsvTable t({"edge", "mse"});
  for (Index e = 0; e < r.edge_mse.size(); ++e) {
    t.add(static_cast<long long>(e)).add(r.edge_mse(e));
    t.end_row();
  }
  return t.str();
}

std::string bound_samples_csv(const EvaluationReport& r) {
  CsvTable t({"column", "edge", "input", "prediction", "reference", "error", "sigma", "bound", "log2_ratio",
              "exceeds"});
  for (const BoundSample& s : r.samples) {
    t.add(static_cast<long long>(s.column)).add(static_cast<long long>(s.edge)).add(s.input).add(s.prediction);
    t.add(s.reference).add(s.error).add(s.sigma_x).add(s.bound).add(s.log2_ratio).add(s.exceeds);
    t.end_row();
  }
  return t.str();
}

std::string histogram_csv(const Histogram& h) {
  CsvTable t({"bin_lo", "bin_hi", "count"});
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    t.add(h.edges[k]).add(h.edges[k + 1]).add(static_cast<long long>(h.counts[k]));
    t.end_row();
  }
  return t.str();
}

std::string residuals_csv(const EvaluationReport& r) {
  CsvTable t({"column", "conservation_residual", "newton_iters", "converged", "rank_deficient"});
  for (Index c = 0; c < r.conservation_residual.size(); ++c) {
    const auto k = static_cast<std::size_t>(c);
    t.add(static_cast<long long>(c)).add(r.conservation_residual(c)).add(r.inference.newton_iters[k]);
    t.add(static_cast<bool>(r.inference.converged[k])).add(static_cast<bool>(r.inference.rank_deficient[k]));
    t.end_row();
  }
  return t.str();
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs at least two (x, y) pairs");
  Eigen::MatrixXd a(static_cast<Index>(x.size()), 2);
  Eigen::VectorXd rhs(static_cast<Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw NumericalError("slope fit needs positive values");
    a(static_cast<Index>(i), 0) = std::log(x[i]);
    a(static_cast<Index>(i), 1) = 1.0;
    rhs(static_cast<Index>(i)) = std::log(y[i]);
  }
  return a.colPivHouseholderQr().solve(rhs)(0);
}

ScalingReport bench_epochs(const GeneratorConfig& base, const std::vector<Index>& sizes, int repeats) {
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  ScalingReport rep;
  std::vector<double> xs, ys;
  for (Index n : sizes) {
    GeneratorConfig cfg = base;
    cfg.n_samples = n;
    const Dataset d = generate(cfg);
    const TrainingProblem p = d.problem();
    TrainConfig tc;
    tc.seed = base.seed;
    const Params start = init_params(p, tc).params;
    loss_gradient(p, start);  // warm-up
    std::vector<double> times;
    for (int k = 0; k < repeats; ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      const ObjectiveEvaluation ev = loss_gradient(p, start);
      const auto t1 = std::chrono::steady_clock::now();
      if (!std::isfinite(ev.loss.total)) throw NumericalError("benchmark loss is not finite");
      times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    const double t = median(times);
    rep.timings.push_back({n, t});
    xs.push_back(static_cast<double>(n));
    ys.push_back(t);
  }
  rep.exponent = loglog_slope(xs, ys);
  return rep;
}

}  // namespace cgp
