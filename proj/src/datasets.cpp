#include "cgp/datasets.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "cgp/csv.hpp"
#include "json_io.hpp"

namespace cgp {

using json_io::json;

void Dataset::validate() const {
  problem().validate();
  if (truth) {
    if (truth->u_full.rows() != graph.num_vertices() || truth->f_full.rows() != graph.num_edges() ||
        truth->u_full.cols() != n_data() || truth->f_full.cols() != n_data()) {
      throw ValidationError("ground truth shapes disagree with the graph or column count");
    }
    if (truth->conductances.size() != 0 && truth->conductances.size() != graph.num_edges()) {
      throw ValidationError("ground truth needs one conductance per edge");
    }
  }
}

std::string Dataset::fingerprint() const { return hex64(fnv1a64(dataset_to_json(*this))); }

void GeneratorConfig::validate() const {
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (!(conductance_min > 0.0 && conductance_max >= conductance_min)) {
    throw ConfigError("conductance range must be positive and ordered");
  }
  if (noise_std < 0.0) throw ConfigError("noise_std must be >= 0");
  if (sampling == BoundarySampling::gaussian && !(boundary_std > 0.0)) throw ConfigError("boundary_std must be positive");
  if (sampling == BoundarySampling::uniform_range && !(range_hi > range_lo)) throw ConfigError("range_hi must exceed range_lo");
  if (kind == GeneratorKind::resistor_network) {
    if (n_vertices < 3) throw ConfigError("resistor networks need at least 3 vertices");
    if (extra_edges < 0) throw ConfigError("extra_edges must be >= 0");
    const Index max_edges = n_vertices * (n_vertices - 1) / 2;
    if (n_vertices - 1 + extra_edges > max_edges) throw ConfigError("too many extra edges for a simple graph");
    if (!(boundary_fraction >= 0.0 && boundary_fraction <= 1.0)) throw ConfigError("boundary_fraction must lie in [0, 1]");
    if (std::llround(boundary_fraction * static_cast<double>(n_vertices)) < 2) {
      throw ConfigError("boundary_fraction " + format_double(boundary_fraction) + " yields fewer than 2 boundary vertices");
    }
  }
}

GeneratorConfig GeneratorConfig::toy_series(Index samples, std::uint64_t seed) {
  GeneratorConfig c;
  c.kind = GeneratorKind::toy_series;
  c.n_vertices = 4;
  c.extra_edges = 0;
  c.conductance_min = c.conductance_max = 1.0;
  c.n_samples = samples;
  c.sampling = BoundarySampling::gaussian;
  c.seed = seed;
  return c;
}

GeneratorConfig GeneratorConfig::resistor_network(Index vertices, Index extra, Index samples, std::uint64_t seed) {
  GeneratorConfig c;
  c.kind = GeneratorKind::resistor_network;
  c.n_vertices = vertices;
  c.extra_edges = extra;
  c.n_samples = samples;
  c.sampling = BoundarySampling::uniform_range;
  c.seed = seed;
  return c;
}

GeneratorConfig GeneratorConfig::network_107(Index samples, std::uint64_t seed) {
  GeneratorConfig c = resistor_network(107, 24, samples, seed);
  c.boundary_fraction = 17.0 / 107.0;
  return c;
}

PoissonSolution poisson_oracle(const DirectedGraph& g, const Eigen::Ref<const Eigen::VectorXd>& conductances,
                               const Eigen::Ref<const Eigen::MatrixXd>& u_boundary) {
  const auto& bv = g.observed_vertices();
  const auto& iv = g.unobserved_vertices();
  if (bv.empty()) throw ValidationError("poisson_oracle: the boundary vertex set is empty");
  if (conductances.size() != g.num_edges()) throw ValidationError("poisson_oracle: one conductance per edge required");
  if ((conductances.array() <= 0.0).any()) throw ValidationError("poisson_oracle: conductances must be positive");
  if (u_boundary.rows() != static_cast<Index>(bv.size())) {
    throw ValidationError("poisson_oracle: boundary potentials need one row per observed vertex");
  }
  const Index n = u_boundary.cols();
  const auto ni = static_cast<Index>(iv.size());
  Eigen::MatrixXd l_ii = Eigen::MatrixXd::Zero(ni, ni);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ni, n);
  for (Index e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    const double c = conductances(e);
    const bool si = g.vertex_partition(ed.source) == Partition::unobserved;
    const bool ti = g.vertex_partition(ed.target) == Partition::unobserved;
    const Index s = g.vertex_slot(ed.source), t = g.vertex_slot(ed.target);
    if (si) l_ii(s, s) += c;
    if (ti) l_ii(t, t) += c;
    if (si && ti) {
      l_ii(s, t) -= c;
      l_ii(t, s) -= c;
    } else if (si) {
      rhs.row(s) += c * u_boundary.row(t);
    } else if (ti) {
      rhs.row(t) += c * u_boundary.row(s);
    }
  }
  PoissonSolution sol;
  Eigen::MatrixXd u_int(ni, n);
  if (ni > 0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(l_ii);
    if (!lu.isInvertible()) throw NumericalError("poisson_oracle: reduced Laplacian is singular (disconnected interior)");
    u_int = lu.solve(rhs);
    // One step of iterative refinement keeps interior conservation at round-off level.
    u_int += lu.solve(rhs - l_ii * u_int);
  }
  sol.u_full = merge_vertex_values(g, u_boundary, u_int);
  sol.f_full.resize(g.num_edges(), n);
  for (Index e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    sol.f_full.row(e) = conductances(e) * (sol.u_full.row(ed.source) - sol.u_full.row(ed.target));
  }
  return sol;
}

namespace {

DirectedGraph random_network(const GeneratorConfig& c, std::mt19937_64& rng) {
  const Index nv = c.n_vertices;
  std::vector<Edge> edges;
  std::set<std::pair<Index, Index>> used;
  auto add = [&](Index a, Index b) {
    if (std::bernoulli_distribution(0.5)(rng)) std::swap(a, b);
    edges.push_back({a, b});
    used.insert({std::min(a, b), std::max(a, b)});
  };
  for (Index v = 1; v < nv; ++v) add(std::uniform_int_distribution<Index>(0, v - 1)(rng), v);
  std::uniform_int_distribution<Index> pick(0, nv - 1);
  for (Index k = 0; k < c.extra_edges;) {
    const Index a = pick(rng), b = pick(rng);
    if (a == b || used.count({std::min(a, b), std::max(a, b)})) continue;
    add(a, b);
    ++k;
  }

  std::vector<int> degree(static_cast<std::size_t>(nv), 0);
  for (const Edge& e : edges) {
    ++degree[e.source];
    ++degree[e.target];
  }
  std::vector<Partition> vflags(static_cast<std::size_t>(nv), Partition::unobserved);
  Index n_boundary = 0;
  std::vector<Index> others;
  for (Index v = 0; v < nv; ++v) {
    if (degree[v] == 1) {
      vflags[v] = Partition::observed;
      ++n_boundary;
    } else {
      others.push_back(v);
    }
  }
  const Index target = std::max<Index>(2, std::llround(c.boundary_fraction * static_cast<double>(nv)));
  std::shuffle(others.begin(), others.end(), rng);
  for (std::size_t k = 0; n_boundary < target && k < others.size(); ++k, ++n_boundary) {
    vflags[others[k]] = Partition::observed;
  }
  std::vector<Partition> eflags;
  for (const Edge& e : edges) {
    const bool boundary = vflags[e.source] == Partition::observed || vflags[e.target] == Partition::observed;
    eflags.push_back(boundary ? Partition::observed : Partition::unobserved);
  }
  return build_graph(std::move(edges), std::move(vflags), std::move(eflags));
}

DirectedGraph toy_graph() {
  return build_graph({{0, 1}, {1, 2}, {2, 3}},
                     {Partition::observed, Partition::unobserved, Partition::unobserved, Partition::observed},
                     {Partition::observed, Partition::unobserved, Partition::observed});
}

}  // namespace

Dataset generate(const GeneratorConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  Dataset d;
  d.encoding = config.encoding;
  d.graph = config.kind == GeneratorKind::toy_series ? toy_graph() : random_network(config, rng);
  const DirectedGraph& g = d.graph;

  Eigen::VectorXd cond(g.num_edges());
  const double lo = std::log(config.conductance_min), hi = std::log(config.conductance_max);
  for (Index e = 0; e < g.num_edges(); ++e) {
    cond(e) = lo == hi ? config.conductance_min : std::exp(std::uniform_real_distribution<double>(lo, hi)(rng));
  }

  const auto nb = static_cast<Index>(g.observed_vertices().size());
  Eigen::MatrixXd ub(nb, config.n_samples);
  for (Index c = 0; c < config.n_samples; ++c) {
    for (Index i = 0; i < nb; ++i) {
      ub(i, c) = config.sampling == BoundarySampling::gaussian
                     ? std::normal_distribution<double>(0.0, config.boundary_std)(rng)
                     : std::uniform_real_distribution<double>(config.range_lo, config.range_hi)(rng);
    }
  }
  PoissonSolution sol = poisson_oracle(g, cond, ub);

  d.obs.u_obs = ub;
  d.obs.f_obs.resize(static_cast<Index>(g.observed_edges().size()), config.n_samples);
  for (std::size_t k = 0; k < g.observed_edges().size(); ++k) {
    d.obs.f_obs.row(static_cast<Index>(k)) = sol.f_full.row(g.observed_edges()[k]);
  }
  if (config.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, config.noise_std);
    for (Index j = 0; j < d.obs.u_obs.cols(); ++j)
      for (Index i = 0; i < d.obs.u_obs.rows(); ++i) d.obs.u_obs(i, j) += noise(rng);
    for (Index j = 0; j < d.obs.f_obs.cols(); ++j)
      for (Index i = 0; i < d.obs.f_obs.rows(); ++i) d.obs.f_obs(i, j) += noise(rng);
  }
  d.truth = GroundTruth{std::move(sol.u_full), std::move(sol.f_full), std::move(cond)};
  d.units = config.kind == GeneratorKind::toy_series ? "potential: V, flux: A" : "potential: head, flux: volumetric rate";
  return d;
}

std::string dataset_to_json(const Dataset& d) {
  json j{{"schema", kDatasetSchema},
         {"graph", json_io::graph_to_json(d.graph)},
         {"encoding", to_string(d.encoding)},
         {"units", d.units},
         {"n_data", d.n_data()},
         {"u_obs", json_io::matrix_to_json(d.obs.u_obs)},
         {"F_obs", json_io::matrix_to_json(d.obs.f_obs)}};
  if (d.truth) {
    j["ground_truth"] = json{{"u_full", json_io::matrix_to_json(d.truth->u_full)},
                             {"F_full", json_io::matrix_to_json(d.truth->f_full)},
                             {"conductances", json_io::vector_to_json(d.truth->conductances)}};
  }
  return j.dump(1) + "\n";
}

Dataset dataset_from_json(const std::string& text) {
  const std::string ctx = "dataset file";
  const json j = json_io::parse(text, ctx);
  const auto schema = json_io::get<std::string>(j, "schema", ctx);
  if (schema != kDatasetSchema) throw SchemaError(ctx + ": schema '" + schema + "' is not " + kDatasetSchema);
  Dataset d;
  d.graph = json_io::graph_from_json(json_io::require(j, "graph", ctx), ctx);
  d.encoding = parse_encoding(json_io::get<std::string>(j, "encoding", ctx));
  d.units = j.value("units", std::string());
  d.obs.u_obs = json_io::matrix_from_json(json_io::require(j, "u_obs", ctx), ctx + " u_obs");
  d.obs.f_obs = json_io::matrix_from_json(json_io::require(j, "F_obs", ctx), ctx + " F_obs");
  if (j.contains("ground_truth")) {
    const json& t = j.at("ground_truth");
    GroundTruth gt;
    gt.u_full = json_io::matrix_from_json(json_io::require(t, "u_full", ctx), ctx + " ground truth u_full");
    gt.f_full = json_io::matrix_from_json(json_io::require(t, "F_full", ctx), ctx + " ground truth F_full");
    if (t.contains("conductances")) gt.conductances = json_io::vector_from_json(t.at("conductances"), ctx);
    d.truth = std::move(gt);
  }
  const auto n = json_io::get<Index>(j, "n_data", ctx);
  if (n != d.obs.u_obs.cols() && d.obs.u_obs.rows() > 0) throw ValidationError(ctx + ": n_data disagrees with u_obs");
  d.validate();
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) { write_file_atomic(path, dataset_to_json(d)); }

Dataset load_dataset(const std::filesystem::path& path) { return dataset_from_json(read_file(path)); }

}  // namespace cgp
