#include "cgp/graph.hpp"

#include <numeric>

namespace cgp {

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    h ^= (value >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

class DisjointSets {
 public:
  explicit DisjointSets(Index n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }
  Index find(Index x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(Index a, Index b) { parent_[find(a)] = find(b); }

 private:
  std::vector<Index> parent_;
};

void check_rows(const DirectedGraph& g, Index rows, Index expected, const char* what) {
  (void)g;
  if (rows != expected) {
    throw ValidationError(std::string(what) + ": expected " + std::to_string(expected) +
                          " rows, got " + std::to_string(rows));
  }
}

}  // namespace

std::string to_string(Partition p) { return p == Partition::observed ? "observed" : "unobserved"; }

DirectedGraph build_graph(std::vector<Edge> edges, std::vector<Partition> vertex_flags,
                          std::vector<Partition> edge_flags) {
  if (edges.empty()) throw ValidationError("edge list is empty");
  const auto V = static_cast<Index>(vertex_flags.size());
  const auto E = static_cast<Index>(edges.size());
  if (static_cast<Index>(edge_flags.size()) != E) {
    throw ValidationError("partition size mismatch: " + std::to_string(edge_flags.size()) +
                          " edge flags for " + std::to_string(E) + " edges");
  }
  for (Index e = 0; e < E; ++e) {
    const Edge& ed = edges[e];
    if (ed.source == ed.target) {
      throw ValidationError("self-loop at vertex " + std::to_string(ed.source) + " (edge " +
                            std::to_string(e) + ")");
    }
    for (Index v : {ed.source, ed.target}) {
      if (v < 0 || v >= V) {
        throw ValidationError("edge " + std::to_string(e) + " references vertex " +
                              std::to_string(v) + " but the graph has " + std::to_string(V) +
                              " vertices");
      }
    }
  }
  DisjointSets sets(V);
  for (const Edge& ed : edges) sets.unite(ed.source, ed.target);
  const Index root = sets.find(0);
  for (Index v = 1; v < V; ++v) {
    if (sets.find(v) != root) {
      throw ValidationError("graph disconnected: vertex " + std::to_string(v) +
                            " is not reachable from vertex 0");
    }
  }

  DirectedGraph g;
  g.edges_ = std::move(edges);
  g.vertex_flags_ = std::move(vertex_flags);
  g.edge_flags_ = std::move(edge_flags);
  g.vertex_slot_.resize(static_cast<std::size_t>(V));
  g.edge_slot_.resize(static_cast<std::size_t>(E));
  for (Index v = 0; v < V; ++v) {
    auto& list = g.vertex_flags_[v] == Partition::observed ? g.obs_vertices_ : g.un_vertices_;
    g.vertex_slot_[v] = static_cast<Index>(list.size());
    list.push_back(v);
  }
  for (Index e = 0; e < E; ++e) {
    auto& list = g.edge_flags_[e] == Partition::observed ? g.obs_edges_ : g.un_edges_;
    g.edge_slot_[e] = static_cast<Index>(list.size());
    list.push_back(e);
  }
  return g;
}

std::uint64_t DirectedGraph::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a(h, static_cast<std::uint64_t>(num_vertices()));
  h = fnv1a(h, static_cast<std::uint64_t>(num_edges()));
  for (const Edge& e : edges_) {
    h = fnv1a(h, static_cast<std::uint64_t>(e.source));
    h = fnv1a(h, static_cast<std::uint64_t>(e.target));
  }
  for (Partition p : vertex_flags_) h = fnv1a(h, static_cast<std::uint64_t>(p));
  for (Partition p : edge_flags_) h = fnv1a(h, static_cast<std::uint64_t>(p));
  return h;
}

Eigen::MatrixXd incidence_matrix(const DirectedGraph& g) {
  Eigen::MatrixXd d0 = Eigen::MatrixXd::Zero(g.num_edges(), g.num_vertices());
  for (Index e = 0; e < g.num_edges(); ++e) {
    d0(e, g.edge(e).source) = -1.0;
    d0(e, g.edge(e).target) = 1.0;
  }
  return d0;
}

Eigen::MatrixXd incidence_block(const DirectedGraph& g, const std::vector<Index>& edge_ids,
                                const std::vector<Index>& vertex_ids) {
  std::vector<Index> column(static_cast<std::size_t>(g.num_vertices()), -1);
  for (std::size_t j = 0; j < vertex_ids.size(); ++j) column[vertex_ids[j]] = static_cast<Index>(j);
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(static_cast<Index>(edge_ids.size()),
                                                static_cast<Index>(vertex_ids.size()));
  for (std::size_t i = 0; i < edge_ids.size(); ++i) {
    const Edge& ed = g.edge(edge_ids[i]);
    if (Index c = column[ed.source]; c >= 0) block(static_cast<Index>(i), c) = -1.0;
    if (Index c = column[ed.target]; c >= 0) block(static_cast<Index>(i), c) = 1.0;
  }
  return block;
}

Eigen::MatrixXd graph_gradient(const DirectedGraph& g, const Eigen::Ref<const Eigen::MatrixXd>& u) {
  check_rows(g, u.rows(), g.num_vertices(), "graph_gradient");
  Eigen::MatrixXd out(g.num_edges(), u.cols());
  for (Index e = 0; e < g.num_edges(); ++e) {
    out.row(e) = u.row(g.edge(e).target) - u.row(g.edge(e).source);
  }
  return out;
}

Eigen::MatrixXd graph_divergence(const DirectedGraph& g,
                                 const Eigen::Ref<const Eigen::MatrixXd>& flux) {
  check_rows(g, flux.rows(), g.num_edges(), "graph_divergence");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.num_vertices(), flux.cols());
  for (Index e = 0; e < g.num_edges(); ++e) {
    out.row(g.edge(e).source) -= flux.row(e);
    out.row(g.edge(e).target) += flux.row(e);
  }
  return out;
}

Eigen::MatrixXd merge_vertex_values(const DirectedGraph& g, const Eigen::Ref<const Eigen::MatrixXd>& u_obs,
                                    const Eigen::Ref<const Eigen::MatrixXd>& u_un) {
  const auto n_obs = static_cast<Index>(g.observed_vertices().size());
  const auto n_un = static_cast<Index>(g.unobserved_vertices().size());
  check_rows(g, u_obs.rows(), n_obs, "observed potentials");
  check_rows(g, u_un.rows(), n_un, "unobserved potentials");
  const Index cols = n_obs > 0 ? u_obs.cols() : u_un.cols();
  if (n_obs > 0 && n_un > 0 && u_obs.cols() != u_un.cols()) {
    throw ValidationError("observed and unobserved potentials have different column counts");
  }
  Eigen::MatrixXd u(g.num_vertices(), cols);
  for (Index i = 0; i < n_obs; ++i) u.row(g.observed_vertices()[i]) = u_obs.row(i);
  for (Index i = 0; i < n_un; ++i) u.row(g.unobserved_vertices()[i]) = u_un.row(i);
  return u;
}

Eigen::MatrixXd merge_edge_values(const DirectedGraph& g, const Eigen::Ref<const Eigen::MatrixXd>& f_obs,
                                  const Eigen::Ref<const Eigen::MatrixXd>& f_un) {
  const auto n_obs = static_cast<Index>(g.observed_edges().size());
  const auto n_un = static_cast<Index>(g.unobserved_edges().size());
  check_rows(g, f_obs.rows(), n_obs, "observed fluxes");
  check_rows(g, f_un.rows(), n_un, "unobserved fluxes");
  const Index cols = n_obs > 0 ? f_obs.cols() : f_un.cols();
  if (n_obs > 0 && n_un > 0 && f_obs.cols() != f_un.cols()) {
    throw ValidationError("observed and unobserved fluxes have different column counts");
  }
  Eigen::MatrixXd f(g.num_edges(), cols);
  for (Index i = 0; i < n_obs; ++i) f.row(g.observed_edges()[i]) = f_obs.row(i);
  for (Index i = 0; i < n_un; ++i) f.row(g.unobserved_edges()[i]) = f_un.row(i);
  return f;
}

Eigen::VectorXd interior_divergence_residual(const DirectedGraph& g,
                                             const Eigen::Ref<const Eigen::MatrixXd>& flux) {
  const Eigen::MatrixXd div = graph_divergence(g, flux);
  Eigen::VectorXd res = Eigen::VectorXd::Zero(flux.cols());
  for (Index v : g.unobserved_vertices()) {
    res = res.cwiseMax(div.row(v).transpose().cwiseAbs());
  }
  return res;
}

Eigen::MatrixXd harmonic_extension(const DirectedGraph& g, const Eigen::Ref<const Eigen::MatrixXd>& u_obs) {
  const auto vu = static_cast<Index>(g.unobserved_vertices().size());
  if (u_obs.rows() != static_cast<Index>(g.observed_vertices().size())) {
    throw ValidationError("harmonic_extension: u_obs has " + std::to_string(u_obs.rows()) + " rows, expected " +
                          std::to_string(g.observed_vertices().size()));
  }
  if (vu == 0 || u_obs.rows() == 0) return Eigen::MatrixXd::Zero(vu, u_obs.cols());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(vu, vu);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(vu, u_obs.cols());
  for (const Edge& ed : g.edges()) {
    const bool su = g.vertex_partition(ed.source) == Partition::unobserved;
    const bool tu = g.vertex_partition(ed.target) == Partition::unobserved;
    const Index s = g.vertex_slot(ed.source), t = g.vertex_slot(ed.target);
    if (su) l(s, s) += 1.0;
    if (tu) l(t, t) += 1.0;
    if (su && tu) {
      l(s, t) -= 1.0;
      l(t, s) -= 1.0;
    } else if (su) {
      rhs.row(s) += u_obs.row(t);
    } else if (tu) {
      rhs.row(t) += u_obs.row(s);
    }
  }
  // Connected with at least one boundary vertex, so the reduced Laplacian is SPD.
  return l.llt().solve(rhs);
}

}  // namespace cgp
