#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "cgp/errors.hpp"

namespace cgp {

using Index = Eigen::Index;

struct Edge {
  Index source = 0;
  Index target = 0;
  bool operator==(const Edge&) const = default;
};

enum class Partition : std::uint8_t { observed, unobserved };

// Directed graph with observed/unobserved partitions on vertices and edges.
// Immutable after build_graph() validates it.
//
// Index conventions used throughout the library:
//   - vertices are 0..V-1, edges 0..E-1 in input order;
//   - observed_vertices() / unobserved_vertices() list ids in ascending order,
//     and slot(v) is the position of v inside its partition list. Rows of
//     u_obs / u_un follow these lists; the same holds for edges and F_obs / F_un.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  Index num_vertices() const { return static_cast<Index>(vertex_flags_.size()); }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(Index e) const { return edges_[static_cast<std::size_t>(e)]; }

  Partition vertex_partition(Index v) const { return vertex_flags_[static_cast<std::size_t>(v)]; }
  Partition edge_partition(Index e) const { return edge_flags_[static_cast<std::size_t>(e)]; }
  const std::vector<Partition>& vertex_flags() const { return vertex_flags_; }
  const std::vector<Partition>& edge_flags() const { return edge_flags_; }

  const std::vector<Index>& observed_vertices() const { return obs_vertices_; }
  const std::vector<Index>& unobserved_vertices() const { return un_vertices_; }
  const std::vector<Index>& observed_edges() const { return obs_edges_; }
  const std::vector<Index>& unobserved_edges() const { return un_edges_; }

  Index vertex_slot(Index v) const { return vertex_slot_[static_cast<std::size_t>(v)]; }
  Index edge_slot(Index e) const { return edge_slot_[static_cast<std::size_t>(e)]; }

  // Stable 64-bit fingerprint of topology and partitions.
  std::uint64_t fingerprint() const;

  bool operator==(const DirectedGraph& other) const {
    return edges_ == other.edges_ && vertex_flags_ == other.vertex_flags_ &&
           edge_flags_ == other.edge_flags_;
  }

 private:
  friend DirectedGraph build_graph(std::vector<Edge>, std::vector<Partition>,
                                   std::vector<Partition>);

  std::vector<Edge> edges_;
  std::vector<Partition> vertex_flags_;
  std::vector<Partition> edge_flags_;
  std::vector<Index> obs_vertices_, un_vertices_, obs_edges_, un_edges_;
  std::vector<Index> vertex_slot_, edge_slot_;
};

// Validates and builds a graph. The vertex count is vertex_flags.size().
// Throws ValidationError naming the offending element for self-loops,
// dangling endpoints, flag-count mismatches and disconnected graphs.
DirectedGraph build_graph(std::vector<Edge> edges, std::vector<Partition> vertex_flags,
                          std::vector<Partition> edge_flags);

// E x V incidence matrix D0: -1 at each edge's source, +1 at its target.
Eigen::MatrixXd incidence_matrix(const DirectedGraph& g);

// Rows of D0 restricted to the given edge and vertex id lists.
Eigen::MatrixXd incidence_block(const DirectedGraph& g, const std::vector<Index>& edge_ids,
                                const std::vector<Index>& vertex_ids);

// D0 * u, column by column: entry for e = (a, b) is u_b - u_a.
Eigen::MatrixXd graph_gradient(const DirectedGraph& g, const Eigen::Ref<const Eigen::MatrixXd>& u);

// D0^T * F, column by column: incoming minus outgoing flux at each vertex.
Eigen::MatrixXd graph_divergence(const DirectedGraph& g,
                                 const Eigen::Ref<const Eigen::MatrixXd>& flux);

// Assembles the full V x N potential matrix from observed and unobserved rows.
Eigen::MatrixXd merge_vertex_values(const DirectedGraph& g, const Eigen::Ref<const Eigen::MatrixXd>& u_obs,
                                    const Eigen::Ref<const Eigen::MatrixXd>& u_un);

// Assembles the full E x N flux matrix from observed and unobserved rows.
Eigen::MatrixXd merge_edge_values(const DirectedGraph& g, const Eigen::Ref<const Eigen::MatrixXd>& f_obs,
                                  const Eigen::Ref<const Eigen::MatrixXd>& f_un);

// Max-abs divergence over unobserved (interior) vertices, per column.
Eigen::VectorXd interior_divergence_residual(const DirectedGraph& g,
                                             const Eigen::Ref<const Eigen::MatrixXd>& flux);

// Unit-weight Laplacian interpolation of the observed potentials (V_obs x N)
// onto the unobserved vertices; returns V_un x N.
Eigen::MatrixXd harmonic_extension(const DirectedGraph& g, const Eigen::Ref<const Eigen::MatrixXd>& u_obs);

std::string to_string(Partition p);

}  // namespace cgp
