#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "cgp/objective.hpp"

namespace cgp {

inline constexpr const char* kDatasetSchema = "conserv-gp-data/v1";

// Noise-free state of a synthetic dataset.
struct GroundTruth {
  Eigen::MatrixXd u_full;        // V x N
  Eigen::MatrixXd f_full;        // E x N
  Eigen::VectorXd conductances;  // E
};

struct Dataset {
  DirectedGraph graph;
  Observations obs;
  std::optional<GroundTruth> truth;
  Encoding encoding = Encoding::gradient;
  std::string units;

  Index n_data() const { return obs.u_obs.cols(); }
  void validate() const;
  TrainingProblem problem() const { return {graph, obs, encoding}; }
  std::string fingerprint() const;
};

enum class GeneratorKind { toy_series, resistor_network };
enum class BoundarySampling { gaussian, uniform_range };

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::toy_series;
  Index n_vertices = 20;
  Index extra_edges = 5;           // beyond the spanning tree
  double conductance_min = 0.1;    // log-uniform sampling range
  double conductance_max = 10.0;
  double boundary_fraction = 0.2;  // minimum share of boundary vertices
  Index n_samples = 10;
  BoundarySampling sampling = BoundarySampling::gaussian;
  double boundary_std = 1.0;       // gaussian sampling
  double range_lo = 0.0;           // uniform_range sampling
  double range_hi = 1.0;
  double noise_std = 0.0;          // additive, observations only
  std::uint64_t seed = 0;
  Encoding encoding = Encoding::gradient;

  void validate() const;

  // Three unit resistors in series; vertices 0 and 3 and edges 0 and 2 observed.
  static GeneratorConfig toy_series(Index samples, std::uint64_t seed);
  static GeneratorConfig resistor_network(Index vertices, Index extra, Index samples, std::uint64_t seed);
  // 107 vertices / 130 edges, the size of a small discrete fracture network.
  static GeneratorConfig network_107(Index samples, std::uint64_t seed);
};

struct PoissonSolution {
  Eigen::MatrixXd u_full;  // V x N
  Eigen::MatrixXd f_full;  // E x N, F_e = g_e (u_source - u_target)
};

// Weighted graph Laplacian with Dirichlet values on the observed vertices
// (u_boundary is V_obs x N). Throws NumericalError if the reduced Laplacian
// is singular.
PoissonSolution poisson_oracle(const DirectedGraph& g, const Eigen::Ref<const Eigen::VectorXd>& conductances,
                               const Eigen::Ref<const Eigen::MatrixXd>& u_boundary);

Dataset generate(const GeneratorConfig& config);

std::string dataset_to_json(const Dataset& d);
Dataset dataset_from_json(const std::string& text);
void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace cgp
