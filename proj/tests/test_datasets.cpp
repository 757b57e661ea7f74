#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "cgp/datasets.hpp"
#include "helpers.hpp"

using namespace cgp;
using namespace testing;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("cgp_datasets_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Dense oracle: full Laplacian rows for interior vertices, identity rows for
// the boundary, one partial-pivot solve.
Eigen::VectorXd dense_potentials(const DirectedGraph& g, const Eigen::VectorXd& cond, const Eigen::VectorXd& ub) {
  const Index nv = g.num_vertices();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nv, nv);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv);
  for (Index e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    m(ed.source, ed.source) += cond(e);
    m(ed.target, ed.target) += cond(e);
    m(ed.source, ed.target) -= cond(e);
    m(ed.target, ed.source) -= cond(e);
  }
  const auto& bv = g.observed_vertices();
  for (std::size_t k = 0; k < bv.size(); ++k) {
    m.row(bv[k]).setZero();
    m(bv[k], bv[k]) = 1.0;
    rhs(bv[k]) = ub(static_cast<Index>(k));
  }
  return m.partialPivLu().solve(rhs);
}

}  // namespace

TEST_CASE("series voltage divider") {
  const DirectedGraph g = series_graph();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  Eigen::MatrixXd b(2, 2);
  b << 4, 1, 1, 0;
  const PoissonSolution s = poisson_oracle(g, ones, b);
  CHECK((s.u_full.col(0) - Eigen::Vector4d(4, 3, 2, 1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.f_full.col(0) - Eigen::Vector3d(1, 1, 1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.u_full.col(1) - Eigen::Vector4d(1, 2.0 / 3.0, 1.0 / 3.0, 0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.f_full.col(1) - Eigen::Vector3d::Constant(1.0 / 3.0)).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(poisson_oracle(g, -ones, b), ValidationError);
  CHECK_THROWS_AS(poisson_oracle(g, ones, Eigen::MatrixXd::Zero(3, 1)), ValidationError);
}

TEST_CASE("poisson oracle agrees with a dense solve on random networks") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 40; ++t) {
    const Index nv = 3 + static_cast<Index>(rng() % 8);
    const DirectedGraph g = random_graph(nv, static_cast<Index>(rng() % 4), 2, rng);
    const Eigen::VectorXd cond = random_matrix(g.num_edges(), 1, rng, 0.1, 10.0);
    const Eigen::MatrixXd ub = random_matrix(2, 3, rng);
    const PoissonSolution s = poisson_oracle(g, cond, ub);
    CHECK(interior_divergence_residual(g, s.f_full).maxCoeff() <= 1e-10);
    for (Index c = 0; c < 3; ++c) {
      CHECK((s.u_full.col(c) - dense_potentials(g, cond, ub.col(c))).cwiseAbs().maxCoeff() < 1e-10);
      for (Index e = 0; e < g.num_edges(); ++e) {
        const Edge& ed = g.edge(e);
        CHECK(s.f_full(e, c) == doctest::Approx(cond(e) * (s.u_full(ed.source, c) - s.u_full(ed.target, c))));
      }
    }
  }
}

TEST_CASE("toy preset topology") {
  const Dataset d = generate(GeneratorConfig::toy_series(10, 7));
  CHECK(d.graph.num_vertices() == 4);
  CHECK(d.graph.num_edges() == 3);
  CHECK(d.graph.observed_vertices().size() == 2);
  CHECK(d.graph.observed_edges().size() == 2);
  CHECK(d.n_data() == 10);
  REQUIRE(d.truth.has_value());
  CHECK(d.truth->conductances == Eigen::VectorXd::Ones(3));
  CHECK(interior_divergence_residual(d.graph, d.truth->f_full).maxCoeff() <= 1e-10);
}

TEST_CASE("network presets") {
  const Dataset big = generate(GeneratorConfig::network_107(4, 1));
  CHECK(big.graph.num_vertices() == 107);
  CHECK(big.graph.num_edges() == 130);
  CHECK(interior_divergence_residual(big.graph, big.truth->f_full).maxCoeff() <= 1e-10);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset d = generate(GeneratorConfig::resistor_network(20, 5, 3, seed));
    CHECK(d.graph.num_vertices() == 20);
    CHECK(d.graph.num_edges() == 24);
    CHECK(d.graph.observed_vertices().size() >= 4);
    // Every degree-1 vertex is on the boundary; observed edges touch it.
    std::vector<int> degree(20, 0);
    for (const Edge& e : d.graph.edges()) {
      ++degree[static_cast<std::size_t>(e.source)];
      ++degree[static_cast<std::size_t>(e.target)];
    }
    for (Index v = 0; v < 20; ++v)
      if (degree[static_cast<std::size_t>(v)] == 1) CHECK(d.graph.vertex_partition(v) == Partition::observed);
    for (Index e : d.graph.observed_edges()) {
      const Edge& ed = d.graph.edge(e);
      CHECK((d.graph.vertex_partition(ed.source) == Partition::observed ||
             d.graph.vertex_partition(ed.target) == Partition::observed));
    }
    CHECK((d.truth->conductances.array() >= 0.1).all());
    CHECK((d.truth->conductances.array() <= 10.0).all());
    CHECK(d.obs.u_obs.minCoeff() >= 0.0);
    CHECK(d.obs.u_obs.maxCoeff() <= 1.0);
  }
}

TEST_CASE("generation is deterministic") {
  const auto dir = temp_dir("det");
  save_dataset(generate(GeneratorConfig::resistor_network(12, 3, 5, 42)), dir / "a.json");
  save_dataset(generate(GeneratorConfig::resistor_network(12, 3, 5, 42)), dir / "b.json");
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  save_dataset(generate(GeneratorConfig::resistor_network(12, 3, 5, 43)), dir / "c.json");
  CHECK(slurp(dir / "a.json") != slurp(dir / "c.json"));
}

TEST_CASE("save/load round trip is exact") {
  const auto dir = temp_dir("rt");
  GeneratorConfig c = GeneratorConfig::resistor_network(15, 4, 6, 9);
  c.noise_std = 0.01;
  const Dataset d = generate(c);
  save_dataset(d, dir / "d.json");
  const Dataset r = load_dataset(dir / "d.json");
  CHECK(r.graph.edges() == d.graph.edges());
  CHECK(r.graph.vertex_flags() == d.graph.vertex_flags());
  CHECK(r.graph.edge_flags() == d.graph.edge_flags());
  CHECK(r.obs.u_obs == d.obs.u_obs);
  CHECK(r.obs.f_obs == d.obs.f_obs);
  REQUIRE(r.truth.has_value());
  CHECK(r.truth->u_full == d.truth->u_full);
  CHECK(r.truth->f_full == d.truth->f_full);
  CHECK(r.truth->conductances == d.truth->conductances);
  CHECK(r.encoding == d.encoding);
  CHECK(r.units == d.units);
  CHECK(r.fingerprint() == d.fingerprint());
  CHECK(dataset_to_json(r) == dataset_to_json(d));
}

TEST_CASE("load errors") {
  const std::string good = dataset_to_json(generate(GeneratorConfig::toy_series(2, 0)));
  {
    auto j = nlohmann::json::parse(good);
    j["graph"]["edges"][1] = {1, 99};
    try {
      dataset_from_json(j.dump());
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("edge 1") != std::string::npos);
      CHECK(std::string(e.what()).find("99") != std::string::npos);
    }
  }
  {
    auto j = nlohmann::json::parse(good);
    j.erase("F_obs");
    CHECK_THROWS_AS(dataset_from_json(j.dump()), SchemaError);
  }
  {
    auto j = nlohmann::json::parse(good);
    j["schema"] = "conserv-gp-data/v0";
    CHECK_THROWS_AS(dataset_from_json(j.dump()), SchemaError);
  }
  {
    auto j = nlohmann::json::parse(good);
    j["u_obs"]["cols"] = 3;
    CHECK_THROWS_AS(dataset_from_json(j.dump()), SchemaError);
  }
  CHECK_THROWS_AS(dataset_from_json("{not json"), SchemaError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/cgp.json"), std::exception);
}

TEST_CASE("noise is added to observations only") {
  GeneratorConfig c = GeneratorConfig::resistor_network(10, 2, 400, 3);
  c.noise_std = 0.05;
  const Dataset d = generate(c);
  const auto& bv = d.graph.observed_vertices();
  std::vector<double> resid;
  for (std::size_t k = 0; k < bv.size(); ++k)
    for (Index j = 0; j < d.n_data(); ++j)
      resid.push_back(d.obs.u_obs(static_cast<Index>(k), j) - d.truth->u_full(bv[k], j));
  const auto& oe = d.graph.observed_edges();
  for (std::size_t k = 0; k < oe.size(); ++k)
    for (Index j = 0; j < d.n_data(); ++j)
      resid.push_back(d.obs.f_obs(static_cast<Index>(k), j) - d.truth->f_full(oe[k], j));
  double ss = 0.0;
  for (double r : resid) ss += r * r;
  const double std_hat = std::sqrt(ss / static_cast<double>(resid.size()));
  CHECK(std_hat > 0.8 * 0.05);
  CHECK(std_hat < 1.2 * 0.05);
  CHECK(interior_divergence_residual(d.graph, d.truth->f_full).maxCoeff() <= 1e-10);
}

TEST_CASE("generator config validation") {
  GeneratorConfig c = GeneratorConfig::resistor_network(10, 2, 5, 0);
  c.boundary_fraction = 0.1;  // round(1.0) = 1 boundary vertex
  CHECK_THROWS_AS(generate(c), ConfigError);
  c = GeneratorConfig::resistor_network(10, 2, 5, 0);
  c.n_samples = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = GeneratorConfig::resistor_network(10, 2, 5, 0);
  c.conductance_min = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = GeneratorConfig::resistor_network(4, 10, 5, 0);
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
