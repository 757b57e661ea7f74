#pragma once

// Shared JSON encoders for the dataset and model file formats.

#include <json.hpp>

#include <Eigen/Dense>

#include "cgp/errors.hpp"
#include "cgp/graph.hpp"

namespace cgp::json_io {

using nlohmann::json;

inline const json& require(const json& j, const char* key, const std::string& context) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(context + ": missing '" + key + "' block");
  }
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key, const std::string& context) {
  const json& v = require(j, key, context);
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(context + ": field '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

// Column-major numeric block.
inline json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) data[static_cast<std::size_t>(j * m.rows() + i)] = m(i, j);
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Eigen::MatrixXd matrix_from_json(const json& j, const std::string& context) {
  const auto rows = get<Index>(j, "rows", context);
  const auto cols = get<Index>(j, "cols", context);
  const auto data = get<std::vector<double>>(j, "data", context);
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols) {
    throw SchemaError(context + ": data length does not match rows x cols");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = data[static_cast<std::size_t>(c * rows + r)];
  return m;
}

inline json vector_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Eigen::VectorXd vector_from_json(const json& j, const std::string& context) {
  std::vector<double> data;
  try {
    data = j.get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw SchemaError(context + ": expected an array of numbers");
  }
  return Eigen::Map<Eigen::VectorXd>(data.data(), static_cast<Index>(data.size()));
}

inline json graph_to_json(const DirectedGraph& g) {
  json edges = json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.source, e.target});
  std::vector<bool> vobs, eobs;
  for (Partition p : g.vertex_flags()) vobs.push_back(p == Partition::observed);
  for (Partition p : g.edge_flags()) eobs.push_back(p == Partition::observed);
  return json{{"n_vertices", g.num_vertices()}, {"edges", edges}, {"vertex_observed", vobs}, {"edge_observed", eobs}};
}

inline DirectedGraph graph_from_json(const json& j, const std::string& context) {
  const auto nv = get<Index>(j, "n_vertices", context);
  const auto edges_j = require(j, "edges", context);
  if (!edges_j.is_array()) throw SchemaError(context + ": 'edges' must be an array");
  std::vector<Edge> edges;
  for (const json& e : edges_j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
      throw SchemaError(context + ": each edge must be a [source, target] pair of integers");
    }
    edges.push_back({e[0].get<Index>(), e[1].get<Index>()});
  }
  const auto vobs = get<std::vector<bool>>(j, "vertex_observed", context);
  const auto eobs = get<std::vector<bool>>(j, "edge_observed", context);
  if (static_cast<Index>(vobs.size()) != nv) {
    throw ValidationError(context + ": vertex_observed has " + std::to_string(vobs.size()) + " flags for " +
                          std::to_string(nv) + " vertices");
  }
  std::vector<Partition> vf, ef;
  for (bool b : vobs) vf.push_back(b ? Partition::observed : Partition::unobserved);
  for (bool b : eobs) ef.push_back(b ? Partition::observed : Partition::unobserved);
  return build_graph(std::move(edges), std::move(vf), std::move(ef));
}

inline json parse(const std::string& text, const std::string& context) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(context + ": malformed JSON (" + e.what() + ")");
  }
}

}  // namespace cgp::json_io
