#include "cgp/model_io.hpp"

#include "cgp/csv.hpp"
#include "json_io.hpp"

namespace cgp {

using json_io::json;

namespace {

json config_to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"lr0", c.lr0},
              {"decay_factor", c.decay_factor},
              {"decay_every", c.decay_every},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"seed", c.seed},
              {"log_noise_init", c.log_noise_init},
              {"u_init", to_string(c.u_init)},
              {"convergence_tol", c.convergence_tol},
              {"checkpoint_every", c.checkpoint_every},
              {"trace_every", c.trace_every},
              {"log_lengthscale_min", c.log_lengthscale_min},
              {"log_lengthscale_max", c.log_lengthscale_max},
              {"log_noise_min", c.log_noise_min},
              {"log_noise_max", c.log_noise_max}};
}

TrainConfig config_from_json(const json& j) {
  const std::string ctx = "model config";
  TrainConfig c;
  c.epochs = json_io::get<long>(j, "epochs", ctx);
  c.lr0 = json_io::get<double>(j, "lr0", ctx);
  c.decay_factor = json_io::get<double>(j, "decay_factor", ctx);
  c.decay_every = json_io::get<long>(j, "decay_every", ctx);
  c.adam_beta1 = json_io::get<double>(j, "adam_beta1", ctx);
  c.adam_beta2 = json_io::get<double>(j, "adam_beta2", ctx);
  c.adam_eps = json_io::get<double>(j, "adam_eps", ctx);
  c.seed = json_io::get<std::uint64_t>(j, "seed", ctx);
  c.log_noise_init = json_io::get<double>(j, "log_noise_init", ctx);
  c.u_init = parse_potential_init(json_io::get<std::string>(j, "u_init", ctx));
  c.convergence_tol = json_io::get<double>(j, "convergence_tol", ctx);
  c.checkpoint_every = json_io::get<long>(j, "checkpoint_every", ctx);
  c.trace_every = json_io::get<long>(j, "trace_every", ctx);
  c.log_lengthscale_min = json_io::get<double>(j, "log_lengthscale_min", ctx);
  c.log_lengthscale_max = json_io::get<double>(j, "log_lengthscale_max", ctx);
  c.log_noise_min = json_io::get<double>(j, "log_noise_min", ctx);
  c.log_noise_max = json_io::get<double>(j, "log_noise_max", ctx);
  return c;
}

json loss_to_json(const LossBreakdown& l) {
  return json{{"data_fit_observed", l.data_fit_observed},
              {"data_fit_constrained", l.data_fit_constrained},
              {"complexity", l.complexity},
              {"total", l.total}};
}

LossBreakdown loss_from_json(const json& j) {
  const std::string ctx = "model loss";
  LossBreakdown l;
  l.data_fit_observed = json_io::get<double>(j, "data_fit_observed", ctx);
  l.data_fit_constrained = json_io::get<double>(j, "data_fit_constrained", ctx);
  l.complexity = json_io::get<double>(j, "complexity", ctx);
  l.total = json_io::get<double>(j, "total", ctx);
  return l;
}

}  // namespace

std::string model_to_json(const TrainedSurrogate& m) {
  json edges = json::array();
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    const EdgeModel& em = m.edges[e];
    edges.push_back(json{{"id", e},
                         {"log_lengthscale", em.log_lengthscale},
                         {"inputs", json_io::matrix_to_json(em.inputs)},
                         {"targets", json_io::vector_to_json(em.targets)}});
  }
  json trace = json::array();
  for (const TraceEntry& t : m.loss_trace) trace.push_back({t.epoch, t.loss});
  json j{{"schema", kModelSchema},
         {"graph", json_io::graph_to_json(m.graph)},
         {"graph_fingerprint", hex64(m.graph.fingerprint())},
         {"dataset_fingerprint", m.dataset_fingerprint},
         {"encoding", to_string(m.encoding)},
         {"log_noise_variance", m.log_noise_variance},
         {"edges", edges},
         {"u_un", json_io::matrix_to_json(m.u_un_hat)},
         {"config", config_to_json(m.config)},
         {"best_loss", loss_to_json(m.best_loss)},
         {"best_epoch", m.best_epoch},
         {"epochs_run", m.epochs_run},
         {"loss_trace", trace},
         {"clamp_active", m.clamp_active},
         {"warnings", m.warnings}};
  return j.dump(1) + "\n";
}

TrainedSurrogate model_from_json(const std::string& text) {
  const std::string ctx = "model file";
  const json j = json_io::parse(text, ctx);
  const auto schema = json_io::get<std::string>(j, "schema", ctx);
  if (schema != kModelSchema) {
    throw SchemaError(ctx + ": schema '" + schema + "' is not " + kModelSchema);
  }
  TrainedSurrogate m;
  m.graph = json_io::graph_from_json(json_io::require(j, "graph", ctx), ctx);
  m.dataset_fingerprint = json_io::get<std::string>(j, "dataset_fingerprint", ctx);
  m.encoding = parse_encoding(json_io::get<std::string>(j, "encoding", ctx));
  m.log_noise_variance = json_io::get<double>(j, "log_noise_variance", ctx);
  const json& edges = json_io::require(j, "edges", ctx);
  if (!edges.is_array() || static_cast<Index>(edges.size()) != m.graph.num_edges()) {
    throw SchemaError(ctx + ": 'edges' must list one model per graph edge");
  }
  for (const json& ej : edges) {
    EdgeModel em;
    em.log_lengthscale = json_io::get<double>(ej, "log_lengthscale", ctx);
    em.inputs = json_io::matrix_from_json(json_io::require(ej, "inputs", ctx), ctx + " edge inputs");
    em.targets = json_io::vector_from_json(json_io::require(ej, "targets", ctx), ctx + " edge targets");
    if (em.inputs.cols() != input_dimension(m.encoding) || em.inputs.rows() != em.targets.size()) {
      throw SchemaError(ctx + ": edge training set shape does not match the encoding");
    }
    m.edges.push_back(std::move(em));
  }
  m.u_un_hat = json_io::matrix_from_json(json_io::require(j, "u_un", ctx), ctx + " u_un");
  m.config = config_from_json(json_io::require(j, "config", ctx));
  m.best_loss = loss_from_json(json_io::require(j, "best_loss", ctx));
  m.best_epoch = json_io::get<long>(j, "best_epoch", ctx);
  m.epochs_run = json_io::get<long>(j, "epochs_run", ctx);
  for (const json& t : json_io::require(j, "loss_trace", ctx)) {
    m.loss_trace.push_back({t.at(0).get<long>(), t.at(1).get<double>()});
  }
  m.clamp_active = json_io::get<bool>(j, "clamp_active", ctx);
  m.warnings = json_io::get<std::vector<std::string>>(j, "warnings", ctx);
  return m;
}

void save_model(const TrainedSurrogate& model, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(model));
}

TrainedSurrogate load_model(const std::filesystem::path& path) { return model_from_json(read_file(path)); }

std::string loss_trace_csv(const TrainedSurrogate& model) {
  CsvTable t({"epoch", "loss"});
  for (const TraceEntry& e : model.loss_trace) {
    t.add(e.epoch).add(e.loss);
    t.end_row();
  }
  return t.str();
}

}  // namespace cgp
