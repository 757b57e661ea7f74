#include "cgp/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>

#include "cgp/csv.hpp"
#include "cgp/datasets.hpp"
#include "cgp/evaluation.hpp"
#include "cgp/inference.hpp"
#include "cgp/model_io.hpp"
#include "cgp/parallel.hpp"
#include "json_io.hpp"

namespace cgp {

using json_io::json;
namespace fs = std::filesystem;

namespace {

class PhaseTimer {
 public:
  void start(const std::string& name) {
    name_ = name;
    t0_ = std::chrono::steady_clock::now();
  }
  void stop() { timings_[name_] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }
  const json& timings() const { return timings_; }

 private:
  std::string name_;
  std::chrono::steady_clock::time_point t0_;
  json timings_ = json::object();
};

// NaN and infinities have no JSON literal; they are written as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_manifest(const fs::path& dir, const std::string& command, const json& config, std::uint64_t seed,
                    const std::string& dataset_fp, const std::string& model_fp, const json& timings,
                    long warnings, const json& extra = json::object()) {
  json m{{"command", command},
         {"tool_version", kToolVersion},
         {"config", config},
         {"seed", seed},
         {"dataset_fingerprint", dataset_fp},
         {"model_fingerprint", model_fp},
         {"threads", parallel::num_threads()},
         {"openmp", parallel::openmp_enabled()},
         {"timings_seconds", timings},
         {"warnings", warnings}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_file_atomic(dir / "manifest.json", m.dump(1) + "\n");
}

std::string model_fingerprint(const TrainedSurrogate& m) { return hex64(fnv1a64(model_to_json(m))); }

struct NewtonFlags {
  int max_iter = 100;
  double tol = 1e-10;
  bool box = false;
  int restarts = 5;
  std::uint64_t seed = 0;
  std::string initial = "harmonic";

  void add(CLI::App* app) {
    app->add_option("--max-iter", max_iter, "Newton iteration limit")->check(CLI::PositiveNumber);
    app->add_option("--tol", tol, "Conservation residual tolerance")->check(CLI::PositiveNumber);
    app->add_flag("--box", box, "Keep interior potentials within [0, max boundary potential]");
    app->add_option("--restarts", restarts, "Random restarts for stalled solves")->check(CLI::NonNegativeNumber);
    app->add_option("--newton-seed", seed, "Seed for restart draws");
    app->add_option("--initial", initial, "Initial guess")
        ->check(CLI::IsMember({"harmonic", "uniform", "midrange"}));
  }
  NewtonOptions options() const {
    NewtonOptions o;
    o.max_iterations = max_iter;
    o.tolerance = tol;
    o.box_constraint = box;
    o.restarts = restarts;
    o.seed = seed;
    o.initial_guess = initial == "uniform"    ? InitialGuess::uniform_random
                      : initial == "midrange" ? InitialGuess::midrange
                                              : InitialGuess::harmonic;
    return o;
  }
  json snapshot() const {
    return {{"max_iter", max_iter}, {"tol", tol}, {"box", box}, {"restarts", restarts}, {"newton_seed", seed},
            {"initial", initial}};
  }
};

// generate -------------------------------------------------------------------

struct GenerateFlags {
  std::string preset = "toy-series";
  long samples = 10;
  std::uint64_t seed = 0;
  std::optional<long> vertices, extra_edges;
  std::optional<double> boundary_fraction, boundary_std, range_lo, range_hi, cond_min, cond_max;
  std::optional<std::string> sampling;
  double noise_std = 0.0;
  std::string encoding = "gradient";
  std::string name = "dataset.json";
  bool csv = false;
  std::string out;
};

GeneratorConfig generator_config(const GenerateFlags& f) {
  GeneratorConfig c;
  if (f.preset == "toy-series") {
    c = GeneratorConfig::toy_series(f.samples, f.seed);
  } else if (f.preset == "network-107") {
    c = GeneratorConfig::network_107(f.samples, f.seed);
  } else {
    c = GeneratorConfig::resistor_network(f.vertices.value_or(20), f.extra_edges.value_or(5), f.samples, f.seed);
  }
  if (f.preset == "toy-series" && (f.vertices || f.extra_edges || f.boundary_fraction)) {
    throw ConfigError("the toy-series preset has a fixed topology; --vertices, --extra-edges and "
                      "--boundary-fraction do not apply");
  }
  if (f.preset == "network-107" && (f.vertices || f.extra_edges)) {
    throw ConfigError("the network-107 preset fixes --vertices and --extra-edges");
  }
  if (f.boundary_fraction) c.boundary_fraction = *f.boundary_fraction;
  if (f.sampling) c.sampling = *f.sampling == "gaussian" ? BoundarySampling::gaussian : BoundarySampling::uniform_range;
  if (f.boundary_std) c.boundary_std = *f.boundary_std;
  if (f.range_lo) c.range_lo = *f.range_lo;
  if (f.range_hi) c.range_hi = *f.range_hi;
  if (f.cond_min) c.conductance_min = *f.cond_min;
  if (f.cond_max) c.conductance_max = *f.cond_max;
  c.noise_std = f.noise_std;
  c.encoding = parse_encoding(f.encoding);
  return c;
}

json generator_snapshot(const GeneratorConfig& c, const std::string& preset) {
  return {{"preset", preset},
          {"n_vertices", c.n_vertices},
          {"extra_edges", c.extra_edges},
          {"conductance_min", c.conductance_min},
          {"conductance_max", c.conductance_max},
          {"boundary_fraction", c.boundary_fraction},
          {"n_samples", c.n_samples},
          {"sampling", c.sampling == BoundarySampling::gaussian ? "gaussian" : "uniform"},
          {"boundary_std", c.boundary_std},
          {"range_lo", c.range_lo},
          {"range_hi", c.range_hi},
          {"noise_std", c.noise_std},
          {"seed", c.seed},
          {"encoding", to_string(c.encoding)}};
}

int cmd_generate(const GenerateFlags& f, std::ostream& out) {
  PhaseTimer timer;
  const GeneratorConfig cfg = generator_config(f);
  timer.start("generate");
  const Dataset d = generate(cfg);
  timer.stop();
  timer.start("write");
  const fs::path dir(f.out);
  save_dataset(d, dir / f.name);
  if (f.csv) {
    write_file_atomic(dir / "u_obs.csv", matrix_to_csv(d.obs.u_obs));
    write_file_atomic(dir / "F_obs.csv", matrix_to_csv(d.obs.f_obs));
    if (d.truth) {
      write_file_atomic(dir / "u_full.csv", matrix_to_csv(d.truth->u_full));
      write_file_atomic(dir / "F_full.csv", matrix_to_csv(d.truth->f_full));
    }
  }
  timer.stop();
  const std::string fp = d.fingerprint();
  write_manifest(dir, "generate", generator_snapshot(cfg, f.preset), cfg.seed, fp, "", timer.timings(), 0,
                 {{"outputs", {f.name}}});
  out << "wrote " << (dir / f.name).string() << ": V=" << d.graph.num_vertices() << " E=" << d.graph.num_edges()
      << " V_obs=" << d.graph.observed_vertices().size() << " E_obs=" << d.graph.observed_edges().size()
      << " N_data=" << d.n_data() << "\n";
  return 0;
}

// train ----------------------------------------------------------------------

struct TrainFlags {
  std::string data, out;
  std::optional<std::string> encoding;
  TrainConfig cfg;
};

json train_snapshot(const TrainConfig& c, const std::string& encoding, const std::string& data) {
  return {{"data", data},
          {"encoding", encoding},
          {"epochs", c.epochs},
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
          {"checkpoint_every", c.checkpoint_every}};
}

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
  PhaseTimer timer;
  f.cfg.validate();
  timer.start("load");
  Dataset d = load_dataset(f.data);
  if (f.encoding) d.encoding = parse_encoding(*f.encoding);
  const std::string dfp = d.fingerprint();
  timer.stop();
  const fs::path dir(f.out);
  const json snap = train_snapshot(f.cfg, to_string(d.encoding), f.data);
  TrainedSurrogate model;
  timer.start("train");
  try {
    model = train(d.problem(), f.cfg, dfp);
  } catch (const TrainingError& e) {
    timer.stop();
    const Params& p = e.snapshot();
    json diag{{"epoch", e.epoch()},
              {"error", e.what()},
              {"log_lengthscales", json_io::vector_to_json(p.log_lengthscales)},
              {"log_noise_variance", num(p.log_noise_variance)},
              {"u_un", json_io::matrix_to_json(p.u_un)}};
    write_file_atomic(dir / "diagnostics.json", diag.dump(1) + "\n");
    write_manifest(dir, "train", snap, f.cfg.seed, dfp, "", timer.timings(), 1,
                   {{"outputs", {"diagnostics.json"}}, {"status", "failed"}});
    err << "error: " << e.what() << " (diagnostics in " << (dir / "diagnostics.json").string() << ")\n";
    return 1;
  }
  timer.stop();
  timer.start("write");
  save_model(model, dir / "model.json");
  write_file_atomic(dir / "loss_trace.csv", loss_trace_csv(model));
  timer.stop();
  for (const auto& w : model.warnings) err << "warning: " << w << "\n";
  write_manifest(dir, "train", snap, f.cfg.seed, dfp, model_fingerprint(model), timer.timings(),
                 static_cast<long>(model.warnings.size()),
                 {{"outputs", {"model.json", "loss_trace.csv"}},
                  {"best_loss", num(model.best_loss.total)},
                  {"best_epoch", model.best_epoch},
                  {"epochs_run", model.epochs_run}});
  out << "trained " << model.epochs_run << " epochs; best loss " << format_double(model.best_loss.total)
      << " at epoch " << model.best_epoch << "\n";
  return 0;
}

// predict --------------------------------------------------------------------

struct PredictFlags {
  std::string model, boundary, out;
  double delta = 0.05;
  double rkhs_safety = 1.0;
  NewtonFlags newton;
};

int cmd_predict(const PredictFlags& f, std::ostream& out, std::ostream& err) {
  PhaseTimer timer;
  gaussian_tail_factor(f.delta);
  if (!(f.rkhs_safety > 0.0)) throw ConfigError("--rkhs-safety must be positive");
  timer.start("load");
  const TrainedSurrogate tm = load_model(f.model);
  const Dataset b = load_dataset(f.boundary);
  if (!(b.graph == tm.graph)) throw ValidationError("boundary file graph differs from the model graph");
  const Surrogate model(tm);
  timer.stop();

  timer.start("infer");
  const InferenceResult r = infer_potentials(model, b.obs.u_obs, f.newton.options());
  timer.stop();

  timer.start("write");
  const DirectedGraph& g = model.graph();
  CsvTable t({"column", "edge", "observed", "input", "mean", "sigma", "pointwise_bound", "mse_bound", "converged"});
  for (Index c = 0; c < r.columns(); ++c) {
    const bool conv = r.converged[static_cast<std::size_t>(c)];
    for (Index e = 0; e < g.num_edges(); ++e) {
      const Eigen::MatrixXd x = edge_inputs(g, e, r.u_full.col(c), tm.encoding);
      const BoundReport br = error_bounds(model, e, x.row(0), f.delta, f.rkhs_safety);
      t.add(static_cast<long long>(c)).add(static_cast<long long>(e));
      t.add(g.edge_partition(e) == Partition::observed).add(x(0, 0)).add(r.f_full(e, c));
      t.add(br.sigma_x).add(br.pointwise_bound).add(br.mse_bound).add(conv);
      t.end_row();
    }
  }
  const fs::path dir(f.out);
  write_file_atomic(dir / "predictions.csv", t.str());
  write_file_atomic(dir / "potentials.csv", matrix_to_csv(r.u_full));
  timer.stop();

  const long failed = static_cast<long>(r.columns() - r.num_converged());
  if (failed > 0) err << "warning: " << failed << " of " << r.columns() << " columns did not converge\n";
  json snap = f.newton.snapshot();
  snap["model"] = f.model;
  snap["boundary"] = f.boundary;
  snap["delta"] = f.delta;
  snap["rkhs_safety"] = f.rkhs_safety;
  write_manifest(dir, "predict", snap, f.newton.seed, b.fingerprint(), model_fingerprint(tm), timer.timings(),
                 failed, {{"outputs", {"predictions.csv", "potentials.csv"}}, {"non_converged_columns", failed}});
  out << "predicted " << r.columns() << " columns (" << r.num_converged() << " converged)\n";
  return 0;
}

// evaluate -------------------------------------------------------------------

struct EvaluateFlags {
  std::string model, data, out;
  EvaluationOptions eval;
  NewtonFlags newton;
  bool bench = false;
  std::vector<long> bench_sizes{5, 10, 20, 40};
  int bench_repeats = 20;
  long bench_vertices = 20;
  long bench_extra = 5;
  std::uint64_t bench_seed = 0;
};

int cmd_bench(const EvaluateFlags& f, std::ostream& out) {
  PhaseTimer timer;
  GeneratorConfig base = GeneratorConfig::resistor_network(f.bench_vertices, f.bench_extra, 1, f.bench_seed);
  std::vector<Index> sizes(f.bench_sizes.begin(), f.bench_sizes.end());
  timer.start("bench");
  const ScalingReport rep = bench_epochs(base, sizes, f.bench_repeats);
  timer.stop();
  CsvTable t({"n_data", "seconds_per_epoch"});
  for (const EpochTiming& e : rep.timings) {
    t.add(static_cast<long long>(e.n_data)).add(e.seconds_per_epoch);
    t.end_row();
  }
  const fs::path dir(f.out);
  write_file_atomic(dir / "bench_epochs.csv", t.str());
  json snap{{"bench_sizes", f.bench_sizes},
            {"bench_repeats", f.bench_repeats},
            {"bench_vertices", f.bench_vertices},
            {"bench_extra_edges", f.bench_extra}};
  const bool in_range = rep.exponent >= 1.5 && rep.exponent <= 2.5;
  write_manifest(dir, "evaluate --bench-epochs", snap, f.bench_seed, "", "", timer.timings(), in_range ? 0 : 1,
                 {{"outputs", {"bench_epochs.csv"}}, {"scaling_exponent", num(rep.exponent)}});
  for (const EpochTiming& e : rep.timings) {
    out << "N_data=" << e.n_data << " seconds/epoch=" << format_double(e.seconds_per_epoch) << "\n";
  }
  out << "log-log exponent " << format_double(rep.exponent) << (in_range ? "" : " (outside [1.5, 2.5])") << "\n";
  return 0;
}

int cmd_evaluate(const EvaluateFlags& f, std::ostream& out, std::ostream& err) {
  if (f.bench) return cmd_bench(f, out);
  if (f.model.empty() || f.data.empty()) throw ConfigError("evaluate needs --model and --data (or --bench-epochs)");
  PhaseTimer timer;
  timer.start("load");
  const TrainedSurrogate tm = load_model(f.model);
  const Dataset d = load_dataset(f.data);
  const Surrogate model(tm);
  timer.stop();
  timer.start("evaluate");
  const EvaluationReport r = evaluate(model, d, f.newton.options(), f.eval);
  timer.stop();

  timer.start("write");
  const fs::path dir(f.out);
  write_file_atomic(dir / "edge_mse.csv", edge_mse_csv(r));
  write_file_atomic(dir / "bound_samples.csv", bound_samples_csv(r));
  write_file_atomic(dir / "histogram.csv", histogram_csv(r.histogram));
  write_file_atomic(dir / "residuals.csv", residuals_csv(r));
  const long failed = static_cast<long>(r.inference.columns() - r.inference.num_converged());
  json metrics{{"columns", r.inference.columns()},
               {"converged_columns", r.inference.num_converged()},
               {"max_conservation_residual", num(r.conservation_residual.size() ? r.conservation_residual.maxCoeff() : 0.0)},
               {"exceedance_fraction", num(r.exceedance_fraction)},
               {"median_log2_ratio", num(r.median_log2_ratio)},
               {"boundary_relative_l2", num(r.boundary_relative_l2)},
               {"delta", f.eval.delta},
               {"bound_samples", r.samples.size()}};
  json mse = json::array();
  for (Index e = 0; e < r.edge_mse.size(); ++e) mse.push_back(num(r.edge_mse(e)));
  metrics["edge_mse"] = mse;
  write_file_atomic(dir / "metrics.json", metrics.dump(1) + "\n");
  timer.stop();

  if (failed > 0) err << "warning: " << failed << " columns did not converge\n";
  json snap = f.newton.snapshot();
  snap["model"] = f.model;
  snap["data"] = f.data;
  snap["delta"] = f.eval.delta;
  snap["rkhs_safety"] = f.eval.rkhs_safety;
  snap["histogram"] = {f.eval.histogram_bins, f.eval.histogram_lo, f.eval.histogram_hi};
  write_manifest(dir, "evaluate", snap, f.newton.seed, d.fingerprint(), model_fingerprint(tm), timer.timings(), failed,
                 {{"outputs", {"metrics.json", "edge_mse.csv", "bound_samples.csv", "histogram.csv", "residuals.csv"}}});
  out << "columns " << r.inference.columns() << ", exceedance " << format_double(r.exceedance_fraction)
      << ", median log2(|error|/bound) " << format_double(r.median_log2_ratio) << ", max residual "
      << format_double(r.conservation_residual.size() ? r.conservation_residual.maxCoeff() : 0.0) << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conservation-constrained GP surrogates for Dirichlet-to-Neumann maps on graphs", "conserv-gp"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (1 = bit-reproducible mode); overrides CONSERV_GP_THREADS")
      ->check(CLI::PositiveNumber);

  GenerateFlags gf;
  CLI::App* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  gen->add_option("--preset", gf.preset, "Dataset family")
      ->check(CLI::IsMember({"toy-series", "resistor-network", "network-107"}));
  gen->add_option("--samples", gf.samples, "Number of data columns")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gf.seed, "Random seed");
  gen->add_option("--vertices", gf.vertices, "Vertex count (resistor-network)");
  gen->add_option("--extra-edges", gf.extra_edges, "Edges beyond the spanning tree (resistor-network)");
  gen->add_option("--boundary-fraction", gf.boundary_fraction, "Minimum share of boundary vertices");
  gen->add_option("--sampling", gf.sampling, "Boundary potential distribution")
      ->check(CLI::IsMember({"gaussian", "uniform"}));
  gen->add_option("--boundary-std", gf.boundary_std, "Std of gaussian boundary potentials");
  gen->add_option("--range-lo", gf.range_lo, "Lower end of uniform boundary potentials");
  gen->add_option("--range-hi", gf.range_hi, "Upper end of uniform boundary potentials");
  gen->add_option("--conductance-min", gf.cond_min, "Log-uniform conductance range, lower end");
  gen->add_option("--conductance-max", gf.cond_max, "Log-uniform conductance range, upper end");
  gen->add_option("--noise-std", gf.noise_std, "Additive observation noise std");
  gen->add_option("--encoding", gf.encoding, "Kernel input encoding")->check(CLI::IsMember({"gradient", "endpoints"}));
  gen->add_option("--name", gf.name, "Dataset file name inside --out");
  gen->add_flag("--csv", gf.csv, "Also export the matrix blocks as CSV");
  gen->add_option("--out", gf.out, "Output directory")->required();

  TrainFlags tf;
  CLI::App* tr = app.add_subcommand("train", "Train a surrogate on a dataset");
  tr->add_option("--data", tf.data, "Dataset file")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", tf.out, "Output directory")->required();
  tr->add_option("--encoding", tf.encoding, "Override the dataset's kernel input encoding")
      ->check(CLI::IsMember({"gradient", "endpoints"}));
  tr->add_option("--epochs", tf.cfg.epochs, "Epoch budget");
  tr->add_option("--lr", tf.cfg.lr0, "Initial learning rate");
  tr->add_option("--decay", tf.cfg.decay_factor, "Learning-rate decay factor");
  tr->add_option("--decay-every", tf.cfg.decay_every, "Epochs between decays");
  tr->add_option("--seed", tf.cfg.seed, "Random seed");
  tr->add_option("--log-noise-init", tf.cfg.log_noise_init, "Initial log noise variance");
  tr->add_option_function<std::string>(
        "--init-u", [&tf](const std::string& v) { tf.cfg.u_init = parse_potential_init(v); },
        "Starting interior potentials (default harmonic)")
      ->check(CLI::IsMember({"harmonic", "uniform"}));
  tr->add_option("--tol", tf.cfg.convergence_tol, "Early-stop relative loss change per checkpoint (0 disables)");
  tr->add_option("--checkpoint-every", tf.cfg.checkpoint_every, "Epochs between checkpoints");

  PredictFlags pf;
  CLI::App* pr = app.add_subcommand("predict", "Predict fluxes for new boundary potentials");
  pr->add_option("--model", pf.model, "Model file")->required()->check(CLI::ExistingFile);
  pr->add_option("--boundary", pf.boundary, "Dataset file supplying u_obs")->required()->check(CLI::ExistingFile);
  pr->add_option("--out", pf.out, "Output directory")->required();
  pr->add_option("--delta", pf.delta, "Bound confidence parameter");
  pr->add_option("--rkhs-safety", pf.rkhs_safety, "Multiplier on the plug-in RKHS norm");
  pf.newton.add(pr);

  EvaluateFlags ef;
  CLI::App* ev = app.add_subcommand("evaluate", "Evaluate a surrogate against a test dataset");
  ev->add_option("--model", ef.model, "Model file")->check(CLI::ExistingFile);
  ev->add_option("--data", ef.data, "Test dataset file")->check(CLI::ExistingFile);
  ev->add_option("--out", ef.out, "Output directory")->required();
  ev->add_option("--delta", ef.eval.delta, "Bound confidence parameter");
  ev->add_option("--rkhs-safety", ef.eval.rkhs_safety, "Multiplier on the plug-in RKHS norm");
  ev->add_option("--bins", ef.eval.histogram_bins, "Histogram bins");
  ev->add_option("--hist-lo", ef.eval.histogram_lo, "Histogram lower edge (log2 units)");
  ev->add_option("--hist-hi", ef.eval.histogram_hi, "Histogram upper edge (log2 units)");
  ef.newton.add(ev);
  ev->add_flag("--bench-epochs", ef.bench, "Report per-epoch time against N_data instead");
  ev->add_option("--bench-sizes", ef.bench_sizes, "N_data values for --bench-epochs")->expected(2, 64);
  ev->add_option("--bench-repeats", ef.bench_repeats, "Timed epochs per size")->check(CLI::PositiveNumber);
  ev->add_option("--bench-vertices", ef.bench_vertices, "Vertex count of the benchmark network");
  ev->add_option("--bench-extra-edges", ef.bench_extra, "Extra edges of the benchmark network");
  ev->add_option("--bench-seed", ef.bench_seed, "Seed of the benchmark network");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  const int env_threads = parallel::threads_from_env();
  parallel::set_num_threads(threads > 0 ? threads : env_threads);

  try {
    if (gen->parsed()) return cmd_generate(gf, out);
    if (tr->parsed()) return cmd_train(tf, out, err);
    if (pr->parsed()) return cmd_predict(pf, out, err);
    if (ev->parsed()) return cmd_evaluate(ef, out, err);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    err << "invalid file: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace cgp
