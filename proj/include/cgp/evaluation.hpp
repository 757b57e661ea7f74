#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "cgp/datasets.hpp"
#include "cgp/inference.hpp"

namespace cgp {

struct EvaluationOptions {
  double delta = 0.05;
  double rkhs_safety = 1.0;
  // log2(|error| / bound) histogram; values outside are counted in the end bins.
  int histogram_bins = 24;
  double histogram_lo = -16.0;
  double histogram_hi = 8.0;
};

// One boundary-edge prediction checked against its pointwise bound.
struct BoundSample {
  Index column = 0;
  Index edge = 0;
  double input = 0.0;  // first kernel input coordinate, for scatter plots
  double prediction = 0.0;
  double reference = 0.0;
  double error = 0.0;
  double sigma_x = 0.0;
  double bound = 0.0;
  double log2_ratio = 0.0;  // -inf for an exact prediction
  bool exceeds = false;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<long> counts;
};

struct EvaluationReport {
  InferenceResult inference;
  Eigen::VectorXd edge_mse;               // E; NaN where no reference flux exists
  Eigen::VectorXd conservation_residual;  // per column, max-abs interior divergence
  std::vector<BoundSample> samples;       // observed edges x columns
  double exceedance_fraction = 0.0;
  double median_log2_ratio = 0.0;
  double boundary_relative_l2 = 0.0;      // ||F_pred - F_ref|| / ||F_ref|| on observed edges
  Histogram histogram;
};

// Runs the D2N map on the dataset's boundary potentials and compares with its
// reference fluxes (ground truth when present, else F_obs on observed edges).
EvaluationReport evaluate(const Surrogate& model, const Dataset& test, const NewtonOptions& newton = {},
                          const EvaluationOptions& options = {});

Histogram make_histogram(const std::vector<double>& values, int bins, double lo, double hi);

// Median with -inf entries allowed; NaN for an empty input.
double median(std::vector<double> values);

std::string edge_mse_csv(const EvaluationReport& r);
std::string bound_samples_csv(const EvaluationReport& r);
std::string histogram_csv(const Histogram& h);
std::string residuals_csv(const EvaluationReport& r);

struct EpochTiming {
  Index n_data = 0;
  double seconds_per_epoch = 0.0;
};

struct ScalingReport {
  std::vector<EpochTiming> timings;
  double exponent = 0.0;  // slope of log time vs log N_data
};

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Times one objective-plus-gradient evaluation (one full-batch epoch) for each
// N_data on datasets drawn from base with n_samples replaced. Reports the
// median of `repeats` timed epochs.
ScalingReport bench_epochs(const GeneratorConfig& base, const std::vector<Index>& sizes, int repeats);

}  // namespace cgp
