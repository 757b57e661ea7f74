// Serial reference objective vs the parallel production path.
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>

#include "cgp/csv.hpp"
#include "cgp/datasets.hpp"
#include "cgp/objective.hpp"
#include "cgp/parallel.hpp"
#include "cgp/reference.hpp"
#include "cgp/trainer.hpp"

namespace {

template <class F>
double median_seconds(F&& f, int repeats) {
  std::vector<double> t;
  for (int k = 0; k < repeats; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
  const long vertices = argc > 2 ? std::atol(argv[2]) : 20;
  if (int n = cgp::parallel::threads_from_env(); n > 0) cgp::parallel::set_num_threads(n);

  std::cout << "threads " << cgp::parallel::num_threads() << (cgp::parallel::openmp_enabled() ? " (openmp)" : "")
            << ", network V=" << vertices << "\n";
  cgp::CsvTable table({"n_data", "reference_s", "parallel_s", "speedup", "max_grad_diff"});
  for (long n : {5L, 10L, 20L, 40L}) {
    const auto cfg = cgp::GeneratorConfig::resistor_network(vertices, 5, n, 3);
    const cgp::Dataset d = cgp::generate(cfg);
    const cgp::TrainingProblem p = d.problem();
    const cgp::Params x = cgp::init_params(p, cgp::TrainConfig{}).params;

    cgp::ParamGradient ref;
    cgp::ObjectiveEvaluation par;
    const double t_ref = median_seconds([&] { ref = cgp::reference::loss_gradient(p, x); }, repeats);
    const double t_par = median_seconds([&] { par = cgp::loss_gradient(p, x); }, repeats);
    const double diff = (ref.flatten() - par.gradient.flatten()).cwiseAbs().maxCoeff() /
                        std::max(1.0, ref.flatten().cwiseAbs().maxCoeff());
    table.add(n).add(t_ref).add(t_par).add(t_ref / t_par).add(diff);
    table.end_row();
  }
  std::cout << table.str();
  return 0;
}
