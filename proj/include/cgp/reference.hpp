#pragma once

#include "cgp/objective.hpp"

// Serial reference implementation of the training objective. It materializes
// the explicit block matrices (Khat, D0hat, the dense Schur matrix) and uses
// general LU factorizations, and differentiates by assembling dA_e/dp for
// every parameter p. Slow; kept for testing and benchmarking the parallel path.
namespace cgp::reference {

LossBreakdown loss(const TrainingProblem& problem, const Params& params);

ParamGradient loss_gradient(const TrainingProblem& problem, const Params& params);

}  // namespace cgp::reference
