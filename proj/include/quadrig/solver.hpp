// Objective, inner iteration, and the outer majorization-minimization loop.
#pragma once

#include "quadrig/model.hpp"
#include "quadrig/spectral.hpp"
#include "quadrig/surrogate.hpp"

#include <vector>

namespace quadrig {

enum class InitMode { Zeros, Constant, Given };

struct SolverConfig {
  double alpha = 0.0;       // regularization weight, >= 0
  int max_iterations = 200;
  double tolerance = 1e-8;  // surrogate-gap stopping threshold, > 0
  InitMode init = InitMode::Zeros;
  double init_constant = 0.0;       // for InitMode::Constant, in [0,1]
  WeightVector init_weights;        // for InitMode::Given, feasible
};

// Throws std::invalid_argument describing the first problem found.
void validate_config(const SolverConfig& config, int n_blendshapes);

struct FitTiming {
  double precompute_seconds = 0.0;  // filled by the caller that built the cache
  double solve_seconds = 0.0;
};

struct FitReport {
  WeightVector weights;
  std::vector<double> objective_trace;   // at w_(0) and after every iteration
  std::vector<double> surrogate_gaps;    // |psi(v) - psi(0)| per iteration
  std::vector<WeightVector> iterates;    // w_(0) .. w_(T); cheap, kept always
  int iterations_run = 0;
  bool converged = false;
  bool stalled = false;  // zero increment without meeting the gap criterion
  double final_data_fidelity = 0.0;
  double final_regularizer = 0.0;
  FitTiming timing;
};

// ||f_Q(w) - target||^2 + alpha * 1^T w
double objective(const BlendshapeModel& model, const WeightVector& w,
                 const TargetMesh& target, double alpha);

struct ObjectiveParts {
  double data_fidelity = 0.0;
  double regularizer = 0.0;
};
ObjectiveParts objective_parts(const BlendshapeModel& model,
                               const WeightVector& w, const TargetMesh& target,
                               double alpha);

// One simultaneous pass: every controller's increment is derived from the
// same frozen residual state; the weight vector is not updated until all
// components are estimated.
Vec inner_iteration(const BlendshapeModel& model, const SpectralCache& cache,
                    const ResidualState& state, const WeightVector& w,
                    double alpha);

// Increment plus the exact surrogate decrease sum of the per-controller
// minima, equal to psi(v) - psi(0) by separability.
struct InnerStep {
  Vec increment;
  double surrogate_delta = 0.0;
};
InnerStep inner_step(const QuarticCoefficients& coeff, const WeightVector& w);

// Full outer loop: iterate inner steps until the surrogate gap drops below
// config.tolerance or max_iterations is reached. Iterates stay in [0,1]^m
// and the objective trace is nonincreasing.
FitReport solve(const BlendshapeModel& model, const SpectralCache& cache,
                const TargetMesh& target, const SolverConfig& config);

// Count of entries strictly above the activation threshold.
int cardinality(const WeightVector& w, double threshold);

}  // namespace quadrig
