#include "quadrig/solver.hpp"

#include "quadrig/quartic.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace quadrig {

void validate_config(const SolverConfig& config, int n_blendshapes) {
  if (!(config.alpha >= 0.0))
    throw std::invalid_argument("solver config: alpha must be >= 0");
  if (config.max_iterations <= 0)
    throw std::invalid_argument("solver config: max_iterations must be positive");
  if (!(config.tolerance > 0.0))
    throw std::invalid_argument("solver config: tolerance must be > 0");
  if (config.init == InitMode::Constant &&
      !(config.init_constant >= 0.0 && config.init_constant <= 1.0))
    throw std::invalid_argument("solver config: init constant outside [0,1]");
  if (config.init == InitMode::Given) {
    if (config.init_weights.size() != n_blendshapes)
      throw std::invalid_argument("solver config: init weights size mismatch");
    const int bad = first_infeasible_index(config.init_weights);
    if (bad >= 0) {
      std::ostringstream os;
      os << "solver config: init weights entry " << bad << " = "
         << config.init_weights.values[bad] << " outside [0,1]";
      throw std::invalid_argument(os.str());
    }
  }
}

ObjectiveParts objective_parts(const BlendshapeModel& model,
                               const WeightVector& w, const TargetMesh& target,
                               double alpha) {
  if (static_cast<int>(target.coords.size()) != model.coords())
    throw std::invalid_argument("objective: target size mismatch");
  const Vec mesh = evaluate_quadratic(model, w);
  return {(mesh - target.coords).squaredNorm(), alpha * w.values.sum()};
}

double objective(const BlendshapeModel& model, const WeightVector& w,
                 const TargetMesh& target, double alpha) {
  const auto parts = objective_parts(model, w, target, alpha);
  return parts.data_fidelity + parts.regularizer;
}

InnerStep inner_step(const QuarticCoefficients& coeff, const WeightVector& w) {
  const int m = w.size();
  InnerStep step;
  step.increment.resize(m);
  Vec values(m);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < m; ++j) {
    const double wj = w.values[j];
    const auto min = minimize({coeff.q[j], coeff.r, coeff.s, -wj, 1.0 - wj});
    step.increment[j] = min.v;
    values[j] = min.value;
  }
  // psi(v) - psi(0) by separability; summed serially in controller order
  for (int j = 0; j < m; ++j) step.surrogate_delta += values[j];
  return step;
}

Vec inner_iteration(const BlendshapeModel& model, const SpectralCache& cache,
                    const ResidualState& state, const WeightVector& w,
                    double alpha) {
  (void)model;
  return inner_step(coefficients(state, cache, alpha), w).increment;
}

FitReport solve(const BlendshapeModel& model, const SpectralCache& cache,
                const TargetMesh& target, const SolverConfig& config) {
  validate_config(config, model.n_blendshapes);
  if (!cache.spectra_ready)
    throw std::invalid_argument("solve: cache spectra not computed");
  const auto t_start = std::chrono::steady_clock::now();

  const int m = model.n_blendshapes;
  WeightVector w;
  switch (config.init) {
    case InitMode::Zeros: w = WeightVector::zeros(m); break;
    case InitMode::Constant: w = WeightVector::constant(m, config.init_constant); break;
    case InitMode::Given: w = config.init_weights; break;
  }

  FitReport report;
  ObjectiveParts last_parts;
  auto record = [&](const WeightVector& iterate) {
    last_parts = objective_parts(model, iterate, target, config.alpha);
    report.objective_trace.push_back(last_parts.data_fidelity +
                                     last_parts.regularizer);
    report.iterates.push_back(iterate);
  };
  record(w);

  for (int t = 0; t < config.max_iterations; ++t) {
    const ResidualState state = residual_state(model, cache, w, target);
    const auto coeff = coefficients(state, cache, config.alpha);
    const InnerStep step = inner_step(coeff, w);
    const double gap = std::abs(step.surrogate_delta);

    // clamp guards the last-ulp rounding of w_j + (1 - w_j)
    w.values = (w.values + step.increment).cwiseMax(0.0).cwiseMin(1.0);

    report.iterations_run = t + 1;
    report.surrogate_gaps.push_back(gap);
    record(w);

    if (gap < config.tolerance) {
      report.converged = true;
      break;
    }
    if ((step.increment.array() == 0.0).all()) {
      // no progress possible under this surrogate
      report.converged = true;
      report.stalled = true;
      break;
    }
  }

  report.weights = w;
  report.final_data_fidelity = last_parts.data_fidelity;
  report.final_regularizer = last_parts.regularizer;

  report.timing.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

int cardinality(const WeightVector& w, double threshold) {
  int count = 0;
  for (int j = 0; j < w.size(); ++j)
    if (std::abs(w.values[j]) > threshold) ++count;
  return count;
}

}  // namespace quadrig
