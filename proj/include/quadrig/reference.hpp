// Plain serial implementations of the hot kernels, written as direct
// textbook loops over dense per-coordinate matrices. They share no code
// with the production kernels and exist to cross-check them in tests and
// to serve as the baseline in the benchmark target.
#pragma once

#include "quadrig/model.hpp"
#include "quadrig/spectral.hpp"
#include "quadrig/surrogate.hpp"

namespace quadrig::ref {

Vec evaluate_quadratic(const BlendshapeModel& model, const WeightVector& w);

// Dense m x m D^(i) straight from the model's pair list.
Mat dense_d(const BlendshapeModel& model, int coord);

// Spectra via per-coordinate dense eigendecomposition, serial loop.
void compute_spectra(SpectralCache& cache);

ResidualState residual_state(const BlendshapeModel& model,
                             const SpectralCache& cache, const WeightVector& w,
                             const TargetMesh& target);

QuarticCoefficients coefficients(const ResidualState& state,
                                 const SpectralCache& cache, double alpha);

double psi(const ResidualState& state, const SpectralCache& cache, const Vec& v,
           double alpha);

}  // namespace quadrig::ref
