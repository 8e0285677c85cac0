// Residual machinery (g, h), the separable upper bound psi, and the
// per-controller polynomial coefficients of the scalar subproblems.
#pragma once

#include "quadrig/model.hpp"
#include "quadrig/spectral.hpp"

namespace quadrig {

// Snapshot of g_i = f_Q(w)_i - target_i and h_i = B_i + 2 w^T D^(i) for a
// fixed weight vector; rows are independent and filled in parallel.
struct ResidualState {
  Vec g;               // 3n
  Mat h;               // 3n x m, row i is h_i
  Vec h_row_sqnorms;   // ||h_i||^2
  WeightVector at_weights;
};

// Coefficients of the per-controller quartic q_j v + r v^2 + s v^4.
// q varies per controller; r and s are shared across controllers and
// computed once per iteration. s >= 0 always, and r >= 0 whenever the
// state came from a real rig (g_i * lambda_M >= 0 by the sign selection).
struct QuarticCoefficients {
  Vec q;       // m
  double r = 0.0;
  double s = 0.0;
};

ResidualState residual_state(const BlendshapeModel& model,
                             const SpectralCache& cache, const WeightVector& w,
                             const TargetMesh& target);

// Coordinate-wise bound: g_i^2 + 2 g_i h_i.v + 2 (g_i lambda_M + ||h_i||^2)
// * sum v_j^2 + 2 m sigma_i^2 * sum v_j^4.
double psi_component(const ResidualState& state, const SpectralCache& cache,
                     int coord, const Vec& v);

// Full surrogate: sum of psi_component over coordinates plus the
// regularization alpha * 1^T (w + v).
double psi(const ResidualState& state, const SpectralCache& cache, const Vec& v,
           double alpha);

// q_j = 2 sum_i g_i h_ij + alpha; r = 2 sum_i (g_i lambda_M + ||h_i||^2);
// s = 2 m sum_i sigma_i^2.
QuarticCoefficients coefficients(const ResidualState& state,
                                 const SpectralCache& cache, double alpha);

}  // namespace quadrig
