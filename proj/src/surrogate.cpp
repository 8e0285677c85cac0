#include "quadrig/surrogate.hpp"

#include <algorithm>
#include <stdexcept>

namespace quadrig {

namespace {

// Fixed block decomposition: the split does not depend on the thread
// count, so results are bit-identical however many threads run.
constexpr int kRowBlock = 512;

void check_dims(const BlendshapeModel& model, const SpectralCache& cache,
                const WeightVector& w, const TargetMesh& target) {
  if (w.size() != model.n_blendshapes)
    throw std::invalid_argument("residual_state: weight size mismatch");
  if (static_cast<int>(target.coords.size()) != model.coords())
    throw std::invalid_argument("residual_state: target size mismatch");
  if (cache.n_coords != model.coords() ||
      cache.n_blendshapes != model.n_blendshapes)
    throw std::invalid_argument("residual_state: cache/model mismatch");
}

}  // namespace

ResidualState residual_state(const BlendshapeModel& model,
                             const SpectralCache& cache, const WeightVector& w,
                             const TargetMesh& target) {
  check_dims(model, cache, w, target);
  const int nc = cache.n_coords;
  const int np = static_cast<int>(cache.pairs.size());

  ResidualState state;
  state.at_weights = w;
  state.g.resize(nc);
  state.h.resize(nc, cache.n_blendshapes);
  state.h_row_sqnorms.resize(nc);

  const int nblocks = (nc + kRowBlock - 1) / kRowBlock;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < nblocks; ++b) {
    const int r0 = b * kRowBlock;
    const int rows = std::min(kRowBlock, nc - r0);
    const auto deltas = model.deltas.middleRows(r0, rows);

    // Accumulate f_Q(w) in the same order as evaluate_quadratic (GEMV, then
    // neutral, then pairs lexicographically) and subtract the target last:
    // a target produced by evaluate_quadratic yields g = 0 exactly.
    auto g = state.g.segment(r0, rows);
    g.noalias() = deltas * w.values;
    g += model.neutral.segment(r0, rows);
    state.h.middleRows(r0, rows) = deltas;

    for (int p = 0; p < np; ++p) {
      const auto [j, k] = cache.pairs[p];
      const auto half = cache.half_offsets.col(p).segment(r0, rows);
      g += (2.0 * w.values[j] * w.values[k]) * half;  // w_j w_k b^{j,k}
      state.h.col(j).segment(r0, rows) += (2.0 * w.values[k]) * half;
      state.h.col(k).segment(r0, rows) += (2.0 * w.values[j]) * half;
    }
    g -= target.coords.segment(r0, rows);
    state.h_row_sqnorms.segment(r0, rows) =
        state.h.middleRows(r0, rows).rowwise().squaredNorm();
  }
  return state;
}

double psi_component(const ResidualState& state, const SpectralCache& cache,
                     int coord, const Vec& v) {
  const double g = state.g[coord];
  const double hv = state.h.row(coord).dot(v);
  const double sum_sq = v.squaredNorm();
  const double sum_quart = v.array().square().square().sum();
  const double lm = lambda_m(cache, coord, g);
  const double sig = cache.sigma[coord];
  const double m = static_cast<double>(cache.n_blendshapes);
  return g * g + 2.0 * g * hv +
         2.0 * (g * lm + state.h_row_sqnorms[coord]) * sum_sq +
         2.0 * m * sig * sig * sum_quart;
}

double psi(const ResidualState& state, const SpectralCache& cache, const Vec& v,
           double alpha) {
  if (!cache.spectra_ready) throw std::logic_error("psi: spectra not computed");
  const int nc = cache.n_coords;
  const double m = static_cast<double>(cache.n_blendshapes);
  const Vec hv = state.h * v;
  const double sum_sq = v.squaredNorm();
  const double sum_quart = v.array().square().square().sum();

  double acc = 0.0;
  for (int i = 0; i < nc; ++i) {
    const double g = state.g[i];
    const double lm = g < 0.0 ? cache.lambda_min[i] : cache.lambda_max[i];
    const double sig = cache.sigma[i];
    acc += g * g + 2.0 * g * hv[i] +
           2.0 * (g * lm + state.h_row_sqnorms[i]) * sum_sq +
           2.0 * m * sig * sig * sum_quart;
  }
  return acc + alpha * (state.at_weights.values.sum() + v.sum());
}

QuarticCoefficients coefficients(const ResidualState& state,
                                 const SpectralCache& cache, double alpha) {
  if (!cache.spectra_ready)
    throw std::logic_error("coefficients: spectra not computed");
  const int m = cache.n_blendshapes;
  const int nc = cache.n_coords;

  QuarticCoefficients coeff;
  coeff.q.resize(m);
  // columns are independent; each q_j is a fixed-order serial dot
#pragma omp parallel for schedule(static)
  for (int j = 0; j < m; ++j)
    coeff.q[j] = 2.0 * state.h.col(j).dot(state.g) + alpha;

  double acc = 0.0;
  for (int i = 0; i < nc; ++i) {
    const double g = state.g[i];
    const double lm = g < 0.0 ? cache.lambda_min[i] : cache.lambda_max[i];
    acc += g * lm + state.h_row_sqnorms[i];
  }
  coeff.r = 2.0 * acc;
  coeff.s = 2.0 * static_cast<double>(m) * cache.sigma_sq_sum;
  return coeff;
}

}  // namespace quadrig
