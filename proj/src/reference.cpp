#include "quadrig/reference.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace quadrig::ref {

namespace {

std::vector<int> lex_order(const BlendshapeModel& model) {
  std::vector<int> order(model.corrective_pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& pa = model.corrective_pairs[a];
    const auto& pb = model.corrective_pairs[b];
    return std::make_pair(pa.j, pa.k) < std::make_pair(pb.j, pb.k);
  });
  return order;
}

}  // namespace

Vec evaluate_quadratic(const BlendshapeModel& model, const WeightVector& w) {
  const int nc = model.coords();
  const int m = model.n_blendshapes;
  const auto order = lex_order(model);
  Vec out(nc);
  for (int i = 0; i < nc; ++i) {
    double acc = model.neutral[i];
    for (int j = 0; j < m; ++j) acc += w.values[j] * model.deltas(i, j);
    for (int p : order) {
      const auto& cp = model.corrective_pairs[p];
      acc += w.values[cp.j] * w.values[cp.k] * cp.offsets[i];
    }
    out[i] = acc;
  }
  return out;
}

Mat dense_d(const BlendshapeModel& model, int coord) {
  const int m = model.n_blendshapes;
  Mat d = Mat::Zero(m, m);
  for (const auto& cp : model.corrective_pairs) {
    d(cp.j, cp.k) = 0.5 * cp.offsets[coord];
    d(cp.k, cp.j) = d(cp.j, cp.k);
  }
  return d;
}

void compute_spectra(SpectralCache& cache) {
  const int nc = cache.n_coords;
  cache.lambda_min = Vec::Zero(nc);
  cache.lambda_max = Vec::Zero(nc);
  cache.sigma = Vec::Zero(nc);
  for (int i = 0; i < nc; ++i) {
    const Mat d = cache.dense_matrix(i);
    if (d.isZero(0.0)) continue;
    Eigen::SelfAdjointEigenSolver<Mat> eig(d, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success)
      throw std::runtime_error("ref::compute_spectra: eigensolver failed");
    cache.lambda_min[i] = eig.eigenvalues().minCoeff();
    cache.lambda_max[i] = eig.eigenvalues().maxCoeff();
    cache.sigma[i] = std::max(std::abs(cache.lambda_min[i]),
                              std::abs(cache.lambda_max[i]));
  }
  double acc = 0.0;
  for (int i = 0; i < nc; ++i) acc += cache.sigma[i] * cache.sigma[i];
  cache.sigma_sq_sum = acc;
  cache.spectra_ready = true;
}

ResidualState residual_state(const BlendshapeModel& model,
                             const SpectralCache& cache, const WeightVector& w,
                             const TargetMesh& target) {
  const int nc = model.coords();
  const int m = model.n_blendshapes;

  ResidualState state;
  state.at_weights = w;
  state.g.resize(nc);
  state.h.resize(nc, m);
  state.h_row_sqnorms.resize(nc);

  for (int i = 0; i < nc; ++i) {
    const Mat d = dense_d(model, i);
    double bw = 0.0;
    for (int j = 0; j < m; ++j) bw += model.deltas(i, j) * w.values[j];
    double wdw = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) wdw += w.values[a] * d(a, b) * w.values[b];
    state.g[i] = model.neutral[i] + bw + wdw - target.coords[i];

    double sq = 0.0;
    for (int j = 0; j < m; ++j) {
      double wd = 0.0;
      for (int a = 0; a < m; ++a) wd += w.values[a] * d(a, j);
      state.h(i, j) = model.deltas(i, j) + 2.0 * wd;
      sq += state.h(i, j) * state.h(i, j);
    }
    state.h_row_sqnorms[i] = sq;
  }
  (void)cache;
  return state;
}

QuarticCoefficients coefficients(const ResidualState& state,
                                 const SpectralCache& cache, double alpha) {
  const int nc = cache.n_coords;
  const int m = cache.n_blendshapes;
  QuarticCoefficients coeff;
  coeff.q = Vec::Constant(m, alpha);
  double r = 0.0;
  double s = 0.0;
  for (int i = 0; i < nc; ++i) {
    const double g = state.g[i];
    for (int j = 0; j < m; ++j) coeff.q[j] += 2.0 * g * state.h(i, j);
    const double lm = g < 0.0 ? cache.lambda_min[i] : cache.lambda_max[i];
    r += g * lm + state.h_row_sqnorms[i];
    s += cache.sigma[i] * cache.sigma[i];
  }
  coeff.r = 2.0 * r;
  coeff.s = 2.0 * m * s;
  return coeff;
}

double psi(const ResidualState& state, const SpectralCache& cache, const Vec& v,
           double alpha) {
  const int nc = cache.n_coords;
  const int m = cache.n_blendshapes;
  double sum_sq = 0.0;
  double sum_quart = 0.0;
  for (int j = 0; j < m; ++j) {
    sum_sq += v[j] * v[j];
    sum_quart += v[j] * v[j] * v[j] * v[j];
  }
  double acc = 0.0;
  for (int i = 0; i < nc; ++i) {
    const double g = state.g[i];
    double hv = 0.0;
    for (int j = 0; j < m; ++j) hv += state.h(i, j) * v[j];
    const double lm = g < 0.0 ? cache.lambda_min[i] : cache.lambda_max[i];
    acc += g * g + 2.0 * g * hv +
           2.0 * (g * lm + state.h_row_sqnorms[i]) * sum_sq +
           2.0 * m * cache.sigma[i] * cache.sigma[i] * sum_quart;
  }
  double reg = 0.0;
  for (int j = 0; j < m; ++j) reg += state.at_weights.values[j] + v[j];
  return acc + alpha * reg;
}

}  // namespace quadrig::ref
