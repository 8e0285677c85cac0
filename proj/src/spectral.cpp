#include "quadrig/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace quadrig {

Mat SpectralCache::dense_matrix(int coord) const {
  Mat d = Mat::Zero(n_blendshapes, n_blendshapes);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [j, k] = pairs[p];
    d(j, k) = half_offsets(coord, static_cast<int>(p));
    d(k, j) = d(j, k);
  }
  return d;
}

double SpectralCache::quadratic_form(int coord, const Vec& w) const {
  double acc = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [j, k] = pairs[p];
    acc += w[j] * w[k] * (2.0 * half_offsets(coord, static_cast<int>(p)));
  }
  return acc;
}

SpectralCache assemble(const BlendshapeModel& model) {
  SpectralCache cache;
  cache.n_blendshapes = model.n_blendshapes;
  cache.n_coords = model.coords();

  // canonical pair order: (j,k) lexicographic
  std::vector<int> order(model.corrective_pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& pa = model.corrective_pairs[a];
    const auto& pb = model.corrective_pairs[b];
    return std::make_pair(pa.j, pa.k) < std::make_pair(pb.j, pb.k);
  });

  const int np = static_cast<int>(order.size());
  cache.pairs.reserve(np);
  cache.half_offsets.resize(cache.n_coords, np);
  for (int p = 0; p < np; ++p) {
    const auto& cp = model.corrective_pairs[order[p]];
    cache.pairs.emplace_back(cp.j, cp.k);
    cache.half_offsets.col(p) = 0.5 * cp.offsets;
  }

  cache.has_entries.assign(cache.n_coords, 0);
  for (int i = 0; i < cache.n_coords; ++i) {
    for (int p = 0; p < np; ++p) {
      if (cache.half_offsets(i, p) != 0.0) {
        cache.has_entries[i] = 1;
        break;
      }
    }
  }
  return cache;
}

void compute_spectra(SpectralCache& cache) {
  const int nc = cache.n_coords;
  cache.lambda_min = Vec::Zero(nc);
  cache.lambda_max = Vec::Zero(nc);
  cache.sigma = Vec::Zero(nc);

  // Coordinates are independent; most have no corrective entries and are
  // skipped outright. Exceptions must not cross the parallel region, so
  // solver failures are collected into a flag and rethrown below.
  bool failed = false;
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < nc; ++i) {
    if (!cache.has_entries[i]) continue;
    Eigen::SelfAdjointEigenSolver<Mat> eig(cache.dense_matrix(i),
                                           Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
      failed = true;
      continue;
    }
    const auto& ev = eig.eigenvalues();
    cache.lambda_min[i] = ev.minCoeff();
    cache.lambda_max[i] = ev.maxCoeff();
    cache.sigma[i] = std::max(std::abs(cache.lambda_min[i]),
                              std::abs(cache.lambda_max[i]));
  }
  if (failed) throw std::runtime_error("compute_spectra: eigensolver failed");

  // serial fixed-order sum: reproducible regardless of thread count
  double acc = 0.0;
  for (int i = 0; i < nc; ++i) acc += cache.sigma[i] * cache.sigma[i];
  cache.sigma_sq_sum = acc;
  cache.spectra_ready = true;
}

double lambda_m(const SpectralCache& cache, int coord, double g) {
  if (!cache.spectra_ready)
    throw std::logic_error("lambda_m: spectra not computed");
  return g < 0.0 ? cache.lambda_min[coord] : cache.lambda_max[coord];
}

}  // namespace quadrig
