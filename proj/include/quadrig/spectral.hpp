// Per-coordinate quadratic-form matrices D^(i) and their extreme
// eigenvalues / largest singular value. Built once per character and
// reused across every target fitted against it.
#pragma once

#include "quadrig/model.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace quadrig {

// All D^(i) share one sparsity pattern (the corrective pair set), so the
// cache stores the pair list once plus a 3n x |P| matrix of entry values:
// half_offsets(i, p) = D^(i)_{jk} = D^(i)_{kj} = 0.5 * b_i^{j,k} for
// pairs[p] = (j, k). Diagonals are always zero (pairs have j < k), hence
// lambda_min <= 0 <= lambda_max for every nonzero D^(i).
struct SpectralCache {
  int n_blendshapes = 0;
  int n_coords = 0;
  std::vector<std::pair<int, int>> pairs;  // (j,k) lexicographic, j < k
  Mat half_offsets;                        // n_coords x |P|

  // Spectra, filled by compute_spectra (or loaded from a cache file).
  Vec lambda_min;
  Vec lambda_max;
  Vec sigma;
  double sigma_sq_sum = 0.0;  // sum over coordinates of sigma^2
  bool spectra_ready = false;

  std::vector<std::uint8_t> has_entries;  // coordinate has any nonzero value

  // Dense m x m D^(i); test and diagnostic use.
  Mat dense_matrix(int coord) const;

  // w^T D^(i) w = sum over pairs of w_j w_k b_i^{j,k}.
  double quadratic_form(int coord, const Vec& w) const;
};

// Fill pairs/half_offsets from the model; spectra stay unset.
SpectralCache assemble(const BlendshapeModel& model);

// Eigen-decompose every nonzero D^(i) (parallel across coordinates) and
// fill lambda_min/lambda_max/sigma. For symmetric D the largest singular
// value is max(|lambda_min|, |lambda_max|); no separate SVD.
void compute_spectra(SpectralCache& cache);

// lambda_min if g < 0, lambda_max otherwise (the g >= 0 branch owns the
// boundary).
double lambda_m(const SpectralCache& cache, int coord, double g);

}  // namespace quadrig
