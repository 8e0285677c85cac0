#pragma once

// Shared helpers for the test suite: fixture paths, random instance builders,
// and small independent oracles (naive evaluators, dense eigensolver) used to
// cross-check the production kernels.

#include <quadrig/model.hpp>
#include <quadrig/synth.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace testutil {

inline std::string fixture_path(const std::string& name) {
  return std::string(QUADRIG_FIXTURES_DIR) + "/" + name;
}

// Random dimensions in the range exercised by the fast property checks.
struct InstanceDims {
  int n;
  int m;
  int pairs;
};

inline InstanceDims random_dims(quadrig::SplitMix64& rng, int max_n = 50, int max_m = 10,
                                int max_pairs = 15) {
  InstanceDims d;
  d.n = 2 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_n - 1)));
  d.m = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_m)));
  const int all_pairs = d.m * (d.m - 1) / 2;
  const int cap = std::min(max_pairs, all_pairs);
  d.pairs = cap == 0 ? 0 : static_cast<int>(rng.index(static_cast<std::uint64_t>(cap + 1)));
  return d;
}

inline quadrig::SynthSpec random_spec(quadrig::SplitMix64& rng, int max_n = 50, int max_m = 10,
                                      int max_pairs = 15) {
  const InstanceDims d = random_dims(rng, max_n, max_m, max_pairs);
  quadrig::SynthSpec spec;
  spec.n_vertices = d.n;
  spec.n_blendshapes = d.m;
  spec.n_pairs = d.pairs;
  spec.locality = 0.1 + 0.9 * rng.uniform();
  spec.sparsity = 0.05 + 0.95 * rng.uniform();
  spec.delta_scale = 0.05 + 1.95 * rng.uniform();
  spec.corrective_scale = 0.2 * spec.delta_scale * (0.1 + 0.9 * rng.uniform());
  spec.noise_std = 0.0;
  spec.seed = rng.next();
  return spec;
}

inline quadrig::WeightVector random_feasible(quadrig::SplitMix64& rng, int m) {
  quadrig::WeightVector w = quadrig::WeightVector::zeros(m);
  for (int j = 0; j < m; ++j) w.values[j] = rng.uniform();
  return w;
}

// Random step v with w + v still inside [0, 1]^m.
inline quadrig::Vec random_feasible_step(quadrig::SplitMix64& rng, const quadrig::WeightVector& w) {
  quadrig::Vec v(w.size());
  for (int j = 0; j < w.size(); ++j) {
    const double lo = -w.values[j];
    const double hi = 1.0 - w.values[j];
    v[j] = rng.uniform(lo, hi);
  }
  return v;
}

// Target with coordinates drawn near the neutral, independent of the truth-path
// generator, so tests can stress residuals of arbitrary sign.
inline quadrig::TargetMesh random_target(quadrig::SplitMix64& rng,
                                         const quadrig::BlendshapeModel& model,
                                         double spread = 0.5) {
  quadrig::TargetMesh target;
  target.coords = model.neutral;
  for (int i = 0; i < target.coords.size(); ++i)
    target.coords[i] += rng.uniform(-spread, spread);
  return target;
}

// Naive quadratic rig evaluation: plain loops over vertices, shapes, and pairs.
// Deliberately structured unlike the production kernel.
inline quadrig::Vec naive_evaluate_quadratic(const quadrig::BlendshapeModel& model,
                                             const quadrig::WeightVector& w) {
  quadrig::Vec out(model.coords());
  for (int i = 0; i < model.coords(); ++i) {
    double acc = model.neutral[i];
    for (int j = 0; j < model.n_blendshapes; ++j) acc += w.values[j] * model.deltas(i, j);
    for (const auto& pair : model.corrective_pairs)
      acc += w.values[pair.j] * w.values[pair.k] * pair.offsets[i];
    out[i] = acc;
  }
  return out;
}

// Cyclic Jacobi eigensolver for small symmetric matrices; independent of the
// production spectral path (which never forms eigenvectors this way).
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
  const int n = static_cast<int>(a.size());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-28) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int r = 0; r < n; ++r) {
          const double arp = a[r][p];
          const double arq = a[r][q];
          a[r][p] = c * arp - s * arq;
          a[r][q] = s * arp + c * arq;
        }
        for (int r = 0; r < n; ++r) {
          const double apr = a[p][r];
          const double aqr = a[q][r];
          a[p][r] = c * apr - s * aqr;
          a[q][r] = s * apr + c * aqr;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a[i][i];
  std::sort(eig.begin(), eig.end());
  return eig;
}

inline double max_abs_diff(const quadrig::Vec& a, const quadrig::Vec& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Bit-exact equality, the determinism yardstick.
inline bool exact_equal(const quadrig::Vec& a, const quadrig::Vec& b) {
  if (a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace testutil
