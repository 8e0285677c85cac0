// Rig data types, validation, and forward rig evaluation.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace quadrig {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Corrective offset field b^{j,k}, activated with weight w_j * w_k.
// Always stored with j < k.
struct CorrectivePair {
  int j = 0;
  int k = 0;
  Vec offsets;  // length 3 * n_vertices
};

// A quadratic blendshape rig: neutral mesh, delta blendshapes (columns of
// `deltas`), and pairwise corrective shapes. Coordinates are flat over 3n,
// vertex-major with xyz interleaved: coordinate i belongs to vertex i / 3.
// Immutable by convention once built; evaluation functions never mutate it.
struct BlendshapeModel {
  Vec neutral;                                 // 3n
  Mat deltas;                                  // 3n x m
  std::vector<CorrectivePair> corrective_pairs;
  int n_vertices = 0;
  int n_blendshapes = 0;

  int coords() const { return 3 * n_vertices; }
};

// Controller activations. Feasible when every entry lies in [0,1]; some
// producers (unclamped baselines) intentionally return infeasible values,
// so feasibility is checked at the call sites that require it.
struct WeightVector {
  Vec values;

  int size() const { return static_cast<int>(values.size()); }
  static WeightVector zeros(int m) { return {Vec::Zero(m)}; }
  static WeightVector constant(int m, double c) { return {Vec::Constant(m, c)}; }
};

// Index of the first entry outside [0,1] (or non-finite), -1 if feasible.
int first_infeasible_index(const WeightVector& w);

struct TargetMesh {
  Vec coords;  // 3n
};

// Returns every invariant violation with its location; empty means valid.
std::vector<std::string> validate_model(const BlendshapeModel& model);

// b_0 + B w
Vec evaluate_linear(const BlendshapeModel& model, const WeightVector& w);

// b_0 + B w + sum over corrective pairs of w_j w_k b^{j,k}.
// Summation order is fixed (blendshape index ascending, then pairs in (j,k)
// lexicographic order) so the result does not depend on the order in which
// corrective_pairs are stored.
Vec evaluate_quadratic(const BlendshapeModel& model, const WeightVector& w);

// FNV-1a over the canonical byte serialization of the model; used to detect
// stale spectral caches.
std::uint64_t content_hash(const BlendshapeModel& model);

}  // namespace quadrig
