// Linear-rig comparison solvers: regularized closed-form least squares and
// sequential per-controller fitting.
#pragma once

#include "quadrig/model.hpp"

#include <vector>

namespace quadrig {

struct BaselineConfig {
  double alpha = 0.0;  // ridge weight, >= 0
  bool clamp = true;   // project the solution to [0,1]
};

struct ClosedFormResult {
  WeightVector weights;  // clamped when config.clamp, else equal to raw
  Vec raw;               // unclamped solution of the normal equations
};

// Solves (B^T B + alpha I) w = B^T (target - neutral). The delta target
// keeps a neutral input at w = 0. Throws when alpha = 0 and B is
// rank-deficient.
ClosedFormResult solve_closed_form(const BlendshapeModel& model,
                                   const TargetMesh& target,
                                   const BaselineConfig& config);

struct SequentialResult {
  WeightVector weights;
  std::vector<int> visit_order;        // controllers in the order visited
  std::vector<double> residual_norms;  // ||residual|| after each visit
};

// Controllers visited in descending order of mean absolute offset (ties by
// index); each visit projects the running residual onto one column with
// clamping to [0,1], then subtracts the fitted contribution.
SequentialResult solve_sequential(const BlendshapeModel& model,
                                  const TargetMesh& target);

}  // namespace quadrig
