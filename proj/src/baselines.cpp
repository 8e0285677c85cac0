#include "quadrig/baselines.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace quadrig {

ClosedFormResult solve_closed_form(const BlendshapeModel& model,
                                   const TargetMesh& target,
                                   const BaselineConfig& config) {
  if (!(config.alpha >= 0.0))
    throw std::invalid_argument("baseline config: alpha must be >= 0");
  if (static_cast<int>(target.coords.size()) != model.coords())
    throw std::invalid_argument("solve_closed_form: target size mismatch");

  Mat gram = model.deltas.transpose() * model.deltas;
  if (config.alpha == 0.0) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(gram, Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmax <= 0.0 || lmin <= 1e-12 * lmax)
      throw std::runtime_error(
          "solve_closed_form: B^T B is singular (alpha = 0 with "
          "rank-deficient B)");
  }
  gram.diagonal().array() += config.alpha;

  const Vec rhs = model.deltas.transpose() * (target.coords - model.neutral);
  ClosedFormResult result;
  result.raw = gram.ldlt().solve(rhs);
  result.weights.values =
      config.clamp ? result.raw.cwiseMax(0.0).cwiseMin(1.0).eval() : result.raw;
  return result;
}

SequentialResult solve_sequential(const BlendshapeModel& model,
                                  const TargetMesh& target) {
  if (static_cast<int>(target.coords.size()) != model.coords())
    throw std::invalid_argument("solve_sequential: target size mismatch");

  const int m = model.n_blendshapes;
  const double nc = static_cast<double>(model.coords());

  // mean absolute coordinate offset per blendshape, descending; ties by index
  Vec mean_offset(m);
  for (int j = 0; j < m; ++j)
    mean_offset[j] = model.deltas.col(j).cwiseAbs().sum() / nc;
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return mean_offset[a] > mean_offset[b];
  });

  SequentialResult result;
  result.visit_order = order;
  result.weights = WeightVector::zeros(m);
  result.residual_norms.reserve(m);

  Vec residual = target.coords - model.neutral;
  for (int j : order) {
    const auto col = model.deltas.col(j);
    const double sq = col.squaredNorm();
    if (sq != 0.0) {
      const double w = std::clamp(col.dot(residual) / sq, 0.0, 1.0);
      result.weights.values[j] = w;
      residual -= w * col;
    }
    result.residual_norms.push_back(residual.norm());
  }
  return result;
}

}  // namespace quadrig
