// Exact minimization of q v + r v^2 + s v^4 over a closed interval.
#pragma once

#include <array>

namespace quadrig {

// Scalar quartic restricted to [lo, hi]. s >= 0 in the solver's use, but
// cubic_roots and minimize accept arbitrary finite coefficients.
struct BoundedQuarticProblem {
  double q = 0.0;
  double r = 0.0;
  double s = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct QuarticMinimum {
  double v = 0.0;
  double value = 0.0;
};

// Tolerances are correctness guards, not tuning knobs.
inline constexpr double kCubicRootResidualTol = 1e-8;   // |p(root)| <= tol * scale
inline constexpr double kMinimizeOptimalitySlack = 1e-10;
inline constexpr double kValueTieRelTol = 1e-12;        // near-tie detection

// Real roots of c0 + c1 v + c3 v^3 (no quadratic term: the quartic's
// derivative is already a depressed cubic). Returns the root count written
// into `roots`. c3 = 0 falls back to a linear solve; c3 = c1 = 0 yields no
// isolated roots. Each root satisfies |c0 + c1 v + c3 v^3| <= tol * scale
// with scale = max(|c0|, |c1|, |c3|, 1).
int cubic_roots(double c0, double c1, double c3, std::array<double, 3>& roots);

// Horner arrangement q v + v^2 (r + s v^2); s can dominate q, r by many
// orders of magnitude, this form keeps the cancellation in check.
inline double quartic_value(double q, double r, double s, double v) {
  return q * v + v * v * (r + s * v * v);
}

// Constrained minimizer: real roots of the derivative inside [lo, hi] plus
// both endpoints are candidates. Near-ties are broken toward the smallest
// |v|, then the smaller v.
QuarticMinimum minimize(const BoundedQuarticProblem& problem);

}  // namespace quadrig
