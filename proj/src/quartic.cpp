#include "quadrig/quartic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace quadrig {

namespace {

double poly3(double c0, double c1, double c3, double v) {
  return c0 + v * (c1 + c3 * v * v);
}

// Single Newton step; keep the polished value only if it does not worsen
// the residual.
double polish_root(double c0, double c1, double c3, double v) {
  const double f = poly3(c0, c1, c3, v);
  const double df = c1 + 3.0 * c3 * v * v;
  if (df == 0.0 || !std::isfinite(df)) return v;
  const double v2 = v - f / df;
  if (!std::isfinite(v2)) return v;
  return std::abs(poly3(c0, c1, c3, v2)) <= std::abs(f) ? v2 : v;
}

}  // namespace

int cubic_roots(double c0, double c1, double c3, std::array<double, 3>& roots) {
  if (c3 == 0.0) {
    if (c1 == 0.0) return 0;  // constant: no isolated roots
    roots[0] = -c0 / c1;
    return 1;
  }
  // Depressed form v^3 + p v + q0 = 0.
  const double p = c1 / c3;
  const double q0 = c0 / c3;
  const double half_q = 0.5 * q0;
  const double third_p = p / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;

  int count = 0;
  if (disc > 0.0) {
    // One real root (Cardano); cbrt handles negative arguments.
    const double sq = std::sqrt(disc);
    roots[count++] = std::cbrt(-half_q + sq) + std::cbrt(-half_q - sq);
  } else {
    // Three real roots (possibly repeated); trigonometric method. p <= 0 here.
    const double a = std::sqrt(-third_p);
    if (a == 0.0) {
      roots[count++] = 0.0;  // triple root of v^3 = 0
    } else {
      double cosphi = -half_q / (a * a * a);
      cosphi = std::clamp(cosphi, -1.0, 1.0);
      const double phi = std::acos(cosphi);
      constexpr double kTwoPi = 6.283185307179586476925286766559;
      for (int k = 0; k < 3; ++k)
        roots[count++] = 2.0 * a * std::cos((phi - kTwoPi * k) / 3.0);
    }
  }
  for (int i = 0; i < count; ++i) roots[i] = polish_root(c0, c1, c3, roots[i]);
  std::sort(roots.begin(), roots.begin() + count);
  return count;
}

QuarticMinimum minimize(const BoundedQuarticProblem& problem) {
  const auto [q, r, s, lo, hi] = problem;
  if (!std::isfinite(q) || !std::isfinite(r) || !std::isfinite(s) ||
      !std::isfinite(lo) || !std::isfinite(hi))
    throw std::invalid_argument("minimize: non-finite input");
  if (lo > hi) throw std::invalid_argument("minimize: lo > hi");

  std::array<double, 6> candidates;
  int count = 0;
  candidates[count++] = lo;
  if (hi != lo) candidates[count++] = hi;

  std::array<double, 3> roots;
  const int nroots = cubic_roots(q, 2.0 * r, 4.0 * s, roots);
  for (int i = 0; i < nroots; ++i)
    if (roots[i] >= lo && roots[i] <= hi) candidates[count++] = roots[i];

  QuarticMinimum best{candidates[0], quartic_value(q, r, s, candidates[0])};
  for (int i = 1; i < count; ++i) {
    const double v = candidates[i];
    const double value = quartic_value(q, r, s, v);
    const double tie = kValueTieRelTol * (1.0 + std::abs(best.value));
    if (value < best.value - tie) {
      best = {v, value};
    } else if (value <= best.value + tie) {
      // near-tie: prefer the smaller perturbation, then the smaller v
      const bool prefer = std::abs(v) < std::abs(best.v) ||
                          (std::abs(v) == std::abs(best.v) && v < best.v);
      if (prefer) best = {v, value};
    }
  }
  return best;
}

}  // namespace quadrig
