#include "quadrig/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace quadrig {

namespace {

// target stream tag: ASCII "target" left-aligned in a 64-bit word
constexpr std::uint64_t kTargetStreamTag = 0x7461726765740000ULL;

void shuffle(std::vector<std::pair<int, int>>& v, SplitMix64& rng) {
  // Fisher-Yates, high index down
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.index(i);
    std::swap(v[i - 1], v[j]);
  }
}

struct Window {
  int begin = 0;
  int end = 0;  // exclusive
  bool overlaps(const Window& o) const { return begin < o.end && o.begin < end; }
};

}  // namespace

std::vector<std::string> validate_spec(const SynthSpec& spec) {
  std::vector<std::string> problems;
  auto add = [&](const std::string& s) { problems.push_back(s); };
  if (spec.n_vertices <= 0) add("n_vertices must be positive");
  if (spec.n_blendshapes <= 0) add("n_blendshapes must be positive");
  const long max_pairs =
      static_cast<long>(spec.n_blendshapes) * (spec.n_blendshapes - 1) / 2;
  if (spec.n_pairs < 0 || spec.n_pairs > max_pairs) {
    std::ostringstream os;
    os << "n_pairs = " << spec.n_pairs << " outside [0, m(m-1)/2 = "
       << max_pairs << "]";
    add(os.str());
  }
  if (!(spec.locality > 0.0 && spec.locality <= 1.0))
    add("locality must be in (0,1]");
  if (!(spec.delta_scale > 0.0)) add("delta_scale must be > 0");
  if (!(spec.corrective_scale > 0.0)) add("corrective_scale must be > 0");
  if (!(spec.sparsity > 0.0 && spec.sparsity <= 1.0))
    add("sparsity must be in (0,1]");
  if (!(spec.noise_std >= 0.0)) add("noise_std must be >= 0");
  return problems;
}

BlendshapeModel generate_model(const SynthSpec& spec) {
  const auto problems = validate_spec(spec);
  if (!problems.empty())
    throw std::invalid_argument("generate_model: " + problems.front());

  const int n = spec.n_vertices;
  const int m = spec.n_blendshapes;
  const int window = static_cast<int>(std::ceil(spec.locality * n));
  SplitMix64 rng(spec.seed);

  BlendshapeModel model;
  model.n_vertices = n;
  model.n_blendshapes = m;

  // 1. neutral mesh: every coordinate uniform in [-1, 1]
  model.neutral.resize(3 * n);
  for (int i = 0; i < 3 * n; ++i) model.neutral[i] = rng.uniform(-1.0, 1.0);

  // 2. one contiguous vertex window per blendshape, starts spread evenly
  // over [0, n - window] (round-half-up, integer arithmetic)
  std::vector<Window> windows(m);
  const int span = n - window;
  for (int j = 0; j < m; ++j) {
    const int start =
        m == 1 ? 0
               : static_cast<int>((2LL * j * span + (m - 1)) / (2LL * (m - 1)));
    windows[j] = {start, start + window};
  }

  // 3. delta offsets: uniform draw on the window, then made orthogonal to
  // every previously drawn overlapping column and rescaled to a common
  // norm. The projection acts on the window's coordinates only, so support
  // stays inside the window. Rationale: the solver's per-controller steps
  // share one global curvature bound, so spread in the Gram spectrum of the
  // delta columns slows every controller to the slowest mode's rate; a
  // near-orthogonal design keeps the documented recovery property inside
  // the iteration budget. Scalar loops, not Eigen reductions: summation
  // order is part of the determinism contract.
  model.deltas = Mat::Zero(3 * n, m);
  const int len = 3 * window;
  const double column_norm =
      spec.delta_scale * std::sqrt(static_cast<double>(window));
  const auto dot = [](const Vec& a, const Vec& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  for (int j = 0; j < m; ++j) {
    const int lo = 3 * windows[j].begin;
    Vec local(len);
    for (int i = 0; i < len; ++i)
      local[i] = rng.uniform(-spec.delta_scale, spec.delta_scale);

    // orthonormal basis of the previous overlapping columns restricted to
    // this window; modified Gram-Schmidt with one re-orthogonalization pass
    std::vector<Vec> basis;
    for (int k = 0; k < j; ++k) {
      if (!windows[k].overlaps(windows[j])) continue;
      Vec q = model.deltas.col(k).segment(lo, len);
      for (int pass = 0; pass < 2; ++pass)
        for (const Vec& b : basis) q -= dot(b, q) * b;
      const double qn = std::sqrt(dot(q, q));
      if (qn > 1e-10 * column_norm) basis.push_back(q / qn);
    }
    Vec projected = local;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& b : basis) projected -= dot(b, projected) * b;
    // degenerate overlap (basis spans the window): keep the raw draw
    if (std::sqrt(dot(projected, projected)) > 1e-8 * column_norm)
      local = projected;
    local *= column_norm / std::sqrt(dot(local, local));
    model.deltas.col(j).segment(lo, len) = local;
  }

  // 4. corrective pairs: overlapping-window pairs first, uniform fallback
  std::vector<std::pair<int, int>> overlapping, disjoint;
  for (int j = 0; j < m; ++j)
    for (int k = j + 1; k < m; ++k)
      (windows[j].overlaps(windows[k]) ? overlapping : disjoint)
          .emplace_back(j, k);
  shuffle(overlapping, rng);
  shuffle(disjoint, rng);

  std::vector<std::pair<int, int>> chosen;
  for (const auto& p : overlapping)
    if (static_cast<int>(chosen.size()) < spec.n_pairs) chosen.push_back(p);
  for (const auto& p : disjoint)
    if (static_cast<int>(chosen.size()) < spec.n_pairs) chosen.push_back(p);
  std::sort(chosen.begin(), chosen.end());

  // 5. corrective offsets on the window intersection (union if disjoint)
  for (const auto& [j, k] : chosen) {
    CorrectivePair cp;
    cp.j = j;
    cp.k = k;
    cp.offsets = Vec::Zero(3 * n);
    const Window& a = windows[j];
    const Window& b = windows[k];
    const bool overlap = a.overlaps(b);
    for (int v = 0; v < n; ++v) {
      const bool in_a = a.begin <= v && v < a.end;
      const bool in_b = b.begin <= v && v < b.end;
      const bool support = overlap ? (in_a && in_b) : (in_a || in_b);
      if (!support) continue;
      for (int axis = 0; axis < 3; ++axis)
        cp.offsets[3 * v + axis] =
            rng.uniform(-spec.corrective_scale, spec.corrective_scale);
    }
    model.corrective_pairs.push_back(std::move(cp));
  }
  return model;
}

TargetSample generate_target(const BlendshapeModel& model,
                             const SynthSpec& spec) {
  const int m = model.n_blendshapes;
  SplitMix64 rng(spec.seed ^ kTargetStreamTag);

  // active set: first k slots of a partial Fisher-Yates pass, then sorted
  const int k = static_cast<int>(std::ceil(spec.sparsity * m));
  std::vector<int> indices(m);
  std::iota(indices.begin(), indices.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.index(m - i));
    std::swap(indices[i], indices[j]);
  }
  std::vector<int> active(indices.begin(), indices.begin() + k);
  std::sort(active.begin(), active.end());

  TargetSample sample;
  sample.truth = WeightVector::zeros(m);
  for (int idx : active) sample.truth.values[idx] = rng.uniform(0.2, 1.0);

  sample.target.coords = evaluate_quadratic(model, sample.truth);

  if (spec.noise_std > 0.0) {
    // Box-Muller, pairs consumed in coordinate order
    bool have_spare = false;
    double spare = 0.0;
    for (int i = 0; i < model.coords(); ++i) {
      double z;
      if (have_spare) {
        z = spare;
        have_spare = false;
      } else {
        const double u1 = 1.0 - rng.uniform();  // (0, 1]
        const double u2 = rng.uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        constexpr double kTwoPi = 6.283185307179586476925286766559;
        z = radius * std::cos(kTwoPi * u2);
        spare = radius * std::sin(kTwoPi * u2);
        have_spare = true;
      }
      sample.target.coords[i] += spec.noise_std * z;
    }
  }
  return sample;
}

}  // namespace quadrig
