#include "quadrig/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace quadrig {

namespace {

void check_weight_size(const BlendshapeModel& model, const WeightVector& w) {
  if (w.size() != model.n_blendshapes) {
    std::ostringstream os;
    os << "weight vector has " << w.size() << " entries, model has m = "
       << model.n_blendshapes;
    throw std::invalid_argument(os.str());
  }
}

// Pair indices sorted (j,k) lexicographically; fixes the summation order.
std::vector<int> lexicographic_pair_order(const BlendshapeModel& model) {
  std::vector<int> order(model.corrective_pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& pa = model.corrective_pairs[a];
    const auto& pb = model.corrective_pairs[b];
    return std::make_pair(pa.j, pa.k) < std::make_pair(pb.j, pb.k);
  });
  return order;
}

bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace

int first_infeasible_index(const WeightVector& w) {
  for (int i = 0; i < w.size(); ++i) {
    const double x = w.values[i];
    if (!(x >= 0.0 && x <= 1.0)) return i;
  }
  return -1;
}

std::vector<std::string> validate_model(const BlendshapeModel& model) {
  std::vector<std::string> violations;
  auto add = [&](const std::string& msg) { violations.push_back(msg); };

  if (model.n_vertices <= 0) add("n_vertices must be positive");
  if (model.n_blendshapes <= 0) add("n_blendshapes must be positive");

  const int nc = model.coords();
  const int m = model.n_blendshapes;

  if (static_cast<int>(model.neutral.size()) != nc) {
    std::ostringstream os;
    os << "neutral has " << model.neutral.size() << " entries, expected " << nc;
    add(os.str());
  }
  if (model.deltas.rows() != nc || model.deltas.cols() != m) {
    std::ostringstream os;
    os << "deltas is " << model.deltas.rows() << "x" << model.deltas.cols()
       << ", expected " << nc << "x" << m;
    add(os.str());
  }

  if (!all_finite(model.neutral)) add("neutral: non-finite entry");
  if (!model.deltas.allFinite()) {
    // locate the first offender for the message
    for (int c = 0; c < model.deltas.cols(); ++c) {
      for (int r = 0; r < model.deltas.rows(); ++r) {
        if (!std::isfinite(model.deltas(r, c))) {
          std::ostringstream os;
          os << "deltas: non-finite entry at row " << r << ", col " << c;
          add(os.str());
          goto deltas_done;
        }
      }
    }
  deltas_done:;
  }

  std::set<std::pair<int, int>> seen;
  for (std::size_t p = 0; p < model.corrective_pairs.size(); ++p) {
    const auto& cp = model.corrective_pairs[p];
    std::ostringstream at;
    at << "corrective pair " << p << " (" << cp.j << "," << cp.k << ")";
    if (!(0 <= cp.j && cp.j < cp.k && cp.k < m)) {
      add(at.str() + ": indices must satisfy 0 <= j < k < m");
    } else if (!seen.insert({cp.j, cp.k}).second) {
      add(at.str() + ": duplicate pair");
    }
    if (static_cast<int>(cp.offsets.size()) != nc) {
      std::ostringstream os;
      os << at.str() << ": offsets has " << cp.offsets.size()
         << " entries, expected " << nc;
      add(os.str());
    }
    if (!all_finite(cp.offsets)) add(at.str() + ": non-finite entry in offsets");
  }
  return violations;
}

Vec evaluate_linear(const BlendshapeModel& model, const WeightVector& w) {
  check_weight_size(model, w);
  return model.neutral + model.deltas * w.values;
}

Vec evaluate_quadratic(const BlendshapeModel& model, const WeightVector& w) {
  check_weight_size(model, w);
  Vec out = model.neutral + model.deltas * w.values;
  for (int p : lexicographic_pair_order(model)) {
    const auto& cp = model.corrective_pairs[p];
    out += (w.values[cp.j] * w.values[cp.k]) * cp.offsets;
  }
  return out;
}

namespace {

class Fnv1a64 {
 public:
  void bytes(const void* data, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= b[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void f64(double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    u64(u);
  }
  void vec(const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

std::uint64_t content_hash(const BlendshapeModel& model) {
  Fnv1a64 h;
  h.u64(static_cast<std::uint64_t>(model.n_vertices));
  h.u64(static_cast<std::uint64_t>(model.n_blendshapes));
  h.vec(model.neutral);
  for (int c = 0; c < model.deltas.cols(); ++c)
    for (int r = 0; r < model.deltas.rows(); ++r) h.f64(model.deltas(r, c));
  // hash pairs in lexicographic order so equivalent models hash equal
  std::vector<int> order(model.corrective_pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& pa = model.corrective_pairs[a];
    const auto& pb = model.corrective_pairs[b];
    return std::make_pair(pa.j, pa.k) < std::make_pair(pb.j, pb.k);
  });
  for (int p : order) {
    const auto& cp = model.corrective_pairs[p];
    h.u64(static_cast<std::uint64_t>(cp.j));
    h.u64(static_cast<std::uint64_t>(cp.k));
    h.vec(cp.offsets);
  }
  return h.value();
}

}  // namespace quadrig
