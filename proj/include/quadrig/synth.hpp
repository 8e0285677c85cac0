// Seeded synthetic rig and target generation. The draw procedure and PRNG
// are part of the format contract (see docs/formats.md): the same spec and
// seed reproduce the same model byte for byte.
#pragma once

#include "quadrig/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace quadrig {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen for the generator contract:
// three shift-xor-multiply steps, trivially portable.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1), 53-bit resolution
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform index in [0, n); modulo bias is immaterial at these ranges and
  // keeps the contract a one-liner
  std::uint64_t index(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t state_;
};

struct SynthSpec {
  int n_vertices = 0;
  int n_blendshapes = 0;
  int n_pairs = 0;
  // Scales follow face-rig proportions: the neutral occupies the unit box,
  // blendshape deformations are ~10% of that, correctives a fifth of the
  // deformation.
  double locality = 0.2;           // fraction of vertices per blendshape window
  double delta_scale = 0.1;        // blendshape offset magnitude
  double corrective_scale = 0.02;  // corrective offset magnitude
  double sparsity = 0.25;         // fraction of active ground-truth controllers
  double noise_std = 0.0;         // additive coordinate noise on targets
  std::uint64_t seed = 0;
};

std::vector<std::string> validate_spec(const SynthSpec& spec);

// Blendshapes displace contiguous vertex windows with evenly spread starts;
// delta columns are drawn uniform on the window, orthogonalized against
// previously drawn overlapping columns (within the window, preserving
// support), and norm-equalized — a well-conditioned design keeps ground
// truth recoverable inside the default iteration budget. Corrective pairs
// prefer window-overlapping blendshape pairs and live on the window
// intersection (union when the chosen pair does not overlap). Throws on
// invalid spec.
BlendshapeModel generate_model(const SynthSpec& spec);

struct TargetSample {
  TargetMesh target;
  WeightVector truth;
};

// Ground-truth weights with ceil(sparsity * m) active entries uniform in
// [0.2, 1.0]; target = f_Q(truth) plus optional Gaussian noise. Uses a
// separate PRNG stream from generate_model (seed xor a fixed tag).
TargetSample generate_target(const BlendshapeModel& model,
                             const SynthSpec& spec);

}  // namespace quadrig
