// File formats: rig / target / weights as line-oriented text (lossless for
// finite doubles via shortest round-trip formatting), spectral cache as a
// small binary sidecar, fit reports as JSON. Byte-level layout in
// docs/formats.md.
#pragma once

#include "quadrig/model.hpp"
#include "quadrig/solver.hpp"
#include "quadrig/spectral.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace quadrig::io {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, int line, const std::string& message);
  const std::string& path() const { return path_; }
  int line() const { return line_; }

 private:
  std::string path_;
  int line_;
};

class UnsupportedVersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Cache written for a different model; callers recompute.
class StaleCacheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rig files: parse + full model validation (throws on any violation).
BlendshapeModel read_rig(const std::string& path);
// Structural parse only; used by `validate` to report violations as data.
BlendshapeModel read_rig_raw(const std::string& path);
// binary_arrays stores the big arrays in a "<path>.bin" sidecar of raw
// little-endian doubles instead of inline text.
void write_rig(const BlendshapeModel& model, const std::string& path,
               bool binary_arrays = false);

TargetMesh read_target(const std::string& path);
void write_target(const TargetMesh& target, const std::string& path);

// Weights files are structural only; feasibility is enforced where a
// feasible vector is required.
WeightVector read_weights(const std::string& path);
void write_weights(const WeightVector& weights, const std::string& path);

struct CacheFile {
  std::uint64_t model_hash = 0;
  Vec lambda_min;
  Vec lambda_max;
  Vec sigma;
};
CacheFile read_cache(const std::string& path);
void write_cache(const SpectralCache& cache, std::uint64_t model_hash,
                 const std::string& path);
// Hash-checked load into an assembled cache; throws StaleCacheError on
// mismatch.
void load_cache(SpectralCache& cache, const BlendshapeModel& model,
                const std::string& path);

// Serialized JSON document (weights, trace, config, metrics, timings).
std::string report_json(const FitReport& report, const SolverConfig& config,
                        double cardinality_threshold = 1e-3);
void write_report(const FitReport& report, const SolverConfig& config,
                  const std::string& path,
                  double cardinality_threshold = 1e-3);

// Shortest round-trip decimal form (std::to_chars).
std::string format_double(double value);

}  // namespace quadrig::io
