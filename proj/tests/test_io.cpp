#include <doctest.h>
#include <quadrig/io.hpp>
#include <quadrig/model.hpp>
#include <quadrig/solver.hpp>
#include <quadrig/spectral.hpp>
#include <quadrig/synth.hpp>

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "helpers.hpp"

using namespace quadrig;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case, removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("quadrig_io_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

BlendshapeModel sample_model(std::uint64_t seed = 7, int n = 6, int m = 4, int pairs = 3) {
  SynthSpec spec;
  spec.n_vertices = n;
  spec.n_blendshapes = m;
  spec.n_pairs = pairs;
  spec.locality = 0.6;
  spec.seed = seed;
  return generate_model(spec);
}

bool models_identical(const BlendshapeModel& a, const BlendshapeModel& b) {
  if (a.n_vertices != b.n_vertices || a.n_blendshapes != b.n_blendshapes) return false;
  if (!testutil::exact_equal(a.neutral, b.neutral)) return false;
  if ((a.deltas - b.deltas).cwiseAbs().maxCoeff() != 0.0) return false;
  if (a.corrective_pairs.size() != b.corrective_pairs.size()) return false;
  for (std::size_t p = 0; p < a.corrective_pairs.size(); ++p) {
    if (a.corrective_pairs[p].j != b.corrective_pairs[p].j) return false;
    if (a.corrective_pairs[p].k != b.corrective_pairs[p].k) return false;
    if (!testutil::exact_equal(a.corrective_pairs[p].offsets, b.corrective_pairs[p].offsets))
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("format_double round-trips arbitrary doubles") {
  SplitMix64 rng(2);
  auto roundtrip = [](double x) {
    const std::string s = io::format_double(x);
    double back = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), back);
    REQUIRE(res.ec == std::errc());
    return back;
  };
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(1.0) == "1");
  CHECK(io::format_double(-0.5) == "-0.5");
  CHECK(roundtrip(1.0 / 3.0) == 1.0 / 3.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = rng.uniform(-1e12, 1e12);
    CHECK(roundtrip(x) == x);
    const double tiny = rng.uniform(-1e-300, 1e-300);
    CHECK(roundtrip(tiny) == tiny);
  }
}

TEST_CASE("rig round trip, inline text arrays") {
  TempDir dir;
  const BlendshapeModel model = sample_model();
  const std::string path = dir.file("model.rig");
  io::write_rig(model, path);
  const BlendshapeModel back = io::read_rig(path);
  CHECK(models_identical(model, back));
  CHECK(content_hash(model) == content_hash(back));

  // writing the reread model reproduces the file byte for byte
  const std::string again = dir.file("model2.rig");
  io::write_rig(back, again);
  CHECK(slurp(path) == slurp(again));
}

TEST_CASE("rig round trip, binary sidecar") {
  TempDir dir;
  const BlendshapeModel model = sample_model(9, 8, 5, 4);
  const std::string path = dir.file("model.rig");
  io::write_rig(model, path, /*binary_arrays=*/true);
  CHECK(fs::exists(dir.file("model.rig.bin")));
  const BlendshapeModel back = io::read_rig(path);
  CHECK(models_identical(model, back));
}

TEST_CASE("rig files tolerate comments, blank lines, and CRLF") {
  TempDir dir;
  const std::string path = dir.file("hand.rig");
  spit(path,
       "# hand-written rig\r\n"
       "quadrig rig 1\r\n"
       "\r\n"
       "n 1\r\n"
       "m 2\r\n"
       "pairs 1\r\n"
       "neutral 0 0.5 -1\r\n"
       "# deltas follow\r\n"
       "delta 0 1 0 0\r\n"
       "delta 1 0 1 0\r\n"
       "corrective 0 1 0 0 0.25\r\n"
       "end\r\n");
  const BlendshapeModel model = io::read_rig(path);
  CHECK(model.n_vertices == 1);
  CHECK(model.n_blendshapes == 2);
  CHECK(model.neutral[1] == 0.5);
  CHECK(model.deltas(0, 0) == 1.0);
  REQUIRE(model.corrective_pairs.size() == 1);
  CHECK(model.corrective_pairs[0].offsets[2] == 0.25);
}

TEST_CASE("missing delta column is reported with the expected label") {
  TempDir dir;
  const std::string path = dir.file("short.rig");
  spit(path,
       "quadrig rig 1\n"
       "n 1\nm 3\npairs 0\n"
       "neutral 0 0 0\n"
       "delta 0 1 0 0\n"
       "delta 1 0 1 0\n"
       "end\n");
  try {
    io::read_rig(path);
    FAIL("expected ParseError");
  } catch (const io::ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("delta 2") != std::string::npos);
  }
}

TEST_CASE("unsupported format version raises its dedicated error") {
  TempDir dir;
  const std::string path = dir.file("future.rig");
  spit(path, "quadrig rig 99\nn 1\nm 1\npairs 0\nneutral 0 0 0\ndelta 0 1 1 1\nend\n");
  CHECK_THROWS_AS(io::read_rig(path), io::UnsupportedVersionError);
  // and the version error is still a ParseError carrying a location
  try {
    io::read_rig(path);
  } catch (const io::ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.path() == path);
  }
}

TEST_CASE("reading the wrong kind of file fails up front") {
  TempDir dir;
  const BlendshapeModel model = sample_model();
  const std::string path = dir.file("model.rig");
  io::write_rig(model, path);
  CHECK_THROWS_AS(io::read_target(path), io::ParseError);
  CHECK_THROWS_AS(io::read_weights(path), io::ParseError);
}

TEST_CASE("value count mismatches carry the offending line number") {
  TempDir dir;
  const std::string path = dir.file("bad.rig");
  spit(path,
       "quadrig rig 1\n"
       "n 2\nm 1\npairs 0\n"
       "neutral 0 0 0\n"  // should be 6 values, line 5
       "delta 0 1 0 0 0 0 0\n"
       "end\n");
  try {
    io::read_rig(path);
    FAIL("expected ParseError");
  } catch (const io::ParseError& e) {
    CHECK(e.line() == 5);
    CHECK(std::string(e.what()).find("neutral") != std::string::npos);
  }
}

TEST_CASE("garbage numeric tokens are rejected") {
  TempDir dir;
  const std::string path = dir.file("garbage.rig");
  spit(path,
       "quadrig rig 1\n"
       "n 1\nm 1\npairs 0\n"
       "neutral 0 zero 0\n"
       "delta 0 1 1 1\n"
       "end\n");
  CHECK_THROWS_AS(io::read_rig(path), io::ParseError);
}

TEST_CASE("trailing content after end is rejected") {
  TempDir dir;
  const std::string path = dir.file("trailing.rig");
  spit(path,
       "quadrig rig 1\n"
       "n 1\nm 1\npairs 0\n"
       "neutral 0 0 0\n"
       "delta 0 1 1 1\n"
       "end\n"
       "extra\n");
  CHECK_THROWS_AS(io::read_rig(path), io::ParseError);
}

TEST_CASE("read_rig validates while read_rig_raw only parses") {
  TempDir dir;
  const std::string path = dir.file("dup.rig");
  spit(path,
       "quadrig rig 1\n"
       "n 1\nm 2\npairs 2\n"
       "neutral 0 0 0\n"
       "delta 0 1 0 0\n"
       "delta 1 0 1 0\n"
       "corrective 0 1 0 0 1\n"
       "corrective 0 1 0 0 2\n"  // duplicate pair: structurally fine, invalid rig
       "end\n");
  CHECK_THROWS_AS(io::read_rig(path), std::runtime_error);
  const BlendshapeModel raw = io::read_rig_raw(path);
  CHECK(raw.corrective_pairs.size() == 2);
  CHECK(!validate_model(raw).empty());
}

TEST_CASE("corrective indices out of range fail at parse time") {
  TempDir dir;
  const std::string path = dir.file("range.rig");
  spit(path,
       "quadrig rig 1\n"
       "n 1\nm 2\npairs 1\n"
       "neutral 0 0 0\n"
       "delta 0 1 0 0\n"
       "delta 1 0 1 0\n"
       "corrective 0 7 0 0 1\n"
       "end\n");
  CHECK_THROWS_AS(io::read_rig_raw(path), io::ParseError);
}

TEST_CASE("nonexistent file raises an error naming the path") {
  try {
    io::read_rig("/nonexistent/nowhere.rig");
    FAIL("expected an exception");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("nowhere.rig") != std::string::npos);
  }
}

TEST_CASE("target round trip and finiteness check") {
  TempDir dir;
  TargetMesh target;
  SplitMix64 rng(5);
  target.coords = Vec(9);
  for (int i = 0; i < 9; ++i) target.coords[i] = rng.uniform(-2.0, 2.0);
  const std::string path = dir.file("mesh.target");
  io::write_target(target, path);
  const TargetMesh back = io::read_target(path);
  CHECK(testutil::exact_equal(target.coords, back.coords));

  spit(dir.file("nan.target"), "quadrig target 1\nn 1\ncoords 0 nan 0\nend\n");
  CHECK_THROWS_AS(io::read_target(dir.file("nan.target")), io::ParseError);
}

TEST_CASE("weights round trip preserves infeasible values structurally") {
  TempDir dir;
  WeightVector w = WeightVector::zeros(4);
  w.values << 0.25, 1.5, -0.25, 1.0;  // out-of-box values survive IO
  const std::string path = dir.file("w.weights");
  io::write_weights(w, path);
  const WeightVector back = io::read_weights(path);
  CHECK(testutil::exact_equal(w.values, back.values));

  spit(dir.file("short.weights"), "quadrig weights 1\nm 3\nvalues 0 0\nend\n");
  CHECK_THROWS_AS(io::read_weights(dir.file("short.weights")), io::ParseError);
}

TEST_CASE("cache file round trip is bit-exact") {
  TempDir dir;
  const BlendshapeModel model = sample_model(11, 10, 6, 5);
  SpectralCache cache = assemble(model);
  compute_spectra(cache);
  const std::uint64_t hash = content_hash(model);
  const std::string path = dir.file("model.cache");
  io::write_cache(cache, hash, path);

  const io::CacheFile file = io::read_cache(path);
  CHECK(file.model_hash == hash);
  CHECK(testutil::exact_equal(file.lambda_min, cache.lambda_min));
  CHECK(testutil::exact_equal(file.lambda_max, cache.lambda_max));
  CHECK(testutil::exact_equal(file.sigma, cache.sigma));

  // loading into a freshly assembled cache reproduces every spectral field
  SpectralCache fresh = assemble(model);
  io::load_cache(fresh, model, path);
  CHECK(fresh.spectra_ready);
  CHECK(testutil::exact_equal(fresh.lambda_min, cache.lambda_min));
  CHECK(testutil::exact_equal(fresh.lambda_max, cache.lambda_max));
  CHECK(testutil::exact_equal(fresh.sigma, cache.sigma));
  CHECK(fresh.sigma_sq_sum == cache.sigma_sq_sum);
}

TEST_CASE("cache written before compute_spectra is refused") {
  TempDir dir;
  const BlendshapeModel model = sample_model();
  SpectralCache cache = assemble(model);
  CHECK_THROWS_AS(io::write_cache(cache, content_hash(model), dir.file("x.cache")),
                  std::logic_error);
}

TEST_CASE("a cache for a different model is stale") {
  TempDir dir;
  const BlendshapeModel a = sample_model(1, 6, 4, 2);
  const BlendshapeModel b = sample_model(2, 6, 4, 2);
  SpectralCache cache_a = assemble(a);
  compute_spectra(cache_a);
  const std::string path = dir.file("a.cache");
  io::write_cache(cache_a, content_hash(a), path);

  SpectralCache cache_b = assemble(b);
  CHECK_THROWS_AS(io::load_cache(cache_b, b, path), io::StaleCacheError);
  CHECK(!cache_b.spectra_ready);
}

TEST_CASE("corrupt cache files are rejected") {
  TempDir dir;
  const BlendshapeModel model = sample_model();
  SpectralCache cache = assemble(model);
  compute_spectra(cache);
  const std::string path = dir.file("m.cache");
  io::write_cache(cache, content_hash(model), path);

  // truncate
  const std::string bytes = slurp(path);
  spit(dir.file("trunc.cache"), bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(io::read_cache(dir.file("trunc.cache")), io::ParseError);

  // bad magic
  std::string flipped = bytes;
  flipped[0] = 'X';
  spit(dir.file("magic.cache"), flipped);
  CHECK_THROWS_AS(io::read_cache(dir.file("magic.cache")), io::ParseError);
}

TEST_CASE("report JSON carries weights, trace, config, and metrics") {
  const BlendshapeModel model = sample_model(13, 8, 5, 4);
  SpectralCache cache = assemble(model);
  compute_spectra(cache);
  SynthSpec spec;
  spec.n_vertices = 8;
  spec.n_blendshapes = 5;
  spec.n_pairs = 4;
  spec.seed = 13;
  const TargetSample sample = generate_target(model, spec);
  SolverConfig config;
  config.alpha = 0.1;
  const FitReport report = solve(model, cache, sample.target, config);

  const std::string text = io::report_json(report, config);
  const nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j.at("format") == "quadrig-report");
  CHECK(j.at("config").at("alpha") == 0.1);
  CHECK(j.at("config").at("init") == "zeros");
  REQUIRE(j.at("weights").size() == 5);
  for (int i = 0; i < 5; ++i)
    CHECK(j.at("weights")[i].get<double>() == report.weights.values[i]);
  const auto& trace = j.at("objective_trace");
  REQUIRE(trace.size() == report.objective_trace.size());
  for (std::size_t t = 1; t < trace.size(); ++t)
    CHECK(trace[t].get<double>() <= trace[t - 1].get<double>() + 1e-9);
  CHECK(j.at("iterations_run") == report.iterations_run);
  CHECK(j.at("converged") == report.converged);
  CHECK(j.at("metrics").at("data_fidelity").get<double>() ==
        doctest::Approx(report.final_data_fidelity));
  CHECK(j.at("metrics").at("cardinality") == cardinality(report.weights, 1e-3));
  CHECK(j.at("timing").at("solve_seconds").get<double>() >= 0.0);
}

TEST_CASE("golden fixtures stay byte-stable") {
  // The checked-in fixtures are the output of the generator for seeds 42-44;
  // regenerating them must reproduce the files exactly.
  TempDir dir;
  for (std::uint64_t seed : {42ULL, 43ULL, 44ULL}) {
    SynthSpec spec;
    spec.n_vertices = 100;
    spec.n_blendshapes = 20;
    spec.n_pairs = 30;
    spec.locality = 0.2;
    spec.sparsity = 0.25;
    spec.noise_std = 0.0;
    spec.seed = seed;
    const BlendshapeModel model = generate_model(spec);
    const TargetSample sample = generate_target(model, spec);
    const std::string tag = "seed" + std::to_string(seed);

    io::write_rig(model, dir.file(tag + ".rig"));
    io::write_target(sample.target, dir.file(tag + ".target"));
    io::write_weights(sample.truth, dir.file(tag + ".truth"));

    CHECK(slurp(dir.file(tag + ".rig")) == slurp(testutil::fixture_path(tag + ".rig")));
    CHECK(slurp(dir.file(tag + ".target")) == slurp(testutil::fixture_path(tag + ".target")));
    CHECK(slurp(dir.file(tag + ".truth")) == slurp(testutil::fixture_path(tag + ".truth")));
  }
}

TEST_CASE("fixture files parse into a valid benchmark instance") {
  const BlendshapeModel model = io::read_rig(testutil::fixture_path("seed42.rig"));
  CHECK(model.n_vertices == 100);
  CHECK(model.n_blendshapes == 20);
  CHECK(model.corrective_pairs.size() == 30);
  const TargetMesh target = io::read_target(testutil::fixture_path("seed42.target"));
  CHECK(target.coords.size() == 300);
  const WeightVector truth = io::read_weights(testutil::fixture_path("seed42.truth"));
  CHECK(truth.size() == 20);
  CHECK(first_infeasible_index(truth) == -1);
}
