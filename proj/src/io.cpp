#include "quadrig/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string_view>
#include <vector>

namespace quadrig::io {
namespace {

std::string location(const std::string& path, int line) {
  if (line > 0) return path + ":" + std::to_string(line);
  return path;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error("read error on '" + path + "'");
  return bytes;
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw std::runtime_error("write error on '" + path + "'");
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t take_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i]))
         << (8 * i);
  return v;
}

void put_f64(std::string& out, double d) {
  put_u64(out, std::bit_cast<std::uint64_t>(d));
}

double take_f64(const char* p) { return std::bit_cast<double>(take_u64(p)); }

bool parse_double_token(std::string_view tok, double& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

bool parse_int_token(std::string_view tok, long long& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

// Line iterator over a whole-file buffer. Blank lines and '#' comments are
// skipped; reported line numbers are 1-based positions in the raw file.
class TextDoc {
 public:
  explicit TextDoc(const std::string& path)
      : path_(path), bytes_(read_file_bytes(path)) {}

  const std::string& path() const { return path_; }

  // Next non-blank, non-comment line; false at end of file.
  bool next(int& line_no, std::vector<std::string_view>& tokens) {
    std::string_view text(bytes_);
    while (pos_ < text.size()) {
      std::size_t eol = text.find('\n', pos_);
      if (eol == std::string_view::npos) eol = text.size();
      std::string_view line = text.substr(pos_, eol - pos_);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      pos_ = eol + 1;
      ++line_;
      if (line.empty()) continue;
      std::size_t first = line.find_first_not_of(" \t");
      if (first == std::string_view::npos || line[first] == '#') continue;
      line_no = line_;
      tokens = tokenize(line);
      return true;
    }
    return false;
  }

 private:
  std::string path_;
  std::string bytes_;
  std::size_t pos_ = 0;
  int line_ = 0;
};

[[noreturn]] void fail(const TextDoc& doc, int line, const std::string& msg) {
  throw ParseError(doc.path(), line, msg);
}

std::string joined(const std::vector<std::string_view>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

// Header "quadrig <kind> <version>"; returns the version.
long long expect_header(TextDoc& doc, const std::string& kind) {
  int line = 0;
  std::vector<std::string_view> tokens;
  if (!doc.next(line, tokens))
    fail(doc, 0, "empty file: missing 'quadrig " + kind + " <version>' header");
  if (tokens.size() != 3 || tokens[0] != "quadrig")
    fail(doc, line,
         "malformed header '" + joined(tokens) + "': expected 'quadrig " +
             kind + " <version>'");
  if (tokens[1] != kind)
    fail(doc, line,
         "expected a " + kind + " file, found kind '" + std::string(tokens[1]) +
             "'");
  long long version = 0;
  if (!parse_int_token(tokens[2], version))
    fail(doc, line, "version '" + std::string(tokens[2]) + "' is not an integer");
  if (version != 1)
    throw UnsupportedVersionError(
        doc.path(), line,
        "unsupported " + kind + " format version " + std::to_string(version) +
            " (supported: 1)");
  return version;
}

long long expect_count_line(TextDoc& doc, const std::string& key) {
  int line = 0;
  std::vector<std::string_view> tokens;
  if (!doc.next(line, tokens))
    fail(doc, 0, "unexpected end of file: expected '" + key + " <count>'");
  if (tokens.size() != 2 || tokens[0] != key)
    fail(doc, line,
         "expected '" + key + " <count>', found '" + joined(tokens) + "'");
  long long value = 0;
  if (!parse_int_token(tokens[1], value) || value < 0)
    fail(doc, line,
         "'" + key + "' must be a nonnegative integer, found '" +
             std::string(tokens[1]) + "'");
  return value;
}

// Optional "binary <name>" sidecar holding raw little-endian doubles,
// addressed by element offset. Resolved relative to the main file.
struct Sidecar {
  bool declared = false;
  std::string name;
  std::string bytes;

  Vec read(const TextDoc& doc, int line, std::size_t offset, std::size_t count,
           const std::string& field) const {
    if (!declared)
      throw ParseError(doc.path(), line,
                       "field '" + field +
                           "' uses '@' array reference but no 'binary' "
                           "sidecar is declared");
    if ((offset + count) * 8 > bytes.size())
      throw ParseError(doc.path(), line,
                       "field '" + field + "': binary sidecar '" + name +
                           "' too short (need " +
                           std::to_string((offset + count) * 8) +
                           " bytes, have " + std::to_string(bytes.size()) +
                           ")");
    Vec out(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i)
      out[static_cast<Eigen::Index>(i)] = take_f64(&bytes[(offset + i) * 8]);
    return out;
  }
};

// Values after `tokens[from]`: either inline doubles or "@ <offset> <count>".
Vec read_values(const TextDoc& doc, int line,
                const std::vector<std::string_view>& tokens, std::size_t from,
                Eigen::Index expected, const std::string& field,
                const Sidecar& sidecar) {
  if (from < tokens.size() && tokens[from] == "@") {
    if (tokens.size() != from + 3)
      fail(doc, line,
           "field '" + field + "': '@' reference needs '<offset> <count>'");
    long long offset = 0, count = 0;
    if (!parse_int_token(tokens[from + 1], offset) || offset < 0 ||
        !parse_int_token(tokens[from + 2], count) || count < 0)
      fail(doc, line,
           "field '" + field + "': malformed '@' reference '" +
               joined(tokens) + "'");
    if (count != expected)
      fail(doc, line,
           "field '" + field + "': expected " + std::to_string(expected) +
               " values, binary reference declares " + std::to_string(count));
    return sidecar.read(doc, line, static_cast<std::size_t>(offset),
                        static_cast<std::size_t>(count), field);
  }
  Eigen::Index found = static_cast<Eigen::Index>(tokens.size() - from);
  if (found != expected)
    fail(doc, line,
         "field '" + field + "': expected " + std::to_string(expected) +
             " values, found " + std::to_string(found));
  Vec out(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    if (!parse_double_token(tokens[from + static_cast<std::size_t>(i)], out[i]))
      fail(doc, line,
           "field '" + field + "': value " + std::to_string(i) + " ('" +
               std::string(tokens[from + static_cast<std::size_t>(i)]) +
               "') is not a number");
  }
  return out;
}

void expect_end_and_eof(TextDoc& doc, int line,
                        const std::vector<std::string_view>& tokens) {
  if (tokens.size() != 1 || tokens[0] != "end")
    fail(doc, line, "expected 'end', found '" + joined(tokens) + "'");
  int extra_line = 0;
  std::vector<std::string_view> extra;
  if (doc.next(extra_line, extra))
    fail(doc, extra_line, "unexpected content after 'end'");
}

void append_values(std::string& text, const Vec& values) {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    text += ' ';
    text += format_double(values[i]);
  }
}

constexpr std::string_view kCacheMagic = "quadrig-cache-1\n";  // 16 bytes

}  // namespace

ParseError::ParseError(const std::string& path, int line,
                       const std::string& message)
    : std::runtime_error(location(path, line) + ": " + message),
      path_(path),
      line_(line) {}

std::string format_double(double value) {
  std::array<char, 32> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

BlendshapeModel read_rig_raw(const std::string& path) {
  TextDoc doc(path);
  expect_header(doc, "rig");
  long long n = expect_count_line(doc, "n");
  long long m = expect_count_line(doc, "m");
  long long n_pairs = expect_count_line(doc, "pairs");
  Eigen::Index coords = static_cast<Eigen::Index>(3 * n);

  BlendshapeModel model;
  model.n_vertices = static_cast<int>(n);
  model.n_blendshapes = static_cast<int>(m);
  model.neutral.resize(coords);
  model.deltas.resize(coords, static_cast<Eigen::Index>(m));

  int line = 0;
  std::vector<std::string_view> tokens;
  Sidecar sidecar;

  if (!doc.next(line, tokens))
    fail(doc, 0, "unexpected end of file: expected 'neutral'");
  if (tokens[0] == "binary") {
    if (tokens.size() != 2)
      fail(doc, line, "expected 'binary <file>', found '" + joined(tokens) + "'");
    sidecar.declared = true;
    sidecar.name = std::string(tokens[1]);
    std::filesystem::path sidecar_path =
        std::filesystem::path(path).parent_path() / sidecar.name;
    sidecar.bytes = read_file_bytes(sidecar_path.string());
    if (!doc.next(line, tokens))
      fail(doc, 0, "unexpected end of file: expected 'neutral'");
  }

  if (tokens[0] != "neutral")
    fail(doc, line, "expected 'neutral', found '" + joined(tokens) + "'");
  model.neutral = read_values(doc, line, tokens, 1, coords, "neutral", sidecar);

  for (long long j = 0; j < m; ++j) {
    if (!doc.next(line, tokens))
      fail(doc, 0,
           "unexpected end of file: expected 'delta " + std::to_string(j) +
               "' (m = " + std::to_string(m) + " declares " +
               std::to_string(m) + " delta columns)");
    if (tokens[0] != "delta")
      fail(doc, line,
           "expected 'delta " + std::to_string(j) + "' (m = " +
               std::to_string(m) + " declares " + std::to_string(m) +
               " delta columns), found '" + joined(tokens) + "'");
    long long idx = -1;
    if (tokens.size() < 2 || !parse_int_token(tokens[1], idx))
      fail(doc, line, "expected 'delta <index> ...', found '" + joined(tokens) + "'");
    if (idx != j)
      fail(doc, line,
           "delta columns must appear in order 0.." + std::to_string(m - 1) +
               "; expected delta " + std::to_string(j) + ", found delta " +
               std::to_string(idx));
    model.deltas.col(static_cast<Eigen::Index>(j)) = read_values(
        doc, line, tokens, 2, coords, "delta " + std::to_string(j), sidecar);
  }

  model.corrective_pairs.reserve(static_cast<std::size_t>(n_pairs));
  while (true) {
    if (!doc.next(line, tokens))
      fail(doc, 0, "unexpected end of file: expected 'corrective' or 'end'");
    if (tokens[0] != "corrective") break;
    std::string field = "corrective pair " +
                        std::to_string(model.corrective_pairs.size());
    long long j = 0, k = 0;
    if (tokens.size() < 3 || !parse_int_token(tokens[1], j) ||
        !parse_int_token(tokens[2], k))
      fail(doc, line,
           field + ": expected 'corrective <j> <k> ...', found '" +
               joined(tokens) + "'");
    if (j < 0 || j >= m || k < 0 || k >= m)
      fail(doc, line,
           field + ": blendshape index out of range [0, " + std::to_string(m) +
               ") in (" + std::to_string(j) + ", " + std::to_string(k) + ")");
    CorrectivePair pair;
    pair.j = static_cast<int>(j);
    pair.k = static_cast<int>(k);
    pair.offsets = read_values(doc, line, tokens, 3, coords, field, sidecar);
    model.corrective_pairs.push_back(std::move(pair));
  }
  if (static_cast<long long>(model.corrective_pairs.size()) != n_pairs)
    fail(doc, line,
         "header declares pairs = " + std::to_string(n_pairs) + ", found " +
             std::to_string(model.corrective_pairs.size()) +
             " corrective lines");

  expect_end_and_eof(doc, line, tokens);
  return model;
}

BlendshapeModel read_rig(const std::string& path) {
  BlendshapeModel model = read_rig_raw(path);
  std::vector<std::string> problems = validate_model(model);
  if (!problems.empty()) {
    std::string msg = "invalid rig '" + path + "': " + problems[0];
    for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
    throw std::runtime_error(msg);
  }
  return model;
}

void write_rig(const BlendshapeModel& model, const std::string& path,
               bool binary_arrays) {
  std::string text = "quadrig rig 1\n";
  text += "n " + std::to_string(model.n_vertices) + "\n";
  text += "m " + std::to_string(model.n_blendshapes) + "\n";
  text += "pairs " + std::to_string(model.corrective_pairs.size()) + "\n";

  std::string bin;
  std::string sidecar_name;
  if (binary_arrays) {
    sidecar_name = std::filesystem::path(path).filename().string() + ".bin";
    text += "binary " + sidecar_name + "\n";
  }
  auto emit = [&](const std::string& prefix, const Vec& values) {
    text += prefix;
    if (binary_arrays) {
      std::size_t offset = bin.size() / 8;
      for (Eigen::Index i = 0; i < values.size(); ++i) put_f64(bin, values[i]);
      text += " @ " + std::to_string(offset) + " " +
              std::to_string(values.size());
    } else {
      append_values(text, values);
    }
    text += "\n";
  };

  emit("neutral", model.neutral);
  for (int j = 0; j < model.n_blendshapes; ++j)
    emit("delta " + std::to_string(j), model.deltas.col(j));
  for (const CorrectivePair& pair : model.corrective_pairs)
    emit("corrective " + std::to_string(pair.j) + " " + std::to_string(pair.k),
         pair.offsets);
  text += "end\n";

  if (binary_arrays) {
    std::filesystem::path sidecar_path =
        std::filesystem::path(path).parent_path() / sidecar_name;
    write_file_bytes(sidecar_path.string(), bin);
  }
  write_file_bytes(path, text);
}

TargetMesh read_target(const std::string& path) {
  TextDoc doc(path);
  expect_header(doc, "target");
  long long n = expect_count_line(doc, "n");
  Eigen::Index coords = static_cast<Eigen::Index>(3 * n);

  int line = 0;
  std::vector<std::string_view> tokens;
  if (!doc.next(line, tokens))
    fail(doc, 0, "unexpected end of file: expected 'coords'");
  if (tokens[0] != "coords")
    fail(doc, line, "expected 'coords', found '" + joined(tokens) + "'");
  TargetMesh target;
  target.coords = read_values(doc, line, tokens, 1, coords, "coords", {});
  for (Eigen::Index i = 0; i < target.coords.size(); ++i) {
    if (!std::isfinite(target.coords[i]))
      fail(doc, line,
           "field 'coords': value " + std::to_string(i) + " is not finite");
  }

  if (!doc.next(line, tokens)) fail(doc, 0, "unexpected end of file: expected 'end'");
  expect_end_and_eof(doc, line, tokens);
  return target;
}

void write_target(const TargetMesh& target, const std::string& path) {
  std::string text = "quadrig target 1\n";
  text += "n " + std::to_string(target.coords.size() / 3) + "\n";
  text += "coords";
  append_values(text, target.coords);
  text += "\nend\n";
  write_file_bytes(path, text);
}

WeightVector read_weights(const std::string& path) {
  TextDoc doc(path);
  expect_header(doc, "weights");
  long long m = expect_count_line(doc, "m");

  int line = 0;
  std::vector<std::string_view> tokens;
  if (!doc.next(line, tokens))
    fail(doc, 0, "unexpected end of file: expected 'values'");
  if (tokens[0] != "values")
    fail(doc, line, "expected 'values', found '" + joined(tokens) + "'");
  WeightVector weights;
  weights.values = read_values(doc, line, tokens, 1,
                               static_cast<Eigen::Index>(m), "values", {});

  if (!doc.next(line, tokens)) fail(doc, 0, "unexpected end of file: expected 'end'");
  expect_end_and_eof(doc, line, tokens);
  return weights;
}

void write_weights(const WeightVector& weights, const std::string& path) {
  std::string text = "quadrig weights 1\n";
  text += "m " + std::to_string(weights.size()) + "\n";
  text += "values";
  append_values(text, weights.values);
  text += "\nend\n";
  write_file_bytes(path, text);
}

CacheFile read_cache(const std::string& path) {
  std::string bytes = read_file_bytes(path);
  if (bytes.size() < kCacheMagic.size() + 8 ||
      std::string_view(bytes).substr(0, kCacheMagic.size()) != kCacheMagic)
    throw ParseError(path, 0, "not a quadrig spectral cache (bad magic)");
  std::size_t rest = bytes.size() - kCacheMagic.size() - 8;
  if (rest % 32 != 0)
    throw ParseError(path, 0, "truncated cache record block");
  std::size_t count = rest / 32;

  CacheFile file;
  file.model_hash = take_u64(&bytes[kCacheMagic.size()]);
  file.lambda_min.resize(static_cast<Eigen::Index>(count));
  file.lambda_max.resize(static_cast<Eigen::Index>(count));
  file.sigma.resize(static_cast<Eigen::Index>(count));
  const char* p = bytes.data() + kCacheMagic.size() + 8;
  for (std::size_t i = 0; i < count; ++i, p += 32) {
    double index = take_f64(p);
    if (index != static_cast<double>(i))
      throw ParseError(path, 0,
                       "corrupt cache: record " + std::to_string(i) +
                           " has coordinate index " + format_double(index));
    Eigen::Index e = static_cast<Eigen::Index>(i);
    file.lambda_min[e] = take_f64(p + 8);
    file.lambda_max[e] = take_f64(p + 16);
    file.sigma[e] = take_f64(p + 24);
  }
  return file;
}

void write_cache(const SpectralCache& cache, std::uint64_t model_hash,
                 const std::string& path) {
  if (!cache.spectra_ready)
    throw std::logic_error("write_cache: spectra not computed");
  std::string bytes(kCacheMagic);
  put_u64(bytes, model_hash);
  for (int i = 0; i < cache.n_coords; ++i) {
    put_f64(bytes, static_cast<double>(i));
    put_f64(bytes, cache.lambda_min[i]);
    put_f64(bytes, cache.lambda_max[i]);
    put_f64(bytes, cache.sigma[i]);
  }
  write_file_bytes(path, bytes);
}

void load_cache(SpectralCache& cache, const BlendshapeModel& model,
                const std::string& path) {
  CacheFile file = read_cache(path);
  std::uint64_t expected = content_hash(model);
  if (file.model_hash != expected)
    throw StaleCacheError("spectral cache '" + path +
                          "' was written for a different model "
                          "(content hash mismatch)");
  if (file.sigma.size() != cache.n_coords)
    throw StaleCacheError("spectral cache '" + path + "' holds " +
                          std::to_string(file.sigma.size()) +
                          " coordinates, model has " +
                          std::to_string(cache.n_coords));
  cache.lambda_min = std::move(file.lambda_min);
  cache.lambda_max = std::move(file.lambda_max);
  cache.sigma = std::move(file.sigma);
  // Same serial ascending order as compute_spectra, so the sum is
  // bit-identical to a fresh precompute.
  double acc = 0.0;
  for (int i = 0; i < cache.n_coords; ++i) acc += cache.sigma[i] * cache.sigma[i];
  cache.sigma_sq_sum = acc;
  cache.spectra_ready = true;
}

std::string report_json(const FitReport& report, const SolverConfig& config,
                        double cardinality_threshold) {
  nlohmann::json j;
  j["format"] = "quadrig-report";
  j["version"] = 1;

  const char* init = "zeros";
  if (config.init == InitMode::Constant) init = "constant";
  if (config.init == InitMode::Given) init = "given";
  j["config"] = {
      {"alpha", config.alpha},
      {"max_iterations", config.max_iterations},
      {"tolerance", config.tolerance},
      {"init", init},
      {"init_constant", config.init_constant},
  };

  j["weights"] = std::vector<double>(
      report.weights.values.data(),
      report.weights.values.data() + report.weights.values.size());
  j["objective_trace"] = report.objective_trace;
  j["surrogate_gaps"] = report.surrogate_gaps;
  j["iterations_run"] = report.iterations_run;
  j["converged"] = report.converged;
  j["stalled"] = report.stalled;

  j["metrics"] = {
      {"data_fidelity", report.final_data_fidelity},
      {"regularizer", report.final_regularizer},
      {"objective", report.final_data_fidelity + report.final_regularizer},
      {"cardinality", cardinality(report.weights, cardinality_threshold)},
      {"cardinality_threshold", cardinality_threshold},
  };
  j["timing"] = {
      {"precompute_seconds", report.timing.precompute_seconds},
      {"solve_seconds", report.timing.solve_seconds},
  };
  return j.dump(2) + "\n";
}

void write_report(const FitReport& report, const SolverConfig& config,
                  const std::string& path, double cardinality_threshold) {
  write_file_bytes(path, report_json(report, config, cardinality_threshold));
}

}  // namespace quadrig::io
