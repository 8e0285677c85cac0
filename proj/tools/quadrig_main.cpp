// quadrig CLI: generate / precompute / fit / baseline / compare / validate.
// Exit codes: 0 success, 1 data or compute error, 2 usage error.
#include "quadrig/baselines.hpp"
#include "quadrig/io.hpp"
#include "quadrig/model.hpp"
#include "quadrig/solver.hpp"
#include "quadrig/spectral.hpp"
#include "quadrig/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace quadrig;
using nlohmann::json;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void apply_threads(int threads_flag) {
  int threads = threads_flag;
  if (threads <= 0) {
    if (const char* env = std::getenv("QUADRIG_THREADS")) {
      threads = std::atoi(env);
    }
  }
  if (threads > 0) omp_set_num_threads(threads);
}

void check_target_dims(const BlendshapeModel& model, const TargetMesh& target) {
  if (target.coords.size() != model.coords())
    throw std::runtime_error(
        "target has " + std::to_string(target.coords.size()) +
        " coordinates, model expects " + std::to_string(model.coords()));
}

// Build the spectral cache, reusing `cache_path` when it matches the model.
// A stale or unreadable cache is recomputed and rewritten, never trusted.
SpectralCache prepare_cache(const BlendshapeModel& model,
                            const std::string& cache_path, double* seconds) {
  const auto t0 = std::chrono::steady_clock::now();
  SpectralCache cache = assemble(model);
  bool loaded = false;
  if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
    try {
      io::load_cache(cache, model, cache_path);
      loaded = true;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "note: ignoring cache: %s\n", e.what());
    }
  }
  if (!cache.spectra_ready) {
    compute_spectra(cache);
    if (!cache_path.empty() && !loaded)
      io::write_cache(cache, content_hash(model), cache_path);
  }
  if (seconds) *seconds = seconds_since(t0);
  return cache;
}

struct GenerateOpts {
  SynthSpec spec;
  long long seed = 0;
  std::string out_model, out_target, out_truth;
  bool binary = false;
};

int run_generate(const GenerateOpts& o) {
  SynthSpec spec = o.spec;
  spec.seed = static_cast<std::uint64_t>(o.seed);
  BlendshapeModel model = generate_model(spec);  // throws on bad spec
  io::write_rig(model, o.out_model, o.binary);
  if (!o.out_target.empty() || !o.out_truth.empty()) {
    TargetSample sample = generate_target(model, spec);
    if (!o.out_target.empty()) io::write_target(sample.target, o.out_target);
    if (!o.out_truth.empty()) io::write_weights(sample.truth, o.out_truth);
  }
  std::printf("generated rig: n=%d m=%d pairs=%zu seed=%llu\n",
              model.n_vertices, model.n_blendshapes,
              model.corrective_pairs.size(),
              static_cast<unsigned long long>(spec.seed));
  return 0;
}

struct PrecomputeOpts {
  std::string model_path, out_cache;
};

int run_precompute(const PrecomputeOpts& o) {
  BlendshapeModel model = io::read_rig(o.model_path);
  double seconds = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  SpectralCache cache = assemble(model);
  compute_spectra(cache);
  seconds = seconds_since(t0);
  io::write_cache(cache, content_hash(model), o.out_cache);
  std::printf("cached spectra for %d coordinates (hash %016llx) in %.3fs\n",
              cache.n_coords,
              static_cast<unsigned long long>(content_hash(model)), seconds);
  return 0;
}

struct FitOpts {
  std::string model_path, target_path;
  SolverConfig config;
  std::string init_name = "zeros";
  std::string weights_path;  // --init given
  std::string cache_path, out_report, out_weights;
  double threshold = 1e-3;
};

int run_fit(const FitOpts& o) {
  BlendshapeModel model = io::read_rig(o.model_path);
  TargetMesh target = io::read_target(o.target_path);
  check_target_dims(model, target);

  SolverConfig config = o.config;
  if (o.init_name == "zeros") config.init = InitMode::Zeros;
  if (o.init_name == "constant") config.init = InitMode::Constant;
  if (o.init_name == "given") {
    config.init = InitMode::Given;
    if (o.weights_path.empty())
      throw std::runtime_error("--init given requires --weights");
    config.init_weights = io::read_weights(o.weights_path);
  }
  validate_config(config, model.n_blendshapes);  // throws, names the problem

  double precompute_seconds = 0.0;
  SpectralCache cache = prepare_cache(model, o.cache_path, &precompute_seconds);

  FitReport report = solve(model, cache, target, config);
  report.timing.precompute_seconds = precompute_seconds;

  const double objective =
      report.final_data_fidelity + report.final_regularizer;
  std::printf(
      "objective %.6e (fidelity %.6e + regularizer %.6e), iterations %d, "
      "cardinality(>%g) %d\n",
      objective, report.final_data_fidelity, report.final_regularizer,
      report.iterations_run, o.threshold,
      cardinality(report.weights, o.threshold));
  if (!report.converged)
    std::printf("note: max iterations reached before the surrogate gap "
                "dropped below %g\n", config.tolerance);

  if (!o.out_report.empty())
    io::write_report(report, config, o.out_report, o.threshold);
  if (!o.out_weights.empty()) io::write_weights(report.weights, o.out_weights);
  return 0;
}

struct BaselineOpts {
  std::string method = "closed-form";
  std::string model_path, target_path;
  BaselineConfig config;
  std::string out_report, out_weights;
  double threshold = 1e-3;
};

int run_baseline(const BaselineOpts& o) {
  BlendshapeModel model = io::read_rig(o.model_path);
  TargetMesh target = io::read_target(o.target_path);
  check_target_dims(model, target);

  json j;
  j["format"] = "quadrig-baseline-report";
  j["version"] = 1;
  j["method"] = o.method;
  j["config"] = {{"alpha", o.config.alpha}, {"clamp", o.config.clamp}};

  WeightVector weights;
  const auto t0 = std::chrono::steady_clock::now();
  if (o.method == "closed-form") {
    ClosedFormResult result = solve_closed_form(model, target, o.config);
    weights = result.weights;
    j["raw_weights"] = std::vector<double>(
        result.raw.data(), result.raw.data() + result.raw.size());
  } else {
    SequentialResult result = solve_sequential(model, target);
    weights = result.weights;
    j["visit_order"] = result.visit_order;
    j["residual_norms"] = result.residual_norms;
  }
  const double solve_seconds = seconds_since(t0);

  const double fid_quadratic =
      (evaluate_quadratic(model, weights) - target.coords).squaredNorm();
  const double fid_linear =
      (evaluate_linear(model, weights) - target.coords).squaredNorm();
  j["weights"] = std::vector<double>(
      weights.values.data(), weights.values.data() + weights.values.size());
  j["metrics"] = {{"fidelity_quadratic", fid_quadratic},
                  {"fidelity_linear", fid_linear},
                  {"cardinality", cardinality(weights, o.threshold)},
                  {"cardinality_threshold", o.threshold}};
  j["timing"] = {{"solve_seconds", solve_seconds}};

  std::printf("%s: quadratic fidelity %.6e, linear fidelity %.6e, "
              "cardinality(>%g) %d\n",
              o.method.c_str(), fid_quadratic, fid_linear, o.threshold,
              cardinality(weights, o.threshold));
  if (!o.out_report.empty()) {
    std::string text = j.dump(2) + "\n";
    std::ofstream out(o.out_report, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + o.out_report + "'");
    out << text;
  }
  if (!o.out_weights.empty()) io::write_weights(weights, o.out_weights);
  return 0;
}

struct CompareOpts {
  std::string model_path, target_path, truth_path;
  std::vector<double> alphas{0.0};
  std::string cache_path, out_path;
  double threshold = 1e-3;
  bool pretty = false;
};

int run_compare(const CompareOpts& o) {
  BlendshapeModel model = io::read_rig(o.model_path);
  TargetMesh target = io::read_target(o.target_path);
  check_target_dims(model, target);
  std::optional<WeightVector> truth;
  if (!o.truth_path.empty()) {
    truth = io::read_weights(o.truth_path);
    if (truth->size() != model.n_blendshapes)
      throw std::runtime_error("truth weights have " +
                               std::to_string(truth->size()) +
                               " entries, model has " +
                               std::to_string(model.n_blendshapes));
  }

  double precompute_seconds = 0.0;
  SpectralCache cache = prepare_cache(model, o.cache_path, &precompute_seconds);

  json rows = json::array();
  auto add_row = [&](const std::string& method, double alpha,
                     const WeightVector& w, int iterations, double seconds) {
    json row;
    row["method"] = method;
    row["alpha"] = alpha;
    row["fidelity_quadratic"] =
        (evaluate_quadratic(model, w) - target.coords).squaredNorm();
    row["fidelity_linear"] =
        (evaluate_linear(model, w) - target.coords).squaredNorm();
    row["cardinality"] = cardinality(w, o.threshold);
    if (truth)
      row["recovery_error_inf"] =
          (w.values - truth->values).cwiseAbs().maxCoeff();
    row["iterations"] = iterations;
    row["wall_seconds"] = seconds;
    rows.push_back(row);
  };

  for (double alpha : o.alphas) {
    SolverConfig config;
    config.alpha = alpha;
    const auto t0 = std::chrono::steady_clock::now();
    FitReport report = solve(model, cache, target, config);
    add_row("mm", alpha, report.weights, report.iterations_run,
            seconds_since(t0));
  }
  {
    BaselineConfig config;
    const auto t0 = std::chrono::steady_clock::now();
    ClosedFormResult result = solve_closed_form(model, target, config);
    add_row("closed-form", config.alpha, result.weights, 1,
            seconds_since(t0));
  }
  {
    const auto t0 = std::chrono::steady_clock::now();
    SequentialResult result = solve_sequential(model, target);
    add_row("sequential", 0.0, result.weights, model.n_blendshapes,
            seconds_since(t0));
  }

  json doc;
  doc["format"] = "quadrig-compare";
  doc["version"] = 1;
  doc["cardinality_threshold"] = o.threshold;
  doc["precompute_seconds"] = precompute_seconds;
  doc["rows"] = rows;
  const std::string text = doc.dump(2) + "\n";

  if (!o.out_path.empty()) {
    std::ofstream out(o.out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + o.out_path + "'");
    out << text;
  }
  if (o.pretty) {
    std::printf("%-12s %7s %18s %18s %5s %10s %6s %10s\n", "method", "alpha",
                "fid(quadratic)", "fid(linear)", "card",
                truth ? "rec(inf)" : "-", "iters", "wall(s)");
    for (const auto& row : rows) {
      char rec[24] = "-";
      if (truth)
        std::snprintf(rec, sizeof(rec), "%.3e",
                      row["recovery_error_inf"].get<double>());
      std::printf("%-12s %7g %18.6e %18.6e %5d %10s %6d %10.4f\n",
                  row["method"].get<std::string>().c_str(),
                  row["alpha"].get<double>(),
                  row["fidelity_quadratic"].get<double>(),
                  row["fidelity_linear"].get<double>(),
                  row["cardinality"].get<int>(), rec,
                  row["iterations"].get<int>(),
                  row["wall_seconds"].get<double>());
    }
  } else if (o.out_path.empty()) {
    std::fputs(text.c_str(), stdout);
  }
  return 0;
}

struct ValidateOpts {
  std::string model_path, target_path, weights_path;
};

int run_validate(const ValidateOpts& o) {
  BlendshapeModel model = io::read_rig_raw(o.model_path);
  std::vector<std::string> problems = validate_model(model);
  if (!o.target_path.empty()) {
    TargetMesh target = io::read_target(o.target_path);
    if (target.coords.size() != model.coords())
      problems.push_back("target has " + std::to_string(target.coords.size()) +
                         " coordinates, model expects " +
                         std::to_string(model.coords()));
  }
  if (!o.weights_path.empty()) {
    WeightVector weights = io::read_weights(o.weights_path);
    if (weights.size() != model.n_blendshapes)
      problems.push_back("weights have " + std::to_string(weights.size()) +
                         " entries, model has " +
                         std::to_string(model.n_blendshapes));
  }
  if (problems.empty()) {
    std::printf("ok: n=%d m=%d pairs=%zu\n", model.n_vertices,
                model.n_blendshapes, model.corrective_pairs.size());
    return 0;
  }
  for (const std::string& p : problems)
    std::printf("violation: %s\n", p.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inverse rig solver for quadratic blendshape face models"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "OpenMP thread cap (default: QUADRIG_THREADS or all cores)");

  GenerateOpts gen;
  CLI::App* generate = app.add_subcommand("generate", "generate a synthetic rig/target/truth triple");
  generate->add_option("--n", gen.spec.n_vertices, "vertex count")->required();
  generate->add_option("--m", gen.spec.n_blendshapes, "blendshape count")->required();
  generate->add_option("--pairs", gen.spec.n_pairs, "corrective pair count")->required();
  generate->add_option("--locality", gen.spec.locality, "window fraction per blendshape");
  generate->add_option("--delta-scale", gen.spec.delta_scale, "blendshape offset magnitude");
  generate->add_option("--corrective-scale", gen.spec.corrective_scale, "corrective offset magnitude");
  generate->add_option("--sparsity", gen.spec.sparsity, "active fraction of ground-truth weights");
  generate->add_option("--noise", gen.spec.noise_std, "target coordinate noise stddev");
  generate->add_option("--seed", gen.seed, "PRNG seed")->required();
  generate->add_option("--out-model", gen.out_model, "rig output path")->required();
  generate->add_option("--out-target", gen.out_target, "target output path");
  generate->add_option("--out-truth", gen.out_truth, "ground-truth weights output path");
  generate->add_flag("--binary", gen.binary, "store big rig arrays in a binary sidecar");

  PrecomputeOpts pre;
  CLI::App* precompute = app.add_subcommand("precompute", "compute and store the spectral cache");
  precompute->add_option("--model", pre.model_path, "rig path")->required();
  precompute->add_option("--out-cache", pre.out_cache, "cache output path")->required();

  FitOpts fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "solve the inverse rig problem");
  fit_cmd->add_option("--model", fit.model_path, "rig path")->required();
  fit_cmd->add_option("--target", fit.target_path, "target mesh path")->required();
  fit_cmd->add_option("--alpha", fit.config.alpha, "L1 regularization weight");
  fit_cmd->add_option("--max-iters", fit.config.max_iterations, "outer iteration budget");
  fit_cmd->add_option("--eps", fit.config.tolerance, "surrogate-gap stopping tolerance");
  fit_cmd->add_option("--init", fit.init_name, "starting point")
      ->check(CLI::IsMember({"zeros", "constant", "given"}));
  fit_cmd->add_option("--init-constant", fit.config.init_constant, "value for --init constant");
  fit_cmd->add_option("--weights", fit.weights_path, "weights file for --init given");
  fit_cmd->add_option("--cache", fit.cache_path, "spectral cache path (reused when fresh, else rebuilt)");
  fit_cmd->add_option("--out-report", fit.out_report, "JSON report output path");
  fit_cmd->add_option("--out-weights", fit.out_weights, "fitted weights output path");
  fit_cmd->add_option("--threshold", fit.threshold, "cardinality activation threshold");

  BaselineOpts base;
  CLI::App* baseline = app.add_subcommand("baseline", "linear-rig baseline solvers");
  baseline->add_option("--method", base.method, "closed-form or sequential")
      ->required()
      ->check(CLI::IsMember({"closed-form", "sequential"}));
  baseline->add_option("--model", base.model_path, "rig path")->required();
  baseline->add_option("--target", base.target_path, "target mesh path")->required();
  baseline->add_option("--alpha", base.config.alpha, "ridge term (closed-form)");
  baseline->add_flag("--clamp,!--no-clamp", base.config.clamp, "clamp weights to [0,1]");
  baseline->add_option("--out-report", base.out_report, "JSON report output path");
  baseline->add_option("--out-weights", base.out_weights, "weights output path");
  baseline->add_option("--threshold", base.threshold, "cardinality activation threshold");

  CompareOpts cmp;
  CLI::App* compare = app.add_subcommand("compare", "run MM solver and baselines side by side");
  compare->add_option("--model", cmp.model_path, "rig path")->required();
  compare->add_option("--target", cmp.target_path, "target mesh path")->required();
  compare->add_option("--truth", cmp.truth_path, "ground-truth weights (adds recovery column)");
  compare->add_option("--alphas", cmp.alphas, "MM regularization weights")->delimiter(',');
  compare->add_option("--cache", cmp.cache_path, "spectral cache path");
  compare->add_option("--out", cmp.out_path, "JSON output path");
  compare->add_option("--threshold", cmp.threshold, "cardinality activation threshold");
  compare->add_flag("--pretty", cmp.pretty, "print an aligned table");

  ValidateOpts val;
  CLI::App* validate = app.add_subcommand("validate", "check a rig file against the model invariants");
  validate->add_option("--model", val.model_path, "rig path")->required();
  validate->add_option("--target", val.target_path, "optional target to dimension-check");
  validate->add_option("--weights", val.weights_path, "optional weights to dimension-check");

  int rc = 0;
  generate->callback([&] { apply_threads(threads); rc = run_generate(gen); });
  precompute->callback([&] { apply_threads(threads); rc = run_precompute(pre); });
  fit_cmd->callback([&] { apply_threads(threads); rc = run_fit(fit); });
  baseline->callback([&] { apply_threads(threads); rc = run_baseline(base); });
  compare->callback([&] { apply_threads(threads); rc = run_compare(cmp); });
  validate->callback([&] { apply_threads(threads); rc = run_validate(val); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
