// Batch front door: synthetic scenes, EP/FCLS unmixing, EM endmember
// refinement and evaluation, wired together through the cube/CSV/JSON
// formats. Exit codes: 0 success, 1 numerical failure, 2 usage error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "epunmix/epunmix.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace epunmix;

namespace {

constexpr const char* kSchema = "epunmix/1";

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

json json_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json ep_report_json(const EpReport& r) {
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"skipped_updates", r.skipped_updates},
          {"mean_deltas", r.mean_deltas},
          {"logit_deltas", r.logit_deltas}};
}

void write_manifest(const fs::path& dir, const json& manifest) {
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

struct SynthArgs {
  SceneConfig cfg;
  double snr_db = 30.0;
  std::string noise_shape = "isotropic";
  std::string out;
};

struct UnmixArgs {
  std::string cube, library, noise, out;
  std::string method = "ep";
  Hyperparams hyper;
  int threads = 1;
};

struct RefineArgs {
  UnmixArgs base;
  std::string init_library;
};

struct EvalArgs {
  std::string truth_abund, est_abund, truth_lib, est_lib, out;
};

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "isotropic") return NoiseKind::isotropic;
  if (name == "diagonal") return NoiseKind::diagonal;
  if (name == "full") return NoiseKind::full;
  throw InvalidArgument("unknown noise shape " + name);
}

int run_synth(const SynthArgs& a, const std::vector<std::string>& argv) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(a.out);
  auto scene = generate_scene<double>(a.cfg);
  corrupt_scene(scene, a.snr_db, parse_noise_kind(a.noise_shape), a.cfg.seed);

  const fs::path dir(a.out);
  write_cube(scene.noisy, (dir / "y.bin").string());
  write_library(scene.endmembers, (dir / "library.csv").string());
  write_map_stack(scene.abundances, a.cfg.width, a.cfg.height, (dir / "abund_true.bin").string());
  write_map_stack(scene.supports, a.cfg.width, a.cfg.height, (dir / "support_true.bin").string());
  write_noise_model(scene.noise, scene.noisy.bands(), (dir / "noise.json").string());

  json manifest = {
      {"schema", kSchema},
      {"command", "synth"},
      {"argv", argv},
      {"params",
       {{"width", a.cfg.width},
        {"height", a.cfg.height},
        {"endmembers", a.cfg.endmembers},
        {"bands", a.cfg.bands},
        {"regions", a.cfg.regions},
        {"sparsity", a.cfg.sparsity},
        {"asc", a.cfg.sum_to_one},
        {"snr_db", a.snr_db},
        {"noise_shape", a.noise_shape},
        {"seed", a.cfg.seed}}},
      {"report", {{"achieved_snr_db", scene.achieved_snr_db}}},
      {"outputs",
       {{"cube", "y.bin"},
        {"library", "library.csv"},
        {"abundances", "abund_true.bin"},
        {"supports", "support_true.bin"},
        {"noise", "noise.json"}}},
      {"timings", {{"total_s", seconds_since(start)}}},
  };
  write_manifest(dir, manifest);
  return 0;
}

int run_unmix(const UnmixArgs& a, const std::vector<std::string>& argv) {
  const auto start = std::chrono::steady_clock::now();
  const auto cube = read_cube<double>(a.cube);
  std::vector<std::string> warnings;
  const auto library = read_library<double>(a.library, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  if (library.rows() != cube.bands())
    throw DimensionMismatch("cube and library disagree on band count");

  fs::create_directories(a.out);
  const fs::path dir(a.out);
  json manifest = {
      {"schema", kSchema},
      {"command", "unmix"},
      {"argv", argv},
      {"inputs", {{"cube", a.cube}, {"library", a.library}, {"noise", a.noise}}},
      {"params",
       {{"method", a.method},
        {"slab_v", a.hyper.slab_variance},
        {"beta", a.hyper.ising_beta},
        {"damping", a.hyper.damping},
        {"asc_delta", a.hyper.asc_delta},
        {"tol", a.hyper.ep_tolerance},
        {"max_iters", a.hyper.max_ep_iters},
        {"threads", a.threads}}},
  };

  if (a.method == "fcls") {
    // FCLS always needs the sum-to-one weight; default to 10 max |Y|.
    const double delta = a.hyper.asc_delta > 0
                             ? a.hyper.asc_delta
                             : 10.0 * cube.data.cwiseAbs().maxCoeff();
    const auto abundances = fcls(cube, library, delta, a.threads);
    write_map_stack(abundances, cube.width, cube.height, (dir / "abundance_mean.bin").string());
    manifest["params"]["asc_delta"] = delta;
    manifest["report"] = {{"note", "fcls baseline: abundance maps only"}};
    manifest["outputs"] = {{"mean", "abundance_mean.bin"}};
  } else {
    const auto noise = read_noise_model<double>(a.noise);
    const auto ep_start = std::chrono::steady_clock::now();
    const auto [posterior, report] = run_ep(cube, library, noise, a.hyper, a.threads);
    const double ep_s = seconds_since(ep_start);
    write_map_stack(posterior.mean, cube.width, cube.height,
                    (dir / "abundance_mean.bin").string());
    write_map_stack(posterior.variance.cwiseSqrt(), cube.width, cube.height,
                    (dir / "abundance_std.bin").string());
    write_map_stack(posterior.probability(), cube.width, cube.height,
                    (dir / "presence_prob.bin").string());
    manifest["report"] = ep_report_json(report);
    manifest["outputs"] = {{"mean", "abundance_mean.bin"},
                           {"std", "abundance_std.bin"},
                           {"prob", "presence_prob.bin"}};
    manifest["timings"]["ep_s"] = ep_s;
  }
  manifest["timings"]["total_s"] = seconds_since(start);
  write_manifest(dir, manifest);
  return 0;
}

int run_refine(const RefineArgs& a, const std::vector<std::string>& argv) {
  const auto start = std::chrono::steady_clock::now();
  const auto cube = read_cube<double>(a.base.cube);
  std::vector<std::string> warnings;
  const auto init = read_library<double>(a.init_library, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  if (init.rows() != cube.bands())
    throw DimensionMismatch("cube and init library disagree on band count");
  const auto noise = read_noise_model<double>(a.base.noise);

  fs::create_directories(a.base.out);
  const fs::path dir(a.base.out);
  const auto [refined, posterior, report] = run_em(cube, init, noise, a.base.hyper, a.base.threads);
  write_library(refined, (dir / "refined_library.csv").string());
  write_map_stack(posterior.mean, cube.width, cube.height, (dir / "abundance_mean.bin").string());
  write_map_stack(posterior.variance.cwiseSqrt(), cube.width, cube.height,
                  (dir / "abundance_std.bin").string());
  write_map_stack(posterior.probability(), cube.width, cube.height,
                  (dir / "presence_prob.bin").string());

  json trace = json::array();
  for (const auto& step : report.trace)
    trace.push_back({{"objective_before_mstep", step.objective_before},
                     {"objective_after_mstep", step.objective_after},
                     {"endmember_rel_change", step.endmember_rel_change},
                     {"ep_iterations", step.ep_iterations}});
  {
    std::ofstream out(dir / "em_trace.json");
    if (!out) throw IoError("cannot write em_trace.json");
    out << json({{"schema", kSchema}, {"trace", trace}}).dump(2) << '\n';
  }

  json manifest = {
      {"schema", kSchema},
      {"command", "refine"},
      {"argv", argv},
      {"inputs",
       {{"cube", a.base.cube}, {"init_library", a.init_library}, {"noise", a.base.noise}}},
      {"params",
       {{"slab_v", a.base.hyper.slab_variance},
        {"beta", a.base.hyper.ising_beta},
        {"damping", a.base.hyper.damping},
        {"asc_delta", a.base.hyper.asc_delta},
        {"tol", a.base.hyper.ep_tolerance},
        {"max_iters", a.base.hyper.max_ep_iters},
        {"lambda", a.base.hyper.tv_lambda},
        {"rho", a.base.hyper.admm_rho},
        {"admm_iters", a.base.hyper.admm_iters},
        {"em_iters", a.base.hyper.max_em_iters},
        {"em_tol", a.base.hyper.em_tolerance},
        {"threads", a.base.threads}}},
      {"report",
       {{"em_iterations", report.iterations},
        {"em_converged", report.converged},
        {"final_ep", ep_report_json(report.final_ep)}}},
      {"outputs",
       {{"library", "refined_library.csv"},
        {"mean", "abundance_mean.bin"},
        {"std", "abundance_std.bin"},
        {"prob", "presence_prob.bin"},
        {"trace", "em_trace.json"}}},
      {"timings", {{"total_s", seconds_since(start)}}},
  };
  write_manifest(dir, manifest);
  return 0;
}

int run_eval(const EvalArgs& a) {
  const auto truth = read_map_stack<double>(a.truth_abund);
  const auto estimate = read_map_stack<double>(a.est_abund);
  MatrixX<double> truth_lib, est_lib;
  const bool match = !a.truth_lib.empty() && !a.est_lib.empty();
  if (!a.truth_lib.empty() != !a.est_lib.empty())
    throw InvalidArgument("endmember matching needs both --truth-lib and --est-lib");
  if (match) {
    truth_lib = read_library<double>(a.truth_lib);
    est_lib = read_library<double>(a.est_lib);
  }
  const EvalReport report = match ? evaluate<double>(truth, estimate, &truth_lib, &est_lib)
                                  : evaluate<double>(truth, estimate);
  json j = {{"schema", kSchema},
            {"rmse", report.rmse},
            {"sre_db", json_or_inf(report.sre_db)}};
  if (match) {
    j["sad"] = report.per_endmember_sad;
    j["mean_sad"] = report.mean_sad;
    j["permutation"] = report.permutation;
  }
  if (a.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream out(a.out);
    if (!out) throw IoError("cannot write " + a.out);
    out << j.dump(2) << '\n';
  }
  return 0;
}

void add_ep_flags(CLI::App* cmd, UnmixArgs& a) {
  cmd->add_option("--slab-v", a.hyper.slab_variance, "Slab variance of the abundance prior");
  cmd->add_option("--beta", a.hyper.ising_beta, "Spatial coupling strength");
  cmd->add_option("--damping", a.hyper.damping, "Site damping factor in (0, 1]");
  cmd->add_option("--asc-delta", a.hyper.asc_delta, "Sum-to-one weight (0 disables)");
  cmd->add_option("--tol", a.hyper.ep_tolerance, "EP convergence tolerance");
  cmd->add_option("--max-iters", a.hyper.max_ep_iters, "Maximum EP sweeps");
  cmd->add_option("--threads", a.threads, "Worker threads (1 = deterministic reference)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse spectral unmixing via expectation propagation"};
  app.require_subcommand(1);
  const std::vector<std::string> raw_args(argv + 1, argv + argc);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene");
  synth_cmd->add_option("--width", synth.cfg.width)->required();
  synth_cmd->add_option("--height", synth.cfg.height)->required();
  synth_cmd->add_option("--endmembers", synth.cfg.endmembers)->required();
  synth_cmd->add_option("--bands", synth.cfg.bands)->required();
  synth_cmd->add_option("--snr", synth.snr_db, "Target SNR in dB")->required();
  synth_cmd->add_option("--seed", synth.cfg.seed);
  synth_cmd->add_option("--regions", synth.cfg.regions);
  synth_cmd->add_option("--sparsity", synth.cfg.sparsity);
  synth_cmd->add_flag("--asc,!--no-asc", synth.cfg.sum_to_one, "Abundances on the simplex");
  synth_cmd->add_option("--noise-shape", synth.noise_shape)
      ->check(CLI::IsMember({"isotropic", "diagonal", "full"}));
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  UnmixArgs unmix;
  auto* unmix_cmd = app.add_subcommand("unmix", "Estimate abundances for a cube");
  unmix_cmd->add_option("--cube", unmix.cube)->required();
  unmix_cmd->add_option("--library", unmix.library)->required();
  unmix_cmd->add_option("--noise", unmix.noise, "Noise model JSON (required for --method ep)");
  unmix_cmd->add_option("--method", unmix.method)->check(CLI::IsMember({"ep", "fcls"}));
  unmix_cmd->add_option("--out", unmix.out, "Output directory")->required();
  add_ep_flags(unmix_cmd, unmix);

  RefineArgs refine;
  auto* refine_cmd = app.add_subcommand("refine", "Refine an endmember library via EM");
  refine_cmd->add_option("--cube", refine.base.cube)->required();
  refine_cmd->add_option("--init-library", refine.init_library)->required();
  refine_cmd->add_option("--noise", refine.base.noise)->required();
  refine_cmd->add_option("--out", refine.base.out, "Output directory")->required();
  refine_cmd->add_option("--lambda", refine.base.hyper.tv_lambda, "Minimum-volume weight");
  refine_cmd->add_option("--rho", refine.base.hyper.admm_rho, "ADMM penalty parameter");
  refine_cmd->add_option("--admm-iters", refine.base.hyper.admm_iters);
  refine_cmd->add_option("--em-iters", refine.base.hyper.max_em_iters);
  refine_cmd->add_option("--em-tol", refine.base.hyper.em_tolerance);
  add_ep_flags(refine_cmd, refine.base);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compare an estimate against ground truth");
  eval_cmd->add_option("--truth-abund", eval.truth_abund)->required();
  eval_cmd->add_option("--est-abund", eval.est_abund)->required();
  eval_cmd->add_option("--truth-lib", eval.truth_lib);
  eval_cmd->add_option("--est-lib", eval.est_lib);
  eval_cmd->add_option("--out", eval.out, "Report path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth, raw_args);
    if (unmix_cmd->parsed()) {
      if (unmix.method == "ep" && unmix.noise.empty()) {
        std::cerr << "unmix: --noise is required with --method ep\n";
        return 2;
      }
      return run_unmix(unmix, raw_args);
    }
    if (refine_cmd->parsed()) return run_refine(refine, raw_args);
    if (eval_cmd->parsed()) return run_eval(eval);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
