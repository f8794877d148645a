// Acceptance suite: nine numbered criteria covering kernel exactness,
// end-to-end estimation quality, refinement behavior, determinism and
// uncertainty calibration. Prints one PASS/FAIL line per criterion and
// exits nonzero if any hard criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "epunmix/epunmix.hpp"
#include "oracles.hpp"

using namespace epunmix;
namespace fs = std::filesystem;

namespace {

struct CriterionResult {
  std::string name;
  bool pass = true;
  std::vector<std::string> notes;
  double seconds = 0;

  explicit CriterionResult(std::string n) : name(std::move(n)) {}

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("FAILED: " + what);
    }
  }
  void note(const std::string& what) { notes.push_back(what); }
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// ---------------------------------------------------------------- scenes --

struct SupervisedRun {
  SyntheticScene<double> scene;
  AbundancePosterior<double> ep;       // beta = 0.3
  AbundancePosterior<double> ep_flat;  // beta = 0
  MatrixX<double> fcls_abund;
  double delta = 0;
};

SceneConfig reference_config(std::uint64_t seed, Index side = 50) {
  SceneConfig cfg;
  cfg.width = side;
  cfg.height = side;
  cfg.endmembers = 5;
  cfg.bands = 100;
  cfg.regions = 12;
  cfg.sparsity = 3;
  cfg.seed = seed;
  return cfg;
}

SupervisedRun supervised_run(std::uint64_t seed) {
  SupervisedRun run;
  run.scene = generate_scene<double>(reference_config(seed));
  corrupt_scene(run.scene, 30.0, NoiseKind::isotropic, seed + 1000);
  run.delta = 10.0 * run.scene.noisy.data.cwiseAbs().maxCoeff();
  Hyperparams hyper;
  hyper.asc_delta = run.delta;
  run.ep = run_ep(run.scene.noisy, run.scene.endmembers, run.scene.noise, hyper).first;
  hyper.ising_beta = 0.0;
  run.ep_flat =
      run_ep(run.scene.noisy, run.scene.endmembers, run.scene.noise, hyper).first;
  run.fcls_abund = fcls(run.scene.noisy, run.scene.endmembers, run.delta);
  return run;
}

// ------------------------------------------------------------- criteria --

CriterionResult ac1_kernel_oracles() {
  CriterionResult r{"AC-1 kernel oracles vs adaptive quadrature (1e-8)"};
  double worst = 0;
  for (int i = 0; i <= 48; ++i) {
    const double alpha = -12.0 + 0.5 * i;
    for (double tau : {0.05, 1.0, 5.0}) {
      const double mu = alpha * std::sqrt(tau);
      const auto got = trunc_gauss_moments(mu, tau);
      const auto ref = oracles::trunc_moments(mu, tau);
      worst = std::max({worst, std::abs(got.mean - ref.mean),
                        std::abs(got.variance - ref.variance)});
      r.require(std::abs(got.mean - ref.mean) <= 1e-8,
                "trunc mean at alpha " + std::to_string(alpha));
      r.require(std::abs(got.variance - ref.variance) <= 1e-8,
                "trunc variance at alpha " + std::to_string(alpha));
    }
  }
  r.note("trunc moments worst |err| = " + std::to_string(worst));

  double worst_cdf = 0;
  for (int i = 0; i <= 64; ++i) {
    const double t = -8.0 + 0.25 * i;
    const double err = std::abs(std_normal_cdf(t) - oracles::std_normal_cdf(t));
    worst_cdf = std::max(worst_cdf, err);
    r.require(err <= 1e-8, "normal cdf at t " + std::to_string(t));
  }
  r.note("cdf worst |err| = " + std::to_string(worst_cdf));

  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> mean_dist(-3.0, 3.0);
  std::uniform_real_distribution<double> var_dist(0.05, 5.0);
  std::uniform_real_distribution<double> slab_dist(0.1, 2.0);
  std::uniform_real_distribution<double> logit_dist(-8.0, 8.0);
  double worst_tilted = 0;
  for (int i = 0; i < 200; ++i) {
    const double m1 = mean_dist(rng);
    const double v1 = var_dist(rng);
    const double v = slab_dist(rng);
    const double p3 = logit_dist(rng);
    const auto got = spike_slab_tilted_moments(m1, v1, v, p3);
    const auto ref = oracles::spike_slab(m1, v1, v, p3);
    const double err = std::max({std::abs(got.mean - ref.mean),
                                 std::abs(got.variance - ref.variance),
                                 std::abs(got.slab_probability - ref.slab_probability)});
    worst_tilted = std::max(worst_tilted, err);
    r.require(err <= 1e-8, "spike-slab tilted draw " + std::to_string(i));
  }
  r.note("tilted worst |err| = " + std::to_string(worst_tilted));
  return r;
}

CriterionResult ac2_ising_exactness() {
  CriterionResult r{"AC-2 Ising marginals vs 4-state enumeration (1e-12, 1e4 draws)"};
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> logit_dist(-10.0, 10.0);
  std::uniform_real_distribution<double> beta_dist(0.0, 2.0);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const double a = logit_dist(rng);
    const double b = logit_dist(rng);
    const double beta = (i % 10 == 0) ? 0.0 : beta_dist(rng);
    const auto [ma, mb] = ising_edge_marginals(a, b, beta);
    const auto [ra, rb] = oracles::ising_marginals(a, b, beta);
    worst = std::max({worst, std::abs(ma - ra), std::abs(mb - rb)});
    if (beta == 0.0) worst = std::max(worst, std::abs(ma - logistic(a)));
  }
  r.require(worst <= 1e-12, "worst deviation " + std::to_string(worst));
  r.note("worst |err| = " + std::to_string(worst));
  return r;
}

CriterionResult ac3_likelihood_exactness() {
  CriterionResult r{"AC-3 likelihood-site marginals vs dense posterior (1e-10)"};
  std::mt19937_64 rng(303);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.2, 2.0);
  double worst = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Index R = 1 + static_cast<Index>(rng() % 5);
    const Index L = R + 1 + static_cast<Index>(rng() % (20 - R));
    MatrixX<double> s(L, R);
    for (Index i = 0; i < L; ++i)
      for (Index c = 0; c < R; ++c) s(i, c) = std::abs(gauss(rng)) + 0.05;
    MatrixX<double> y(L, 1);
    for (Index i = 0; i < L; ++i) y(i, 0) = gauss(rng);
    NoiseModel<double> noise = NoiseModel<double>::isotropic(unif(rng));
    Eigen::MatrixXd dense = noise.isotropic_variance() * Eigen::MatrixXd::Identity(L, L);
    if (trial % 3 == 1) {
      VectorX<double> v(L);
      for (Index i = 0; i < L; ++i) v(i) = unif(rng);
      dense = v.asDiagonal();
      noise = NoiseModel<double>::diagonal(v);
    } else if (trial % 3 == 2) {
      MatrixX<double> b(L, L + 4);
      for (Index i = 0; i < L; ++i)
        for (Index k = 0; k < L + 4; ++k) b(i, k) = gauss(rng);
      dense = b * b.transpose() / double(L);
      dense = 0.5 * (dense + dense.transpose()).eval();
      noise = NoiseModel<double>::full(dense);
    }
    auto [state, q] = init_state<double>(R, 1);
    for (Index c = 0; c < R; ++c) {
      state.prior_prec(c, 0) = unif(rng);
      state.prior_info(c, 0) = gauss(rng);
    }
    HyperImage<double> img;
    img.width = 1;
    img.height = 1;
    img.data = y;
    const auto terms = make_likelihood_terms(img, s, noise);
    update_likelihood_site(state, q, terms, 1.0);
    const auto ref = oracles::pixel_posterior(s, dense, y.col(0), state.prior_prec.col(0),
                                              state.prior_info.col(0));
    for (Index c = 0; c < R; ++c) {
      const double scale = std::max(1.0, std::abs(ref.mean(c)));
      worst = std::max(worst, std::abs(q.mean(c, 0) - ref.mean(c)) / scale);
      worst = std::max(worst, std::abs(q.variance(c, 0) - ref.marginal_variance(c)) /
                                  std::max(1.0, ref.marginal_variance(c)));
    }
  }
  r.require(worst <= 1e-10, "worst relative deviation " + std::to_string(worst));
  r.note("worst rel |err| = " + std::to_string(worst));
  return r;
}

CriterionResult ac4_supervised(const std::vector<SupervisedRun>& runs) {
  CriterionResult r{"AC-4 supervised 50x50/R5/L100/30dB, 5 seeds: EP vs FCLS"};
  double ep_rmse = 0, f_rmse = 0, ep_sre = 0, f_sre = 0;
  for (const auto& run : runs) {
    ep_rmse += rmse(run.scene.abundances, run.ep.mean);
    f_rmse += rmse(run.scene.abundances, run.fcls_abund);
    ep_sre += sre_db(run.scene.abundances, run.ep.mean);
    f_sre += sre_db(run.scene.abundances, run.fcls_abund);
  }
  const double n = static_cast<double>(runs.size());
  ep_rmse /= n;
  f_rmse /= n;
  ep_sre /= n;
  f_sre /= n;
  std::ostringstream os;
  os << "mean EP rmse " << ep_rmse << " sre " << ep_sre << " dB | mean FCLS rmse " << f_rmse
     << " sre " << f_sre << " dB (both with sum-to-one weight 10 max|Y|)";
  r.note(os.str());
  r.require(ep_rmse < f_rmse, "EP rmse below FCLS rmse");
  r.require(ep_rmse <= 0.05, "EP rmse at most 0.05");
  r.require(ep_sre >= f_sre + 1.0, "EP sre at least FCLS + 1 dB");
  return r;
}

CriterionResult ac5_spatial_prior(const std::vector<SupervisedRun>& runs) {
  CriterionResult r{"AC-5 spatial prior: beta 0.3 rmse <= beta 0 on >= 4/5 seeds"};
  int wins = 0;
  std::ostringstream os;
  os << "per-seed (beta0.3, beta0):";
  for (const auto& run : runs) {
    const double with_prior = rmse(run.scene.abundances, run.ep.mean);
    const double without = rmse(run.scene.abundances, run.ep_flat.mean);
    if (with_prior <= without) ++wins;
    os << " (" << with_prior << ", " << without << ")";
  }
  r.note(os.str());
  r.note("wins: " + std::to_string(wins) + "/5");
  r.require(wins >= 4, "spatial prior helps on at least 4 of 5 seeds");
  return r;
}

CriterionResult ac6_mstep_oracle() {
  CriterionResult r{"AC-6 M-step vs normal equations (1e-6) and tv identity (1e-12)"};
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Index L = 12, R = 4, N = 60;
  MatrixX<double> truth(L, R), m(R, N);
  for (Index i = 0; i < L; ++i)
    for (Index c = 0; c < R; ++c) truth(i, c) = unif(rng);
  for (Index c = 0; c < R; ++c)
    for (Index nn = 0; nn < N; ++nn) m(c, nn) = unif(rng);
  VectorX<double> bands(L);
  for (Index i = 0; i < L; ++i) bands(i) = unif(rng);

  HyperImage<double> img;
  img.width = N;
  img.height = 1;
  img.data = truth * m;
  AbundancePosterior<double> q;
  q.mean = m;
  q.variance = MatrixX<double>::Constant(R, N, 1e-30);
  q.presence_logit = MatrixX<double>::Zero(R, N);
  const auto problem =
      make_m_step_problem(img, q, NoiseModel<double>::diagonal(bands), 0.0);
  const MatrixX<double> closed = problem.data_cross * problem.abundance_gram.inverse();
  r.require(closed.minCoeff() > 0, "oracle optimum is interior");
  const auto admm = m_step_admm(problem, 1.0, 2000, 1e-10);
  const double rel = (admm - closed).norm() / closed.norm();
  r.note("admm vs normal equations rel err = " + std::to_string(rel));
  r.require(rel <= 1e-6, "admm matches the closed form to 1e-6");

  double worst_tv = 0;
  for (int trial = 0; trial < 100; ++trial) {
    MatrixX<double> s(6, 4);
    for (Index i = 0; i < 6; ++i)
      for (Index c = 0; c < 4; ++c) s(i, c) = gauss(rng);
    const double ref = oracles::tv_pairwise(s);
    worst_tv = std::max(worst_tv, std::abs(tv_volume(s) - ref) / std::max(1.0, ref));
  }
  r.note("tv identity worst rel err = " + std::to_string(worst_tv));
  r.require(worst_tv <= 1e-12, "pairwise sum equals the centered Frobenius form");
  return r;
}

CriterionResult ac7_semisupervised() {
  CriterionResult r{"AC-7 semi-supervised 40dB, 5% perturbed init: EM improves"};
  int sad_ok = 0, rmse_ok = 0;
  std::ostringstream os;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto scene = generate_scene<double>(reference_config(seed));
    corrupt_scene(scene, 40.0, NoiseKind::isotropic, seed + 2000);
    std::mt19937_64 rng(seed + 500);
    std::normal_distribution<double> gauss(0.0, 1.0);
    EndmemberMatrix<double> init = scene.endmembers;
    for (Index i = 0; i < init.rows(); ++i)
      for (Index c = 0; c < init.cols(); ++c) init(i, c) *= 1.0 + 0.05 * gauss(rng);
    double init_sad = 0;
    for (Index c = 0; c < 5; ++c)
      init_sad += sad<double>(scene.endmembers.col(c), init.col(c));
    init_sad /= 5;

    Hyperparams hyper;
    hyper.tv_lambda = 0.0;
    hyper.damping = 0.5;
    hyper.max_ep_iters = 100;
    hyper.asc_delta = 10.0 * scene.noisy.data.cwiseAbs().maxCoeff();
    const auto perturbed = run_ep(scene.noisy, init, scene.noise, hyper).first;
    const double rmse_pert = rmse(scene.abundances, perturbed.mean);
    const auto [refined, posterior, report] = run_em(scene.noisy, init, scene.noise, hyper);

    const auto perm = match_endmembers(scene.endmembers, refined);
    double em_sad = 0;
    MatrixX<double> mean_perm(5, posterior.mean.cols());
    for (Index c = 0; c < 5; ++c) {
      em_sad +=
          sad<double>(scene.endmembers.col(c), refined.col(perm[static_cast<std::size_t>(c)]));
      mean_perm.row(c) = posterior.mean.row(perm[static_cast<std::size_t>(c)]);
    }
    em_sad /= 5;
    const double rmse_em = rmse(scene.abundances, mean_perm);
    if (em_sad < init_sad) ++sad_ok;
    if (rmse_em < rmse_pert) ++rmse_ok;
    os << " [seed " << seed << ": sad " << init_sad << " -> " << em_sad << ", rmse "
       << rmse_pert << " -> " << rmse_em << ", retries " << report.estep_retries << "]";
  }
  r.note("damping 0.5, 100 EP sweeps, sum-to-one weight 10 max|Y|, lambda 0");
  r.note(os.str());
  r.note("sad improved " + std::to_string(sad_ok) + "/5, rmse improved " +
         std::to_string(rmse_ok) + "/5");
  r.require(sad_ok >= 4, "mean SAD drops below the initial SAD on >= 4 of 5 seeds");
  r.require(rmse_ok >= 4, "rmse beats the perturbed-library EP run on >= 4 of 5 seeds");
  return r;
}

// ----------------------------------------------------------- cli helpers --

int run_cli(const std::vector<std::string>& args, const std::string& log_path) {
  std::ostringstream cmd;
  cmd << EPUNMIX_CLI_PATH;
  for (const auto& a : args) cmd << ' ' << a;
  cmd << " >" << log_path << " 2>&1";
  const int status = std::system(cmd.str().c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  const auto va = slurp(a);
  return !va.empty() && va == slurp(b);
}

CriterionResult ac8_determinism() {
  CriterionResult r{"AC-8 determinism, manifest reruns, thread consistency"};
  const fs::path root =
      fs::temp_directory_path() / ("epunmix_ac8_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string log = (root / "cli.log").string();

  // Usage-error contract.
  r.require(run_cli({"synth", "--width", "8"}, log) == 2, "missing flags exit with 2");
  r.require(run_cli({"unmix", "--cube", "x", "--library", "y", "--out", "z", "--method",
                     "nope"},
                    log) == 2,
            "unknown method exits with 2");

  // Deterministic synthesis: two runs, identical bytes, expected file set.
  const std::vector<std::string> synth_flags = {"--width",      "40", "--height", "40",
                                                "--endmembers", "4",  "--bands",  "60",
                                                "--snr",        "30", "--seed",   "7"};
  for (const char* dir : {"s1", "s2"}) {
    std::vector<std::string> args = synth_flags;
    args.insert(args.begin(), "synth");
    args.push_back("--out");
    args.push_back((root / dir).string());
    r.require(run_cli(args, log) == 0, std::string("synth run into ") + dir);
  }
  for (const char* name : {"y.bin", "y.bin.json", "library.csv", "abund_true.bin",
                           "abund_true.bin.json", "support_true.bin",
                           "support_true.bin.json", "noise.json", "manifest.json"})
    r.require(fs::exists(root / "s1" / name), std::string("synth writes ") + name);
  for (const char* name : {"y.bin", "library.csv", "abund_true.bin", "support_true.bin"})
    r.require(same_bytes(root / "s1" / name, root / "s2" / name),
              std::string("synth reruns byte-identical: ") + name);

  // Serial unmix, then a rerun reconstructed from the manifest's argv.
  const std::vector<std::string> unmix_args = {
      "unmix",     "--cube",   (root / "s1" / "y.bin").string(),
      "--library", (root / "s1" / "library.csv").string(),
      "--noise",   (root / "s1" / "noise.json").string(),
      "--beta",    "0.3",      "--threads", "1",
      "--out",     (root / "u1").string()};
  r.require(run_cli(unmix_args, log) == 0, "serial unmix succeeds");
  nlohmann::json manifest;
  {
    std::ifstream in(root / "u1" / "manifest.json");
    r.require(static_cast<bool>(in), "unmix writes a manifest");
    if (in) in >> manifest;
  }
  if (manifest.contains("argv")) {
    std::vector<std::string> rerun = manifest["argv"].get<std::vector<std::string>>();
    for (std::size_t i = 0; i + 1 < rerun.size(); ++i)
      if (rerun[i] == "--out") rerun[i + 1] = (root / "u2").string();
    r.require(run_cli(rerun, log) == 0, "manifest rerun succeeds");
    for (const char* name : {"abundance_mean.bin", "abundance_std.bin", "presence_prob.bin"})
      r.require(same_bytes(root / "u1" / name, root / "u2" / name),
                std::string("manifest rerun byte-identical: ") + name);
  } else {
    r.require(false, "manifest records argv");
  }

  // Thread consistency and the soft speedup check on a 100x100 scene.
  auto scene = generate_scene<double>(reference_config(11, 100));
  corrupt_scene(scene, 30.0, NoiseKind::isotropic, 1011);
  Hyperparams hyper;
  hyper.asc_delta = 10.0 * scene.noisy.data.cwiseAbs().maxCoeff();
  AbundancePosterior<double> q1, q4;
  double serial_s = 1e300, threaded_s = 1e300;
  for (int rep = 0; rep < 3; ++rep) {  // min-of-3 to damp scheduler noise
    double t = now_seconds();
    q1 = run_ep(scene.noisy, scene.endmembers, scene.noise, hyper, 1).first;
    serial_s = std::min(serial_s, now_seconds() - t);
    t = now_seconds();
    q4 = run_ep(scene.noisy, scene.endmembers, scene.noise, hyper, 4).first;
    threaded_s = std::min(threaded_s, now_seconds() - t);
  }
  const double dm = (q1.mean - q4.mean).cwiseAbs().maxCoeff();
  const double dp = (q1.presence_logit - q4.presence_logit).cwiseAbs().maxCoeff();
  r.note("threads 1 vs 4: max |dM| = " + std::to_string(dm) + ", max |dP| = " +
         std::to_string(dp));
  r.require(dm <= 1e-6 && dp <= 1e-6, "4-thread run within 1e-6 of serial");
  std::ostringstream os;
  os << "soft speed check (GPU speedups not reproduced): serial " << serial_s
     << " s vs 4 threads " << threaded_s << " s -> "
     << (threaded_s < serial_s ? "SOFT-PASS" : "SOFT-WARN");
  r.note(os.str());

  fs::remove_all(root);
  return r;
}

CriterionResult ac9_uncertainty(const std::vector<SupervisedRun>& runs) {
  CriterionResult r{"AC-9 uncertainty: presence separation and inactive stds"};
  std::ostringstream os;
  for (const auto& run : runs) {
    const auto probs = run.ep.probability();
    double act = 0, inact = 0;
    long act_n = 0, inact_n = 0;
    std::vector<double> stds_all, stds_inact;
    for (Index n = 0; n < run.scene.abundances.cols(); ++n)
      for (Index c = 0; c < run.scene.abundances.rows(); ++c) {
        const double sd = std::sqrt(run.ep.variance(c, n));
        stds_all.push_back(sd);
        if (run.scene.supports(c, n) > 0) {
          act += probs(c, n);
          ++act_n;
        } else {
          inact += probs(c, n);
          ++inact_n;
          stds_inact.push_back(sd);
        }
      }
    const double sep = act / act_n - inact / inact_n;
    std::nth_element(stds_all.begin(), stds_all.begin() + stds_all.size() / 2,
                     stds_all.end());
    std::nth_element(stds_inact.begin(), stds_inact.begin() + stds_inact.size() / 2,
                     stds_inact.end());
    const double med_all = stds_all[stds_all.size() / 2];
    const double med_inact = stds_inact[stds_inact.size() / 2];
    os << " [sep " << sep << ", med std inact " << med_inact << " vs all " << med_all << "]";
    r.require(sep >= 0.5, "presence probability separation at least 0.5");
    r.require(med_inact < med_all, "inactive stds sit below the scene median");
  }
  r.note(os.str());
  return r;
}

}  // namespace

int main() {
  std::vector<CriterionResult> results;
  const auto timed = [&](CriterionResult (*fn)()) {
    const double t = now_seconds();
    CriterionResult r = fn();
    r.seconds = now_seconds() - t;
    results.push_back(std::move(r));
  };

  timed(ac1_kernel_oracles);
  timed(ac2_ising_exactness);
  timed(ac3_likelihood_exactness);

  double t = now_seconds();
  std::vector<SupervisedRun> runs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) runs.push_back(supervised_run(seed));
  const double scene_s = now_seconds() - t;

  t = now_seconds();
  {
    CriterionResult r = ac4_supervised(runs);
    r.seconds = (now_seconds() - t) + scene_s;  // shared scene runs billed here
    results.push_back(std::move(r));
  }
  t = now_seconds();
  {
    CriterionResult r = ac5_spatial_prior(runs);
    r.seconds = now_seconds() - t;
    results.push_back(std::move(r));
  }
  timed(ac6_mstep_oracle);
  timed(ac7_semisupervised);
  timed(ac8_determinism);
  t = now_seconds();
  {
    CriterionResult r = ac9_uncertainty(runs);
    r.seconds = now_seconds() - t;
    results.push_back(std::move(r));
  }

  bool all_pass = true;
  std::printf("\n");
  for (const auto& r : results) {
    std::printf("%-68s %s (%.1f s)\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.seconds);
    for (const auto& n : r.notes) std::printf("    %s\n", n.c_str());
    all_pass = all_pass && r.pass;
  }
  std::printf("\nacceptance: %s\n", all_pass ? "ALL CRITERIA PASS" : "FAILURES PRESENT");
  return all_pass ? 0 : 1;
}
