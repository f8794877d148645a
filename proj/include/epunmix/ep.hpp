#pragma once

#include <atomic>
#include <cmath>
#include <utility>
#include <vector>

#include "epunmix/gaussian.hpp"
#include "epunmix/graph.hpp"
#include "epunmix/types.hpp"

namespace epunmix {

/// Matched marginal variances are floored here before Gaussian division; the
/// spike branch can drive them to an exact zero.
inline constexpr double kVarianceFloor = 1e-12;

/// Near-flat initial site variance.
inline constexpr double kFlatVariance = 1e6;

struct EpReport {
  int iterations = 0;
  bool converged = false;
  long skipped_updates = 0;  // invalid-cavity site updates kept at old values
  std::vector<double> mean_deltas;   // per sweep, max |change| of the means
  std::vector<double> logit_deltas;  // per sweep, max |change| of the logits
};

/// Precomputed likelihood quantities shared by every sweep.
template <typename Scalar>
struct LikelihoodTerms {
  MatrixX<Scalar> gram;  // S^t Sigma^{-1} S, R x R
  MatrixX<Scalar> proj;  // S^t Sigma^{-1} Y, R x N
};

template <typename Scalar>
LikelihoodTerms<Scalar> make_likelihood_terms(const HyperImage<Scalar>& image,
                                              const EndmemberMatrix<Scalar>& endmembers,
                                              const NoiseModel<Scalar>& noise) {
  image.validate();
  validate_endmember_matrix(endmembers);
  if (endmembers.rows() != image.bands())
    throw DimensionMismatch("endmember library and cube disagree on band count");
  noise.check_bands(image.bands());
  LikelihoodTerms<Scalar> t;
  const MatrixX<Scalar> ws = noise.solve(endmembers);
  t.gram = endmembers.transpose() * ws;
  t.gram = Scalar(0.5) * (t.gram + t.gram.transpose()).eval();
  t.proj = ws.transpose() * image.data;
  return t;
}

/// Rebuilds the posterior parameters exactly from the sites.
template <typename Scalar>
void recombine(const EpFactorState<Scalar>& state, AbundancePosterior<Scalar>& q) {
  const ArrayXX<Scalar> prec = state.lik_prec.array() + state.prior_prec.array();
  if (!(prec.minCoeff() > Scalar(0)))
    throw CorruptedState("combined site precision is not positive");
  q.variance = prec.inverse().matrix();
  q.mean = ((state.lik_info.array() + state.prior_info.array()) / prec).matrix();
  q.presence_logit = state.prior_logit;
  for (const auto& m : state.ising_logit) q.presence_logit += m;
}

/// Flat start: zero means, near-flat variances, logits at zero (presence
/// probability one half), combined posterior recomputed from the sites.
template <typename Scalar>
std::pair<EpFactorState<Scalar>, AbundancePosterior<Scalar>> init_state(Index R, Index N) {
  if (R < 1 || N < 1) throw InvalidArgument("init_state requires R, N >= 1");
  EpFactorState<Scalar> s;
  const Scalar prec = Scalar(1) / Scalar(kFlatVariance);
  s.lik_prec = MatrixX<Scalar>::Constant(R, N, prec);
  s.lik_info = MatrixX<Scalar>::Zero(R, N);
  s.prior_prec = MatrixX<Scalar>::Constant(R, N, prec);
  s.prior_info = MatrixX<Scalar>::Zero(R, N);
  s.prior_logit = MatrixX<Scalar>::Zero(R, N);
  for (auto& m : s.ising_logit) m = MatrixX<Scalar>::Zero(R, N);
  AbundancePosterior<Scalar> q;
  recombine(s, q);
  return {std::move(s), std::move(q)};
}

/// Likelihood-site sweep. For each pixel independently, solves the R x R
/// Gaussian system against the prior-site cavity, moment-matches the
/// marginals, recovers the site by division and applies damping in natural
/// parameters. Pixels whose system matrix is not positive definite are
/// skipped and counted. Returns the number of skipped pixels.
template <typename Scalar>
long update_likelihood_site(EpFactorState<Scalar>& state, AbundancePosterior<Scalar>& q,
                            const LikelihoodTerms<Scalar>& terms, Scalar damping,
                            int threads = 1) {
  const Index R = state.lik_prec.rows();
  const Index N = state.lik_prec.cols();
  const Scalar keep = Scalar(1) - damping;
  std::atomic<long> skipped{0};
  parallel_for_blocks(N, threads, [&](Index begin, Index end) {
    // One workspace per block: the per-pixel systems are tiny and heap
    // traffic would dominate them.
    MatrixX<Scalar> a(R, R), cov(R, R);
    VectorX<Scalar> mean(R);
    Eigen::LLT<MatrixX<Scalar>> llt(R);
    long local_skipped = 0;
    for (Index n = begin; n < end; ++n) {
      a = terms.gram;
      a.diagonal() += state.prior_prec.col(n);
      llt.compute(a);
      if (llt.info() != Eigen::Success) {
        ++local_skipped;
        continue;
      }
      mean = terms.proj.col(n) + state.prior_info.col(n);
      llt.solveInPlace(mean);
      cov.setIdentity();
      llt.matrixL().solveInPlace(cov);
      llt.matrixU().solveInPlace(cov);
      for (Index r = 0; r < R; ++r) {
        const Scalar marg_prec = Scalar(1) / cov(r, r);
        const Scalar new_prec = marg_prec - state.prior_prec(r, n);
        const Scalar new_info = mean(r) * marg_prec - state.prior_info(r, n);
        state.lik_prec(r, n) = damping * new_prec + keep * state.lik_prec(r, n);
        state.lik_info(r, n) = damping * new_info + keep * state.lik_info(r, n);
      }
    }
    if (local_skipped) skipped.fetch_add(local_skipped, std::memory_order_relaxed);
  });
  recombine(state, q);
  return skipped.load();
}

template <typename Scalar>
struct SpikeSlabTilted {
  Scalar mean;
  Scalar variance;
  Scalar slab_probability;  // E[z] under the tilted distribution
};

/// Moments of the spike-and-slab tilted distribution
///   [z * 2 N(x|0, slab_var) 1{x>=0} + (1-z) delta(x)]
///     * N(x | cavity_mean, cavity_var) * Bern(z | sigma(cavity_logit)),
/// evaluated in the log domain so branch masses never underflow.
template <typename Scalar>
SpikeSlabTilted<Scalar> spike_slab_tilted_moments(Scalar cavity_mean, Scalar cavity_var,
                                                  Scalar slab_var, Scalar cavity_logit) {
  if (!(cavity_var > Scalar(0)) || !(slab_var > Scalar(0)))
    throw InvalidArgument("spike_slab_tilted_moments requires positive variances");
  constexpr double log_2pi = 1.8378770664093454836;
  const Scalar vsum = cavity_var + slab_var;
  // Product of the slab and the cavity: N(mc, vc) up to N(0 | cavity_mean, vsum).
  const Scalar vc = cavity_var * slab_var / vsum;
  const Scalar mc = vc * (cavity_mean / cavity_var);
  const auto tm = trunc_gauss_moments(mc, vc);
  const Scalar log_slab = std::log(Scalar(2)) + log_logistic(cavity_logit) -
                          Scalar(0.5) * (Scalar(log_2pi) + std::log(vsum)) -
                          cavity_mean * cavity_mean / (Scalar(2) * vsum) + tm.log_mass;
  const Scalar log_spike = log_logistic(-cavity_logit) -
                           Scalar(0.5) * (Scalar(log_2pi) + std::log(cavity_var)) -
                           cavity_mean * cavity_mean / (Scalar(2) * cavity_var);
  const Scalar w = logistic(log_slab - log_spike);
  const Scalar mean = w * tm.mean;
  const Scalar variance = w * tm.variance + w * (Scalar(1) - w) * tm.mean * tm.mean;
  return {mean, variance, w};
}

/// Prior-site sweep. Each (pixel, endmember) is independent: the Gaussian
/// cavity is the likelihood site itself, the Bernoulli cavity logit is the
/// sum of the four Ising slots. Sites with an invalid cavity keep their
/// previous parameters and are counted. Returns the skip count.
template <typename Scalar>
long update_prior_site(EpFactorState<Scalar>& state, AbundancePosterior<Scalar>& q,
                       Scalar slab_var, Scalar damping, int threads = 1) {
  const Index R = state.lik_prec.rows();
  const Index N = state.lik_prec.cols();
  const Scalar keep = Scalar(1) - damping;
  std::atomic<long> skipped{0};
  parallel_for(N, threads, [&](Index n) {
    for (Index r = 0; r < R; ++r) {
      const Scalar cav_prec = state.lik_prec(r, n);
      if (!(cav_prec > Scalar(0))) {
        skipped.fetch_add(1, std::memory_order_relaxed);
        continue;
      }
      const Scalar cav_var = Scalar(1) / cav_prec;
      const Scalar cav_mean = state.lik_info(r, n) * cav_var;
      Scalar cav_logit = 0;
      for (const auto& m : state.ising_logit) cav_logit += m(r, n);
      const auto t = spike_slab_tilted_moments(cav_mean, cav_var, slab_var, cav_logit);
      const Scalar var = std::max(t.variance, Scalar(kVarianceFloor));
      const Scalar new_prec = Scalar(1) / var - cav_prec;
      const Scalar new_info = t.mean / var - state.lik_info(r, n);
      const Scalar new_logit = clamped_logit(t.slab_probability) - cav_logit;
      state.prior_prec(r, n) = damping * new_prec + keep * state.prior_prec(r, n);
      state.prior_info(r, n) = damping * new_info + keep * state.prior_info(r, n);
      state.prior_logit(r, n) = damping * new_logit + keep * state.prior_logit(r, n);
    }
  });
  recombine(state, q);
  return skipped.load();
}

/// Exact marginal means of the two support variables joined by one Ising
/// connection, given the cavity logits of both endpoints: a 4-state
/// enumeration of exp{2 beta 1[z==z']} Bern(z|sigma(a)) Bern(z'|sigma(b)).
template <typename Scalar>
std::pair<Scalar, Scalar> ising_edge_marginals(Scalar cavity_a, Scalar cavity_b,
                                               Scalar beta) {
  const Scalar sa = logistic(cavity_a);
  const Scalar na = logistic(-cavity_a);
  const Scalar sb = logistic(cavity_b);
  const Scalar nb = logistic(-cavity_b);
  const Scalar boost = std::exp(Scalar(2) * beta);
  const Scalar norm = boost * (sa * sb + na * nb) + sa * nb + na * sb;
  const Scalar mean_a = (boost * sa * sb + sa * nb) / norm;
  const Scalar mean_b = (boost * sa * sb + na * sb) / norm;
  return {mean_a, mean_b};
}

/// Ising-site sweep: the four color classes in turn, every edge of one color
/// independently. beta == 0 makes the prior factor constant, so the sweep is
/// an exact no-op. Damping is additive on the logits.
template <typename Scalar>
void update_ising_sites(EpFactorState<Scalar>& state, AbundancePosterior<Scalar>& q,
                        const PixelGraph& graph, Scalar beta, Scalar damping,
                        int threads = 1) {
  if (beta == Scalar(0)) {
    recombine(state, q);
    return;
  }
  const Index R = state.prior_logit.rows();
  const Scalar keep = Scalar(1) - damping;
  // Running total of all Bernoulli sites, maintained incrementally; the
  // cavity for slot k is then total minus that slot. Edges of one color
  // touch disjoint pixels, so the parallel updates stay race free.
  MatrixX<Scalar> total = state.prior_logit;
  for (const auto& m : state.ising_logit) total += m;
  for (int k = 0; k < 4; ++k) {
    auto& slot = state.ising_logit[k];
    const auto& edges = graph.colors[k];
    parallel_for(static_cast<Index>(edges.size()), threads, [&](Index e) {
      const auto [a, b] = edges[static_cast<std::size_t>(e)];
      for (Index r = 0; r < R; ++r) {
        const Scalar cav_a = total(r, a) - slot(r, a);
        const Scalar cav_b = total(r, b) - slot(r, b);
        const auto [ma, mb] = ising_edge_marginals(cav_a, cav_b, beta);
        const Scalar new_a = damping * (clamped_logit(ma) - cav_a) + keep * slot(r, a);
        const Scalar new_b = damping * (clamped_logit(mb) - cav_b) + keep * slot(r, b);
        total(r, a) += new_a - slot(r, a);
        total(r, b) += new_b - slot(r, b);
        slot(r, a) = new_a;
        slot(r, b) = new_b;
      }
    });
  }
  recombine(state, q);
}

/// Full EP loop: likelihood, prior and Ising sweeps with damping until the
/// largest change of the means and logits drops below the tolerance. The
/// serial path (threads == 1) is bit-deterministic for fixed inputs; the
/// sum-to-one augmentation is applied internally when asc_delta > 0.
template <typename Scalar>
std::pair<AbundancePosterior<Scalar>, EpReport> run_ep(const HyperImage<Scalar>& image,
                                                       const EndmemberMatrix<Scalar>& endmembers,
                                                       const NoiseModel<Scalar>& noise,
                                                       const Hyperparams& hyper,
                                                       int threads = 1) {
  hyper.validate();
  auto [img, s, sigma] = augment_asc(image, endmembers, noise, Scalar(hyper.asc_delta));
  const auto terms = make_likelihood_terms(img, s, sigma);
  const PixelGraph graph = build_grid_graph(img.width, img.height);
  const Index R = s.cols();
  const Index N = img.pixels();
  auto [state, q] = init_state<Scalar>(R, N);

  const Scalar eta = Scalar(hyper.damping);
  const Scalar slab = Scalar(hyper.slab_variance);
  const Scalar beta = Scalar(hyper.ising_beta);
  EpReport report;
  MatrixX<Scalar> prev_mean(R, N), prev_logit(R, N);
  for (int it = 0; it < hyper.max_ep_iters; ++it) {
    prev_mean = q.mean;
    prev_logit = q.presence_logit;
    report.skipped_updates += update_likelihood_site(state, q, terms, eta, threads);
    report.skipped_updates += update_prior_site(state, q, slab, eta, threads);
    update_ising_sites(state, q, graph, beta, eta, threads);
    ++report.iterations;
    const double dm = (q.mean - prev_mean).cwiseAbs().maxCoeff();
    const double dp = (q.presence_logit - prev_logit).cwiseAbs().maxCoeff();
    report.mean_deltas.push_back(dm);
    report.logit_deltas.push_back(dp);
    if (std::max(dm, dp) <= hyper.ep_tolerance) {
      report.converged = true;
      break;
    }
  }
  return {std::move(q), std::move(report)};
}

}  // namespace epunmix
