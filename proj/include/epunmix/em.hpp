#pragma once

#include <cmath>
#include <tuple>
#include <utility>
#include <vector>

#include "epunmix/ep.hpp"
#include "epunmix/types.hpp"

namespace epunmix {

/// Inner ADMM stopping tolerance of the M-step (Frobenius, scaled by the
/// root of the problem size).
inline constexpr double kMStepTolerance = 1e-8;

/// Everything the M-step needs from the E-step, independent of S.
template <typename Scalar>
struct MStepProblem {
  MatrixX<Scalar> data_cross;      // Y M^t, L x R
  MatrixX<Scalar> abundance_gram;  // M M^t + diag(sum_n v_n), R x R
  NoiseModel<Scalar> noise;
  Scalar tv_weight = 0;            // lambda
  MatrixX<Scalar> centering;       // B = I - (1/R) 1 1^t
  Scalar data_quad = 0;            // tr(Y^t Sigma^{-1} Y)
  Index num_pixels = 0;
  Index num_bands = 0;
};

template <typename Scalar>
MStepProblem<Scalar> make_m_step_problem(const HyperImage<Scalar>& image,
                                         const AbundancePosterior<Scalar>& posterior,
                                         const NoiseModel<Scalar>& noise, Scalar tv_weight) {
  image.validate();
  posterior.validate();
  if (posterior.mean.cols() != image.pixels())
    throw DimensionMismatch("posterior and cube disagree on pixel count");
  if (!(tv_weight >= Scalar(0))) throw InvalidArgument("tv weight must be nonnegative");
  const Index R = posterior.mean.rows();
  MStepProblem<Scalar> p;
  p.noise = noise;
  p.tv_weight = tv_weight;
  p.num_pixels = image.pixels();
  p.num_bands = image.bands();
  p.data_cross = image.data * posterior.mean.transpose();
  p.abundance_gram = posterior.mean * posterior.mean.transpose();
  p.abundance_gram.diagonal() += posterior.variance.rowwise().sum();
  p.abundance_gram = Scalar(0.5) * (p.abundance_gram + p.abundance_gram.transpose()).eval();
  p.centering = MatrixX<Scalar>::Identity(R, R) -
                MatrixX<Scalar>::Constant(R, R, Scalar(1) / Scalar(R));
  p.data_quad = (image.data.array() * noise.solve(image.data).array()).sum();
  return p;
}

/// Expected log-likelihood of the data under the E-step posterior, as a
/// function of the endmember matrix; includes the constant terms.
template <typename Scalar>
Scalar expected_loglik(const MatrixX<Scalar>& endmembers, const MStepProblem<Scalar>& p) {
  if (endmembers.rows() != p.num_bands || endmembers.cols() != p.abundance_gram.rows())
    throw DimensionMismatch("endmember matrix does not fit the M-step problem");
  constexpr double log_2pi = 1.8378770664093454836;
  const MatrixX<Scalar> ws = p.noise.solve(endmembers);
  const Scalar quad = ((endmembers.transpose() * ws).array() * p.abundance_gram.array()).sum();
  const Scalar cross = (endmembers.array() * p.noise.solve(p.data_cross).array()).sum();
  const Scalar nl = Scalar(p.num_pixels) * Scalar(p.num_bands);
  return Scalar(-0.5) * (p.data_quad - Scalar(2) * cross + quad) -
         Scalar(0.5) * nl * Scalar(log_2pi) -
         Scalar(0.5) * Scalar(p.num_pixels) * p.noise.log_det(p.num_bands);
}

/// Minimum-volume penalty: squared Frobenius norm of the column-centered
/// endmember matrix, equal to the half sum of squared pairwise differences.
template <typename Scalar>
Scalar tv_volume(const MatrixX<Scalar>& endmembers) {
  if (endmembers.cols() < 1) throw InvalidArgument("tv_volume needs at least one column");
  const Index R = endmembers.cols();
  const VectorX<Scalar> mean = endmembers.rowwise().mean();
  return (endmembers - mean * VectorX<Scalar>::Ones(R).transpose()).squaredNorm();
}

/// Solves the nonnegativity-constrained M-step by ADMM splitting S = A.
///
/// The S-update solves Sigma^{-1} S C + S (lambda B + rho I) = RHS, one
/// decoupled R x R system per band for diagonal noise; a full covariance is
/// eigendecomposed once and the systems decouple per eigen-row. The returned
/// iterate is the feasible A (elementwise nonnegative).
template <typename Scalar>
MatrixX<Scalar> m_step_admm(const MStepProblem<Scalar>& p, Scalar rho, int iters,
                            Scalar tol = Scalar(kMStepTolerance)) {
  if (!(rho > Scalar(0))) throw InvalidArgument("admm rho must be positive");
  if (iters < 1) throw InvalidArgument("admm needs at least one iteration");
  const Index L = p.num_bands;
  const Index R = p.abundance_gram.rows();
  const MatrixX<Scalar> reg = p.tv_weight * p.centering +
                              rho * MatrixX<Scalar>::Identity(R, R);

  const bool spectral = p.noise.kind() == NoiseKind::full;
  MatrixX<Scalar> basis;        // eigenvectors of Sigma (full noise only)
  VectorX<Scalar> scale(L);     // per-row noise scale
  MatrixX<Scalar> rhs_fixed;    // noise-whitened data cross term, row space
  if (spectral) {
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(p.noise.covariance());
    if (es.info() != Eigen::Success) throw InvalidArgument("covariance eigendecomposition failed");
    basis = es.eigenvectors();
    scale = es.eigenvalues();
    rhs_fixed = scale.cwiseInverse().asDiagonal() * (basis.transpose() * p.data_cross);
  } else {
    scale = p.noise.variance_diagonal(L);
    rhs_fixed = scale.cwiseInverse().asDiagonal() * p.data_cross;
  }

  std::vector<Eigen::LLT<MatrixX<Scalar>>> factors;
  factors.reserve(static_cast<std::size_t>(L));
  for (Index l = 0; l < L; ++l) {
    MatrixX<Scalar> k = p.abundance_gram / scale(l) + reg;
    factors.emplace_back(k);
    if (factors.back().info() != Eigen::Success)
      throw InvalidArgument("M-step system is not positive definite");
  }

  const Scalar stop = tol * std::sqrt(Scalar(L) * Scalar(R));
  MatrixX<Scalar> a = MatrixX<Scalar>::Zero(L, R);
  MatrixX<Scalar> dual = MatrixX<Scalar>::Zero(L, R);
  MatrixX<Scalar> s(L, R);
  for (int it = 0; it < iters; ++it) {
    MatrixX<Scalar> rhs = rhs_fixed;
    if (spectral)
      rhs += rho * (basis.transpose() * (a - dual));
    else
      rhs += rho * (a - dual);
    for (Index l = 0; l < L; ++l)
      s.row(l) = factors[static_cast<std::size_t>(l)].solve(rhs.row(l).transpose()).transpose();
    if (spectral) s = (basis * s).eval();
    const MatrixX<Scalar> a_prev = a;
    a = (s + dual).cwiseMax(Scalar(0));
    dual += s - a;
    const Scalar primal = (s - a).norm();
    const Scalar dual_res = rho * (a - a_prev).norm();
    if (primal <= stop && dual_res <= stop) break;
  }
  return a;
}

struct EmIteration {
  double objective_before = 0;  // expected loglik - (lambda/2) tv at the old S
  double objective_after = 0;   // same objective at the ADMM output
  double endmember_rel_change = 0;
  int ep_iterations = 0;
};

struct EmReport {
  int iterations = 0;
  bool converged = false;
  int estep_retries = 0;  // E-steps redone at reduced damping
  std::vector<EmIteration> trace;
  EpReport final_ep;
};

/// Alternates EP abundance estimation with the ADMM M-step until the
/// relative endmember change falls below the tolerance. The returned
/// posterior is the EP run under the final endmember matrix.
///
/// EP can leave a converged state for a worse self-consistent one when the
/// spatial coupling flips the support of a whole region; an M-step chasing
/// such a posterior derails the refinement permanently. Each E-step is
/// therefore guarded: if its expected log-likelihood collapses against the
/// best value seen (beyond the normal chi-square flicker, threshold scaled
/// by the data size), the E-step is re-run at halved damping and the best
/// posterior kept.
template <typename Scalar>
std::tuple<EndmemberMatrix<Scalar>, AbundancePosterior<Scalar>, EmReport> run_em(
    const HyperImage<Scalar>& image, const EndmemberMatrix<Scalar>& init,
    const NoiseModel<Scalar>& noise, const Hyperparams& hyper, int threads = 1) {
  hyper.validate();
  validate_endmember_matrix(init);
  EmReport report;
  EndmemberMatrix<Scalar> s = init;
  const Scalar lambda = Scalar(hyper.tv_lambda);
  const double collapse_margin =
      20.0 * static_cast<double>(image.pixels()) * static_cast<double>(image.bands());

  auto penalized_loglik = [&](const EndmemberMatrix<Scalar>& lib,
                              const MStepProblem<Scalar>& problem) {
    return static_cast<double>(expected_loglik(lib, problem)) -
           0.5 * hyper.tv_lambda * static_cast<double>(tv_volume(lib));
  };

  auto [q, ep_report] = run_ep(image, s, noise, hyper, threads);
  report.final_ep = ep_report;
  if (hyper.max_em_iters == 0) return {std::move(s), std::move(q), std::move(report)};

  auto problem = make_m_step_problem(image, q, noise, lambda);
  double objective = penalized_loglik(s, problem);
  double objective_ref = objective;

  for (int it = 0; it < hyper.max_em_iters; ++it) {
    EmIteration step;
    step.objective_before = objective;
    EndmemberMatrix<Scalar> s_new =
        m_step_admm(problem, Scalar(hyper.admm_rho), hyper.admm_iters);
    step.objective_after = penalized_loglik(s_new, problem);
    const Scalar base = std::max(s.norm(), std::numeric_limits<Scalar>::min());
    step.endmember_rel_change = (s_new - s).norm() / base;
    s = std::move(s_new);

    std::tie(q, ep_report) = run_ep(image, s, noise, hyper, threads);
    problem = make_m_step_problem(image, q, noise, lambda);
    objective = penalized_loglik(s, problem);
    Hyperparams damped = hyper;
    for (int retry = 0; retry < 2 && objective < objective_ref - collapse_margin; ++retry) {
      damped.damping *= 0.5;
      ++report.estep_retries;
      auto [q_retry, rep_retry] = run_ep(image, s, noise, damped, threads);
      auto problem_retry = make_m_step_problem(image, q_retry, noise, lambda);
      const double objective_retry = penalized_loglik(s, problem_retry);
      if (objective_retry > objective) {
        q = std::move(q_retry);
        ep_report = rep_retry;
        problem = std::move(problem_retry);
        objective = objective_retry;
      }
    }
    objective_ref = std::max(objective_ref, objective);

    step.ep_iterations = ep_report.iterations;
    report.final_ep = ep_report;
    report.trace.push_back(step);
    ++report.iterations;
    if (step.endmember_rel_change <= hyper.em_tolerance) {
      report.converged = true;
      break;
    }
  }
  return {std::move(s), std::move(q), std::move(report)};
}

}  // namespace epunmix
