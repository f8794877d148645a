#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "epunmix/core.hpp"

namespace epunmix {

/// Root mean square abundance error: sqrt(mean over (pixel, endmember)
/// of the squared difference).
template <typename Scalar>
Scalar rmse(const MatrixX<Scalar>& truth, const MatrixX<Scalar>& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw DimensionMismatch("rmse requires equal shapes");
  return std::sqrt((truth - estimate).squaredNorm() / Scalar(truth.size()));
}

/// Signal-to-reconstruction error in decibels. An exact reconstruction is
/// reported as +infinity.
template <typename Scalar>
Scalar sre_db(const MatrixX<Scalar>& truth, const MatrixX<Scalar>& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw DimensionMismatch("sre_db requires equal shapes");
  const Scalar err = (truth - estimate).squaredNorm();
  if (err == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  return Scalar(10) * std::log10(truth.squaredNorm() / err);
}

/// Spectral angle distance in radians, scale invariant in each argument.
template <typename Scalar>
Scalar sad(const VectorX<Scalar>& truth, const VectorX<Scalar>& estimate) {
  const Scalar nt = truth.norm();
  const Scalar ne = estimate.norm();
  if (nt == Scalar(0) || ne == Scalar(0)) throw InvalidArgument("sad of a zero vector");
  const Scalar c = truth.dot(estimate) / (nt * ne);
  return std::acos(std::min(Scalar(1), std::max(Scalar(-1), c)));
}

template <typename Scalar>
MatrixX<Scalar> sad_matrix(const MatrixX<Scalar>& truth, const MatrixX<Scalar>& estimate) {
  if (truth.cols() != estimate.cols() || truth.rows() != estimate.rows())
    throw DimensionMismatch("sad_matrix requires equal shapes");
  const Index r = truth.cols();
  MatrixX<Scalar> m(r, r);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j)
      m(i, j) = sad<Scalar>(truth.col(i), estimate.col(j));
  return m;
}

/// Minimum-cost assignment on a square cost matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns col[row].
template <typename Scalar>
std::vector<Index> minimum_cost_assignment(const MatrixX<Scalar>& cost) {
  if (cost.rows() != cost.cols() || cost.rows() < 1)
    throw InvalidArgument("assignment needs a square nonempty cost matrix");
  const int n = static_cast<int>(cost.rows());
  const Scalar inf = std::numeric_limits<Scalar>::max();
  std::vector<Scalar> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<Scalar> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      int j1 = 0;
      Scalar delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Scalar cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> result(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j)
    if (match[j] != 0) result[static_cast<std::size_t>(match[j] - 1)] = j - 1;
  return result;
}

/// Permutation minimizing the total spectral angle between true and
/// estimated endmember columns: perm[i] is the estimated column assigned to
/// true column i.
template <typename Scalar>
std::vector<Index> match_endmembers(const MatrixX<Scalar>& truth,
                                    const MatrixX<Scalar>& estimate) {
  if (truth.cols() != estimate.cols())
    throw DimensionMismatch("match_endmembers requires equal endmember counts");
  return minimum_cost_assignment(sad_matrix(truth, estimate));
}

struct EvalReport {
  double rmse = 0;
  double sre_db = 0;
  std::vector<double> per_endmember_sad;  // empty when no libraries given
  double mean_sad = 0;
  std::vector<Index> permutation;  // identity when no matching was applied
};

/// Full comparison of an estimate against ground truth. When both libraries
/// are supplied the estimate columns (and abundance rows) are permuted by
/// the optimal matching before any metric is evaluated.
template <typename Scalar>
EvalReport evaluate(const MatrixX<Scalar>& truth_abund, MatrixX<Scalar> est_abund,
                    const MatrixX<Scalar>* truth_lib = nullptr,
                    const MatrixX<Scalar>* est_lib = nullptr) {
  EvalReport report;
  const Index r = truth_abund.rows();
  report.permutation.resize(static_cast<std::size_t>(r));
  for (Index i = 0; i < r; ++i) report.permutation[static_cast<std::size_t>(i)] = i;

  MatrixX<Scalar> est_lib_matched;
  if (truth_lib != nullptr && est_lib != nullptr) {
    report.permutation = match_endmembers(*truth_lib, *est_lib);
    est_lib_matched.resize(truth_lib->rows(), r);
    MatrixX<Scalar> abund(est_abund.rows(), est_abund.cols());
    for (Index i = 0; i < r; ++i) {
      est_lib_matched.col(i) = est_lib->col(report.permutation[static_cast<std::size_t>(i)]);
      abund.row(i) = est_abund.row(report.permutation[static_cast<std::size_t>(i)]);
    }
    est_abund = std::move(abund);
    report.per_endmember_sad.resize(static_cast<std::size_t>(r));
    for (Index i = 0; i < r; ++i)
      report.per_endmember_sad[static_cast<std::size_t>(i)] =
          sad<Scalar>(truth_lib->col(i), est_lib_matched.col(i));
    double total = 0;
    for (double x : report.per_endmember_sad) total += x;
    report.mean_sad = total / static_cast<double>(r);
  }
  report.rmse = rmse(truth_abund, est_abund);
  report.sre_db = sre_db(truth_abund, est_abund);
  return report;
}

}  // namespace epunmix
