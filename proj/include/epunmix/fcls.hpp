#pragma once

#include <cmath>

#include "epunmix/graph.hpp"
#include "epunmix/types.hpp"

namespace epunmix {

/// Fully constrained least squares baseline: per pixel, nonnegative least
/// squares on the sum-to-one augmented system, solved by ADMM with
/// projection onto the nonnegative orthant. The augmented Gram matrix is
/// factored once and shared by all pixels.
template <typename Scalar>
MatrixX<Scalar> fcls(const HyperImage<Scalar>& image, const EndmemberMatrix<Scalar>& endmembers,
                     Scalar asc_delta, int threads = 1) {
  image.validate();
  validate_endmember_matrix(endmembers);
  if (endmembers.rows() != image.bands())
    throw DimensionMismatch("endmember library and cube disagree on band count");
  if (!(asc_delta > Scalar(0))) throw InvalidArgument("fcls requires asc_delta > 0");

  auto [img, s] = augment_asc(image, endmembers, asc_delta);
  const Index R = s.cols();
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(s);
  if (qr.rank() < R) throw IllPosedProblem("augmented endmember matrix is rank deficient");

  MatrixX<Scalar> gram = s.transpose() * s;
  const Scalar rho = gram.trace() / Scalar(R);
  gram.diagonal().array() += rho;
  const Eigen::LLT<MatrixX<Scalar>> llt(gram);
  const MatrixX<Scalar> proj = s.transpose() * img.data;

  constexpr int max_iters = 2000;
  const Scalar tol = Scalar(1e-10);
  MatrixX<Scalar> abundances(R, img.pixels());
  parallel_for(img.pixels(), threads, [&](Index n) {
    VectorX<Scalar> x(R);
    VectorX<Scalar> a = VectorX<Scalar>::Zero(R);
    VectorX<Scalar> u = VectorX<Scalar>::Zero(R);
    for (int it = 0; it < max_iters; ++it) {
      x = llt.solve(proj.col(n) + rho * (a - u));
      const VectorX<Scalar> a_prev = a;
      a = (x + u).cwiseMax(Scalar(0));
      u += x - a;
      const Scalar primal = (x - a).template lpNorm<Eigen::Infinity>();
      const Scalar dual = rho * (a - a_prev).template lpNorm<Eigen::Infinity>();
      if (primal <= tol && dual <= tol) break;
    }
    abundances.col(n) = a;
  });
  return abundances;
}

}  // namespace epunmix
