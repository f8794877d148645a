#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>

#include "epunmix/core.hpp"
#include "epunmix/gaussian.hpp"

namespace epunmix {

/// Observed cube: `bands x pixels` reflectance matrix with a W x H spatial
/// layout. Pixel n sits at (row, col) with n = row * width + col.
template <typename Scalar>
struct HyperImage {
  Index width = 0;
  Index height = 0;
  MatrixX<Scalar> data;  // one column per pixel

  Index pixels() const { return width * height; }
  Index bands() const { return data.rows(); }

  void validate() const {
    if (width < 1 || height < 1) throw InvalidArgument("image dimensions must be positive");
    if (data.rows() < 1) throw InvalidArgument("image needs at least one band");
    if (data.cols() != pixels())
      throw DimensionMismatch("pixel count does not match width x height");
    if (!data.allFinite()) throw InvalidArgument("image contains non-finite values");
  }
};

/// Endmember library: `bands x R`, one spectrum per column.
template <typename Scalar>
using EndmemberMatrix = MatrixX<Scalar>;

template <typename Scalar>
void validate_endmember_matrix(const EndmemberMatrix<Scalar>& s) {
  if (s.rows() < 1 || s.cols() < 1) throw InvalidArgument("endmember matrix is empty");
  if (!s.allFinite()) throw InvalidArgument("endmember matrix contains non-finite values");
  for (Index r = 0; r < s.cols(); ++r)
    if (s.col(r).norm() == Scalar(0))
      throw InvalidArgument("endmember column " + std::to_string(r) + " is zero");
}

enum class NoiseKind { isotropic, diagonal, full };

/// Known observation-noise covariance in one of three shapes. The full shape
/// is validated by a Cholesky attempt at construction.
template <typename Scalar>
class NoiseModel {
 public:
  static NoiseModel isotropic(Scalar variance) {
    if (!(variance > Scalar(0))) throw InvalidArgument("noise variance must be positive");
    NoiseModel m;
    m.kind_ = NoiseKind::isotropic;
    m.variances_.resize(1);
    m.variances_(0) = variance;
    return m;
  }

  static NoiseModel diagonal(VectorX<Scalar> variances) {
    if (variances.size() < 1 || !(variances.minCoeff() > Scalar(0)))
      throw InvalidArgument("band variances must be positive");
    NoiseModel m;
    m.kind_ = NoiseKind::diagonal;
    m.variances_ = std::move(variances);
    return m;
  }

  static NoiseModel full(MatrixX<Scalar> covariance) {
    if (covariance.rows() != covariance.cols() || covariance.rows() < 1)
      throw InvalidArgument("covariance must be square");
    const Scalar scale = covariance.cwiseAbs().maxCoeff();
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() >
        Scalar(1e-10) * std::max(scale, Scalar(1)))
      throw InvalidArgument("covariance must be symmetric");
    NoiseModel m;
    m.kind_ = NoiseKind::full;
    m.cov_ = Scalar(0.5) * (covariance + covariance.transpose());
    m.llt_.compute(m.cov_);
    if (m.llt_.info() != Eigen::Success)
      throw InvalidArgument("covariance is not positive definite");
    return m;
  }

  NoiseKind kind() const { return kind_; }

  Index bands() const {
    switch (kind_) {
      case NoiseKind::isotropic: return -1;  // any
      case NoiseKind::diagonal: return variances_.size();
      default: return cov_.rows();
    }
  }

  Scalar isotropic_variance() const { return variances_(0); }
  const VectorX<Scalar>& band_variances() const { return variances_; }
  const MatrixX<Scalar>& covariance() const { return cov_; }

  void check_bands(Index n) const {
    if (bands() >= 0 && bands() != n)
      throw DimensionMismatch("noise model covers a different number of bands");
  }

  /// Sigma^{-1} * rhs.
  MatrixX<Scalar> solve(const MatrixX<Scalar>& rhs) const {
    check_bands(rhs.rows());
    switch (kind_) {
      case NoiseKind::isotropic: return rhs / variances_(0);
      case NoiseKind::diagonal: return variances_.cwiseInverse().asDiagonal() * rhs;
      default: return llt_.solve(rhs);
    }
  }

  Scalar log_det(Index n) const {
    check_bands(n);
    switch (kind_) {
      case NoiseKind::isotropic: return Scalar(n) * std::log(variances_(0));
      case NoiseKind::diagonal: return variances_.array().log().sum();
      default: {
        const auto& l = llt_.matrixLLT();
        Scalar acc = 0;
        for (Index i = 0; i < n; ++i) acc += std::log(l(i, i));
        return Scalar(2) * acc;
      }
    }
  }

  VectorX<Scalar> variance_diagonal(Index n) const {
    check_bands(n);
    switch (kind_) {
      case NoiseKind::isotropic: return VectorX<Scalar>::Constant(n, variances_(0));
      case NoiseKind::diagonal: return variances_;
      default: return cov_.diagonal();
    }
  }

  Scalar total_variance(Index n) const { return variance_diagonal(n).sum(); }

  /// A matrix T with T T^t = Sigma, used to draw correlated noise.
  MatrixX<Scalar> sample_transform(Index n) const {
    check_bands(n);
    if (kind_ == NoiseKind::full) return llt_.matrixL();
    return variance_diagonal(n).cwiseSqrt().asDiagonal();
  }

  /// Extends the model with one pseudo-band of the given variance (used by
  /// the sum-to-one augmentation).
  NoiseModel with_extra_band(Index n, Scalar variance) const {
    check_bands(n);
    if (!(variance > Scalar(0))) throw InvalidArgument("pseudo-band variance must be positive");
    if (kind_ == NoiseKind::full) {
      MatrixX<Scalar> c = MatrixX<Scalar>::Zero(n + 1, n + 1);
      c.topLeftCorner(n, n) = cov_;
      c(n, n) = variance;
      return full(std::move(c));
    }
    VectorX<Scalar> v(n + 1);
    v.head(n) = variance_diagonal(n);
    v(n) = variance;
    return diagonal(std::move(v));
  }

 private:
  NoiseKind kind_ = NoiseKind::isotropic;
  VectorX<Scalar> variances_ = VectorX<Scalar>::Ones(1);
  MatrixX<Scalar> cov_;
  Eigen::LLT<MatrixX<Scalar>> llt_;
};

/// All tuning knobs of the EP / EM stack.
struct Hyperparams {
  double slab_variance = 0.5;
  double ising_beta = 0.3;
  double damping = 0.8;
  int max_ep_iters = 50;
  double ep_tolerance = 1e-4;
  double asc_delta = 0.0;  // 0 disables the sum-to-one augmentation
  double tv_lambda = 0.0;
  double admm_rho = 1.0;
  int admm_iters = 500;
  int max_em_iters = 20;
  double em_tolerance = 1e-4;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(slab_variance > 0)) throw InvalidArgument("slab_variance must be > 0");
    if (!(ising_beta >= 0)) throw InvalidArgument("ising_beta must be >= 0");
    if (!(damping > 0 && damping <= 1)) throw InvalidArgument("damping must be in (0, 1]");
    if (max_ep_iters < 0) throw InvalidArgument("max_ep_iters must be >= 0");
    if (!(ep_tolerance > 0)) throw InvalidArgument("ep_tolerance must be > 0");
    if (!(asc_delta >= 0)) throw InvalidArgument("asc_delta must be >= 0");
    if (!(tv_lambda >= 0)) throw InvalidArgument("tv_lambda must be >= 0");
    if (!(admm_rho > 0)) throw InvalidArgument("admm_rho must be > 0");
    if (admm_iters < 1) throw InvalidArgument("admm_iters must be >= 1");
    if (max_em_iters < 0) throw InvalidArgument("max_em_iters must be >= 0");
    if (!(em_tolerance > 0)) throw InvalidArgument("em_tolerance must be > 0");
  }
};

/// Factorized posterior approximation: per (endmember, pixel) Gaussian means
/// and variances plus Bernoulli presence logits. All matrices are R x N.
template <typename Scalar>
struct AbundancePosterior {
  MatrixX<Scalar> mean;
  MatrixX<Scalar> variance;
  MatrixX<Scalar> presence_logit;

  MatrixX<Scalar> probability() const {
    return presence_logit.unaryExpr([](Scalar p) { return logistic(p); });
  }

  void validate() const {
    if (mean.rows() != variance.rows() || mean.cols() != variance.cols() ||
        mean.rows() != presence_logit.rows() || mean.cols() != presence_logit.cols())
      throw DimensionMismatch("posterior blocks disagree in shape");
    if (!(variance.minCoeff() > Scalar(0)))
      throw InvalidArgument("posterior variances must be positive");
    if (!mean.allFinite() || !presence_logit.allFinite())
      throw InvalidArgument("posterior contains non-finite values");
  }
};

/// Site parameters of the three approximate factors, stored in natural form:
/// Gaussian sites as (precision, precision * mean), Bernoulli sites as
/// logits. Site precisions may go negative between sweeps; the combined
/// precision lik + prior stays positive under the engine's skip policy.
/// ising_logit[k] holds the slot for the color-k edge at each pixel and is
/// pinned to zero where no such edge exists (grid border).
template <typename Scalar>
struct EpFactorState {
  MatrixX<Scalar> lik_prec, lik_info;
  MatrixX<Scalar> prior_prec, prior_info, prior_logit;
  std::array<MatrixX<Scalar>, 4> ising_logit;
};

/// 4-neighbor grid edges partitioned into four matchings so that every edge
/// of one color can be updated in parallel.
struct PixelGraph {
  struct Edge {
    Index a, b;  // pixel indices, a < b
  };

  Index width = 0;
  Index height = 0;
  std::array<std::vector<Edge>, 4> colors;

  Index edge_count() const {
    Index n = 0;
    for (const auto& c : colors) n += static_cast<Index>(c.size());
    return n;
  }
};

}  // namespace epunmix
