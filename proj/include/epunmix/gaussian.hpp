#pragma once

#include <cmath>
#include <limits>

#include "epunmix/core.hpp"

namespace epunmix {

/// Probabilities are clamped into [kProbFloor, 1 - kProbFloor] before taking
/// logits so that Bernoulli site updates stay finite.
inline constexpr double kProbFloor = 1e-12;

template <typename Scalar>
struct Gaussian1D {
  Scalar mean{0};
  Scalar variance{1};

  /// Division results may carry a nonpositive variance; they are flagged
  /// here rather than rejected.
  bool valid() const {
    return std::isfinite(mean) && std::isfinite(variance) && variance > Scalar(0);
  }
};

template <typename Scalar>
Scalar std_normal_pdf(Scalar t) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779;
  return Scalar(inv_sqrt_2pi) * std::exp(Scalar(-0.5) * t * t);
}

/// Phi(t) via the complementary error function.
template <typename Scalar>
Scalar std_normal_cdf(Scalar t) {
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  return Scalar(0.5) * std::erfc(-t * Scalar(inv_sqrt2));
}

/// log Phi(t), accurate far into the lower tail where Phi underflows.
template <typename Scalar>
Scalar log_std_normal_cdf(Scalar t) {
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  constexpr double log_sqrt_2pi = 0.9189385332046727418;
  if (t > Scalar(-1)) {
    // erfc is exact enough here and log() has no cancellation issue.
    return std::log1p(Scalar(-0.5) * std::erfc(t * Scalar(inv_sqrt2)));
  }
  if (t > Scalar(-36)) {
    return std::log(Scalar(0.5) * std::erfc(-t * Scalar(inv_sqrt2)));
  }
  // Asymptotic expansion of the Mills ratio for the extreme tail.
  const Scalar z = t * t;
  const Scalar series =
      Scalar(1) - Scalar(1) / z + Scalar(3) / (z * z) - Scalar(15) / (z * z * z);
  return Scalar(-0.5) * z - std::log(-t) - Scalar(log_sqrt_2pi) + std::log(series);
}

template <typename Scalar>
Scalar logistic(Scalar p) {
  if (p >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-p));
  const Scalar e = std::exp(p);
  return e / (Scalar(1) + e);
}

/// log sigma(p); never underflows to -inf for finite p.
template <typename Scalar>
Scalar log_logistic(Scalar p) {
  if (p >= Scalar(0)) return -std::log1p(std::exp(-p));
  return p - std::log1p(std::exp(p));
}

template <typename Scalar>
Scalar logit(Scalar q) {
  if (q == Scalar(0) || q == Scalar(1))
    throw SaturatedProbability("logit of an exact 0 or 1");
  if (!(q > Scalar(0) && q < Scalar(1)))
    throw InvalidArgument("logit requires a probability in (0, 1)");
  return std::log(q) - std::log1p(-q);
}

/// logit after clamping into [kProbFloor, 1 - kProbFloor].
template <typename Scalar>
Scalar clamped_logit(Scalar q) {
  const Scalar lo = Scalar(kProbFloor);
  const Scalar hi = Scalar(1) - Scalar(kProbFloor);
  return logit(std::min(hi, std::max(lo, q)));
}

/// Product of two Gaussians: precisions and precision-means add.
template <typename Scalar>
Gaussian1D<Scalar> gaussian_multiply(const Gaussian1D<Scalar>& a,
                                     const Gaussian1D<Scalar>& b) {
  if (!a.valid() || !b.valid())
    throw InvalidArgument("gaussian_multiply requires valid factors");
  const Scalar prec = Scalar(1) / a.variance + Scalar(1) / b.variance;
  const Scalar info = a.mean / a.variance + b.mean / b.variance;
  const Scalar v = Scalar(1) / prec;
  return {info * v, v};
}

/// Cavity construction: precisions subtract. The result may carry a negative
/// variance and is returned flagged invalid; equal precisions are an error.
template <typename Scalar>
Gaussian1D<Scalar> gaussian_divide(const Gaussian1D<Scalar>& q,
                                   const Gaussian1D<Scalar>& site) {
  if (!q.valid()) throw InvalidArgument("gaussian_divide requires a valid numerator");
  if (site.variance == Scalar(0)) throw InvalidArgument("site variance is zero");
  const Scalar prec = Scalar(1) / q.variance - Scalar(1) / site.variance;
  if (prec == Scalar(0)) throw DegenerateCavity("division by an equal-precision site");
  const Scalar info = q.mean / q.variance - site.mean / site.variance;
  const Scalar v = Scalar(1) / prec;
  return {info * v, v};
}

/// phi(a) / Phi(a), stable for arbitrarily negative a.
template <typename Scalar>
Scalar inverse_mills_ratio(Scalar a) {
  constexpr double log_sqrt_2pi = 0.9189385332046727418;
  if (a > Scalar(-8)) return std_normal_pdf(a) / std_normal_cdf(a);
  return std::exp(Scalar(-0.5) * a * a - Scalar(log_sqrt_2pi) - log_std_normal_cdf(a));
}

template <typename Scalar>
struct TruncatedMoments {
  Scalar log_mass;  ///< log Phi(mu / sqrt(tau))
  Scalar mean;
  Scalar variance;
};

/// Moments of N(x | mu, tau) restricted to x >= 0.
///
/// mean = mu + sqrt(tau) * phi(a)/Phi(a) with a = mu/sqrt(tau), and
/// variance = tau * (1 - r^2 - a r) with r the inverse Mills ratio. Far in
/// the lower tail (a <= -30) both expressions cancel catastrophically and
/// the asymptotic series in 1/a is used instead.
template <typename Scalar>
TruncatedMoments<Scalar> trunc_gauss_moments(Scalar mu, Scalar tau) {
  if (!(tau > Scalar(0))) throw InvalidArgument("trunc_gauss_moments requires tau > 0");
  const Scalar sd = std::sqrt(tau);
  const Scalar a = mu / sd;
  const Scalar log_mass = log_std_normal_cdf(a);
  Scalar mean, variance;
  if (a > Scalar(-30)) {
    const Scalar r = inverse_mills_ratio(a);
    mean = mu + sd * r;
    variance = tau * (Scalar(1) - r * (r + a));
  } else {
    const Scalar c = -a;
    const Scalar c2 = c * c;
    mean = sd * (Scalar(1) / c) * (Scalar(1) - Scalar(2) / c2 + Scalar(10) / (c2 * c2));
    variance = tau * (Scalar(1) / c2) * (Scalar(1) - Scalar(6) / c2 + Scalar(50) / (c2 * c2));
  }
  mean = std::max(mean, Scalar(0));
  const Scalar tiny = tau * std::numeric_limits<Scalar>::epsilon() *
                      std::numeric_limits<Scalar>::epsilon();
  variance = std::min(tau, std::max(variance, tiny));
  return {log_mass, mean, variance};
}

}  // namespace epunmix
