#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "epunmix/metrics.hpp"
#include "epunmix/types.hpp"

namespace epunmix {

template <typename Scalar>
struct SyntheticScene {
  MatrixX<Scalar> abundances;   // X, R x N, nonnegative
  MatrixX<Scalar> supports;     // Z, R x N, exactly 0 or 1, Z == 0 => X == 0
  EndmemberMatrix<Scalar> endmembers;
  HyperImage<Scalar> clean;     // S X
  HyperImage<Scalar> noisy;
  NoiseModel<Scalar> noise;
  double achieved_snr_db = std::numeric_limits<double>::infinity();
};

struct SceneConfig {
  Index width = 50;
  Index height = 50;
  Index endmembers = 5;
  Index bands = 100;
  Index regions = 12;      // seeded Voronoi cells
  Index sparsity = 3;      // max active endmembers per region
  bool sum_to_one = true;  // abundance simplex vs. scaled to sum <= 1
  std::uint64_t seed = 0;
};

namespace detail {

/// Smooth random spectrum in [0, 1]: cumulative sum of moving-average
/// filtered white noise, rescaled to the unit interval.
template <typename Scalar>
VectorX<Scalar> random_spectrum(Index bands, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Index window = std::max<Index>(3, bands / 20);
  std::vector<double> raw(static_cast<std::size_t>(bands + window));
  for (auto& v : raw) v = gauss(rng);
  VectorX<Scalar> spectrum(bands);
  double level = 0;
  for (Index l = 0; l < bands; ++l) {
    double acc = 0;
    for (Index k = 0; k < window; ++k) acc += raw[static_cast<std::size_t>(l + k)];
    level += acc / static_cast<double>(window);
    spectrum(l) = static_cast<Scalar>(level);
  }
  const Scalar lo = spectrum.minCoeff();
  const Scalar hi = spectrum.maxCoeff();
  if (!(hi > lo)) return VectorX<Scalar>::Zero(bands);  // degenerate, caller retries
  spectrum = ((spectrum.array() - lo) / (hi - lo)).matrix();
  return spectrum;
}

/// One-dimensional normalized Gaussian blur pass over the grid, along rows
/// or columns, applied to every endmember map. Kernel weights renormalize at
/// the border, so per-pixel column sums are preserved.
template <typename Scalar>
void blur_pass(MatrixX<Scalar>& maps, Index width, Index height, bool horizontal) {
  constexpr int radius = 2;
  std::array<Scalar, 2 * radius + 1> w;
  for (int k = -radius; k <= radius; ++k)
    w[static_cast<std::size_t>(k + radius)] = std::exp(Scalar(-0.5) * Scalar(k * k) / Scalar(1.44));
  MatrixX<Scalar> out(maps.rows(), maps.cols());
  for (Index row = 0; row < height; ++row) {
    for (Index col = 0; col < width; ++col) {
      const Index n = row * width + col;
      VectorX<Scalar> acc = VectorX<Scalar>::Zero(maps.rows());
      Scalar total = 0;
      for (int k = -radius; k <= radius; ++k) {
        const Index r2 = horizontal ? row : row + k;
        const Index c2 = horizontal ? col + k : col;
        if (r2 < 0 || r2 >= height || c2 < 0 || c2 >= width) continue;
        const Scalar wk = w[static_cast<std::size_t>(k + radius)];
        acc += wk * maps.col(r2 * width + c2);
        total += wk;
      }
      out.col(n) = acc / total;
    }
  }
  maps = std::move(out);
}

}  // namespace detail

/// Deterministic synthetic scene: seeded Voronoi regions each activate a
/// random subset of at most `sparsity` endmembers, per-pixel abundances are
/// symmetric-Dirichlet draws over the active set, and the abundance maps are
/// blurred so pixels near region boundaries are more heavily mixed. Spectra
/// are smooth random curves kept at mutual spectral angle >= 0.1 by
/// rejection.
template <typename Scalar>
SyntheticScene<Scalar> generate_scene(const SceneConfig& cfg) {
  if (cfg.endmembers < 2) throw InvalidArgument("scene needs at least two endmembers");
  if (cfg.width < 1 || cfg.height < 1 || cfg.bands < 1 || cfg.regions < 1)
    throw InvalidArgument("scene dimensions must be positive");
  if (cfg.sparsity < 1 || cfg.sparsity > cfg.endmembers)
    throw InvalidArgument("sparsity must be in [1, endmembers]");
  std::mt19937_64 rng(cfg.seed);
  const Index N = cfg.width * cfg.height;
  const Index R = cfg.endmembers;

  // Region sites and their active endmember subsets.
  std::uniform_int_distribution<Index> row_dist(0, cfg.height - 1);
  std::uniform_int_distribution<Index> col_dist(0, cfg.width - 1);
  std::vector<std::pair<Index, Index>> sites(static_cast<std::size_t>(cfg.regions));
  for (auto& s : sites) s = {row_dist(rng), col_dist(rng)};
  // Active subsets: a shuffled deal guarantees every endmember appears in
  // some region (the scene must be able to express the whole library), then
  // regions grow to their drawn size with further random picks.
  if (cfg.regions * cfg.sparsity < R)
    throw InvalidArgument("regions x sparsity cannot cover all endmembers");
  std::uniform_int_distribution<Index> size_dist(1, cfg.sparsity);
  std::uniform_int_distribution<Index> pick_dist(0, R - 1);
  std::vector<std::vector<Index>> active(static_cast<std::size_t>(cfg.regions));
  std::vector<Index> order(static_cast<std::size_t>(R));
  std::iota(order.begin(), order.end(), Index(0));
  std::shuffle(order.begin(), order.end(), rng);
  for (Index r = 0; r < R; ++r)
    active[static_cast<std::size_t>(r % cfg.regions)].push_back(order[static_cast<std::size_t>(r)]);
  for (auto& set : active) {
    const Index target = std::max<Index>(size_dist(rng), static_cast<Index>(set.size()));
    while (static_cast<Index>(set.size()) < target) {
      const Index candidate = pick_dist(rng);
      if (std::find(set.begin(), set.end(), candidate) == set.end())
        set.push_back(candidate);
    }
  }

  // Per-pixel Dirichlet draw over the owning region's active set.
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> scale_dist(0.3, 1.0);
  MatrixX<Scalar> abund = MatrixX<Scalar>::Zero(R, N);
  for (Index row = 0; row < cfg.height; ++row) {
    for (Index col = 0; col < cfg.width; ++col) {
      const Index n = row * cfg.width + col;
      Index best = 0;
      Index best_d = std::numeric_limits<Index>::max();
      for (Index g = 0; g < cfg.regions; ++g) {
        const Index dr = row - sites[static_cast<std::size_t>(g)].first;
        const Index dc = col - sites[static_cast<std::size_t>(g)].second;
        const Index d = dr * dr + dc * dc;
        if (d < best_d) {
          best_d = d;
          best = g;
        }
      }
      const auto& set = active[static_cast<std::size_t>(best)];
      double total = 0;
      std::vector<double> draw(set.size());
      for (auto& v : draw) {
        v = expo(rng);
        total += v;
      }
      const double scale = cfg.sum_to_one ? 1.0 : scale_dist(rng);
      for (std::size_t i = 0; i < set.size(); ++i)
        abund(set[i], n) = static_cast<Scalar>(scale * draw[i] / total);
    }
  }

  // Boundary mixing. Purity is part of the sparsity == 1 contract, so the
  // blur is skipped there.
  if (cfg.sparsity > 1) {
    detail::blur_pass(abund, cfg.width, cfg.height, true);
    detail::blur_pass(abund, cfg.width, cfg.height, false);
  }

  // Sparsify faint leaks; keep at least the dominant endmember per pixel.
  const Scalar threshold = Scalar(0.02);
  for (Index n = 0; n < N; ++n) {
    Index argmax = 0;
    abund.col(n).maxCoeff(&argmax);
    for (Index r = 0; r < R; ++r)
      if (r != argmax && abund(r, n) < threshold) abund(r, n) = Scalar(0);
    if (cfg.sum_to_one) abund.col(n) /= abund.col(n).sum();
  }

  SyntheticScene<Scalar> scene;
  scene.abundances = abund;
  scene.supports = (abund.array() > Scalar(0)).template cast<Scalar>().matrix();

  // Endmember spectra with a mutual-angle rejection loop.
  scene.endmembers.resize(cfg.bands, R);
  Index accepted = 0;
  for (int tries = 0; accepted < R; ++tries) {
    if (tries >= 1000)
      throw InfeasibleLibrary("could not draw sufficiently distinct spectra");
    VectorX<Scalar> candidate = detail::random_spectrum<Scalar>(cfg.bands, rng);
    if (candidate.norm() == Scalar(0)) continue;
    bool ok = true;
    for (Index r = 0; r < accepted && ok; ++r)
      ok = sad<Scalar>(scene.endmembers.col(r), candidate) >= Scalar(0.1);
    if (!ok) continue;
    scene.endmembers.col(accepted++) = candidate;
  }

  scene.clean.width = cfg.width;
  scene.clean.height = cfg.height;
  scene.clean.data = scene.endmembers * scene.abundances;
  scene.noisy = scene.clean;
  scene.noise = NoiseModel<Scalar>::isotropic(Scalar(1));
  return scene;
}

/// Adds seeded Gaussian noise reaching the requested SNR in expectation:
/// the total noise power is ||clean||_F^2 / 10^(snr/10) whatever the
/// covariance shape. Returns the noisy cube and the exact generating model.
template <typename Scalar>
std::pair<HyperImage<Scalar>, NoiseModel<Scalar>> add_noise(const HyperImage<Scalar>& clean,
                                                            double snr_db, NoiseKind shape,
                                                            std::uint64_t seed) {
  clean.validate();
  if (!std::isfinite(snr_db)) throw InvalidArgument("snr must be finite");
  const Index L = clean.bands();
  const Index N = clean.pixels();
  const double energy = clean.data.squaredNorm();
  if (energy == 0) throw InvalidArgument("clean cube has zero energy");
  const double base_var = energy / (static_cast<double>(N) * static_cast<double>(L) *
                                    std::pow(10.0, snr_db / 10.0));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  NoiseModel<Scalar> model = NoiseModel<Scalar>::isotropic(Scalar(base_var));
  if (shape == NoiseKind::diagonal || shape == NoiseKind::full) {
    std::uniform_real_distribution<double> spread(0.5, 1.5);
    VectorX<Scalar> vars(L);
    for (Index l = 0; l < L; ++l) vars(l) = static_cast<Scalar>(spread(rng));
    vars *= Scalar(base_var) * Scalar(L) / vars.sum();
    if (shape == NoiseKind::diagonal) {
      model = NoiseModel<Scalar>::diagonal(std::move(vars));
    } else {
      MatrixX<Scalar> mix(L, 2 * L);
      for (Index i = 0; i < L; ++i)
        for (Index k = 0; k < 2 * L; ++k) mix(i, k) = static_cast<Scalar>(gauss(rng));
      MatrixX<Scalar> corr = mix * mix.transpose();
      const VectorX<Scalar> d = corr.diagonal().cwiseSqrt();
      corr = (corr.array() / (d * d.transpose()).array()).matrix();
      const VectorX<Scalar> sd = vars.cwiseSqrt();
      MatrixX<Scalar> cov = sd.asDiagonal() * corr * sd.asDiagonal();
      cov *= Scalar(base_var) * Scalar(L) / cov.trace();
      model = NoiseModel<Scalar>::full(std::move(cov));
    }
  }

  const MatrixX<Scalar> transform = model.sample_transform(L);
  MatrixX<Scalar> white(L, N);
  for (Index n = 0; n < N; ++n)
    for (Index l = 0; l < L; ++l) white(l, n) = static_cast<Scalar>(gauss(rng));
  HyperImage<Scalar> noisy = clean;
  noisy.data += transform * white;
  return {std::move(noisy), std::move(model)};
}

/// 10 log10 of signal power over realized noise power.
template <typename Scalar>
double realized_snr_db(const HyperImage<Scalar>& clean, const HyperImage<Scalar>& noisy) {
  const double err = (noisy.data - clean.data).squaredNorm();
  if (err == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(clean.data.squaredNorm() / err);
}

/// Convenience wrapper filling the noisy half of a scene.
template <typename Scalar>
void corrupt_scene(SyntheticScene<Scalar>& scene, double snr_db, NoiseKind shape,
                   std::uint64_t seed) {
  auto [noisy, model] = add_noise(scene.clean, snr_db, shape, seed);
  scene.noisy = std::move(noisy);
  scene.noise = std::move(model);
  scene.achieved_snr_db = realized_snr_db(scene.clean, scene.noisy);
}

}  // namespace epunmix
