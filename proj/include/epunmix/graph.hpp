#pragma once

#include <tuple>
#include <utility>

#include "epunmix/types.hpp"

namespace epunmix {

/// Builds the 4-neighbor grid graph with the parity coloring: a horizontal
/// edge starting at column c gets color 1 for even c and color 2 for odd c;
/// a vertical edge starting at row r gets color 3 (even r) or 4 (odd r).
/// Consecutive starts alternate parity, so each color class is a matching.
inline PixelGraph build_grid_graph(Index width, Index height) {
  if (width < 1 || height < 1) throw InvalidArgument("grid dimensions must be positive");
  PixelGraph g;
  g.width = width;
  g.height = height;
  for (Index row = 0; row < height; ++row) {
    for (Index col = 0; col + 1 < width; ++col) {
      const Index n = row * width + col;
      g.colors[col % 2 == 0 ? 0 : 1].push_back({n, n + 1});
    }
  }
  for (Index row = 0; row + 1 < height; ++row) {
    for (Index col = 0; col < width; ++col) {
      const Index n = row * width + col;
      g.colors[row % 2 == 0 ? 2 : 3].push_back({n, n + width});
    }
  }
  return g;
}

/// Sum-to-one augmentation: appends one pseudo-band with value delta to the
/// observations and to every endmember. delta == 0 disables the constraint
/// and returns the inputs unchanged.
template <typename Scalar>
std::pair<HyperImage<Scalar>, EndmemberMatrix<Scalar>> augment_asc(
    const HyperImage<Scalar>& image, const EndmemberMatrix<Scalar>& endmembers,
    Scalar delta) {
  if (delta < Scalar(0)) throw InvalidArgument("asc delta must be nonnegative");
  if (delta == Scalar(0)) return {image, endmembers};
  const Index bands = image.bands();
  HyperImage<Scalar> out;
  out.width = image.width;
  out.height = image.height;
  out.data.resize(bands + 1, image.pixels());
  out.data.topRows(bands) = image.data;
  out.data.row(bands).setConstant(delta);
  EndmemberMatrix<Scalar> s(bands + 1, endmembers.cols());
  s.topRows(bands) = endmembers;
  s.row(bands).setConstant(delta);
  return {std::move(out), std::move(s)};
}

/// Pseudo-band noise variance for the augmentation: (delta / 100)^2 enforces
/// the sum-to-one residual at roughly 1% relative tolerance.
template <typename Scalar>
Scalar asc_pseudo_band_variance(Scalar delta) {
  return (delta / Scalar(100)) * (delta / Scalar(100));
}

/// Augmentation including the noise model.
template <typename Scalar>
std::tuple<HyperImage<Scalar>, EndmemberMatrix<Scalar>, NoiseModel<Scalar>> augment_asc(
    const HyperImage<Scalar>& image, const EndmemberMatrix<Scalar>& endmembers,
    const NoiseModel<Scalar>& noise, Scalar delta) {
  if (delta == Scalar(0)) return {image, endmembers, noise};
  auto [img, s] = augment_asc(image, endmembers, delta);
  auto extended = noise.with_extra_band(image.bands(), asc_pseudo_band_variance(delta));
  return {std::move(img), std::move(s), std::move(extended)};
}

}  // namespace epunmix
