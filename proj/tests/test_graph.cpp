#include <doctest.h>

#include <set>
#include <vector>

#include "epunmix/graph.hpp"

using namespace epunmix;

namespace {

bool is_matching(const std::vector<PixelGraph::Edge>& edges) {
  std::set<Index> seen;
  for (const auto& e : edges) {
    if (!seen.insert(e.a).second) return false;
    if (!seen.insert(e.b).second) return false;
  }
  return true;
}

bool grid_adjacent(const PixelGraph::Edge& e, Index width) {
  const Index d = e.b - e.a;
  if (d == width) return true;                   // vertical neighbor
  return d == 1 && e.a / width == e.b / width;   // horizontal, same row
}

}  // namespace

TEST_CASE("degenerate single-pixel grid has no edges") {
  const auto g = build_grid_graph(1, 1);
  CHECK(g.edge_count() == 0);
  for (const auto& c : g.colors) CHECK(c.empty());
}

TEST_CASE("2x2 grid: two horizontal edges in color 1, two vertical in color 3") {
  const auto g = build_grid_graph(2, 2);
  CHECK(g.edge_count() == 4);
  REQUIRE(g.colors[0].size() == 2);
  CHECK(g.colors[1].empty());
  REQUIRE(g.colors[2].size() == 2);
  CHECK(g.colors[3].empty());
  CHECK(g.colors[0][0].a == 0);
  CHECK(g.colors[0][0].b == 1);
  CHECK(g.colors[0][1].a == 2);
  CHECK(g.colors[0][1].b == 3);
  CHECK(g.colors[2][0].a == 0);
  CHECK(g.colors[2][0].b == 2);
  CHECK(g.colors[2][1].a == 1);
  CHECK(g.colors[2][1].b == 3);
}

TEST_CASE("3x3 grid: 12 edges in classes of size 3, all matchings") {
  const auto g = build_grid_graph(3, 3);
  CHECK(g.edge_count() == 12);
  for (const auto& c : g.colors) {
    CHECK(c.size() == 3);
    CHECK(is_matching(c));
  }
}

TEST_CASE("coloring properties hold exhaustively for all grids up to 8x8") {
  for (Index w = 1; w <= 8; ++w) {
    for (Index h = 1; h <= 8; ++h) {
      const auto g = build_grid_graph(w, h);
      CHECK(g.edge_count() == h * (w - 1) + w * (h - 1));
      std::set<std::pair<Index, Index>> all;
      for (const auto& c : g.colors) {
        CHECK(is_matching(c));
        for (const auto& e : c) {
          CHECK(e.a < e.b);
          CHECK(grid_adjacent(e, w));
          CHECK(all.emplace(e.a, e.b).second);  // classes are disjoint
        }
      }
    }
  }
}

TEST_CASE("augment_asc") {
  HyperImage<double> image;
  image.width = 2;
  image.height = 1;
  image.data.resize(3, 2);
  image.data << 0.1, 0.4, 0.2, 0.5, 0.3, 0.6;
  EndmemberMatrix<double> s(3, 2);
  s << 1, 0, 0, 1, 0.5, 0.5;

  SUBCASE("delta 0 is the disabled path") {
    const auto [img, lib] = augment_asc(image, s, 0.0);
    CHECK(img.data == image.data);
    CHECK(lib == s);
  }
  SUBCASE("appends the pseudo-band") {
    const auto [img, lib] = augment_asc(image, s, 10.0);
    CHECK(img.bands() == 4);
    CHECK(lib.rows() == 4);
    CHECK(lib(3, 0) == 10.0);
    CHECK(lib(3, 1) == 10.0);
    CHECK(img.data(3, 0) == 10.0);
    CHECK(img.data(3, 1) == 10.0);
    CHECK(img.data.topRows(3) == image.data);

    // Any x on the simplex reproduces the pseudo-band exactly.
    Eigen::Vector2d x(0.25, 0.75);
    CHECK((lib * x)(3) == doctest::Approx(10.0).epsilon(1e-15));
  }
  SUBCASE("negative delta rejected") {
    CHECK_THROWS_AS((void)augment_asc(image, s, -1.0), InvalidArgument);
  }
  SUBCASE("noise model gains the pseudo-band variance") {
    const auto noise = NoiseModel<double>::isotropic(0.01);
    const auto [img, lib, ext] = augment_asc(image, s, noise, 10.0);
    CHECK(ext.kind() == NoiseKind::diagonal);
    CHECK(ext.band_variances()(3) == doctest::Approx(0.01).epsilon(1e-15));  // (10/100)^2
    CHECK(ext.band_variances()(0) == doctest::Approx(0.01).epsilon(1e-15));
  }
  SUBCASE("a full covariance extends block-diagonally") {
    MatrixX<double> cov(3, 3);
    cov << 0.4, 0.1, 0.0, 0.1, 0.3, 0.05, 0.0, 0.05, 0.2;
    const auto noise = NoiseModel<double>::full(cov);
    const auto ext = noise.with_extra_band(3, 0.01);
    CHECK(ext.kind() == NoiseKind::full);
    CHECK(ext.covariance()(3, 3) == 0.01);
    CHECK(ext.covariance()(3, 0) == 0.0);
    CHECK((ext.covariance().topLeftCorner(3, 3) - cov).cwiseAbs().maxCoeff() == 0.0);
    const MatrixX<double> id = MatrixX<double>::Identity(4, 4);
    CHECK((ext.covariance() * ext.solve(id) - id).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("noise model validation") {
  CHECK_THROWS_AS((void)NoiseModel<double>::isotropic(0.0), InvalidArgument);
  VectorX<double> bad(2);
  bad << 1.0, -0.5;
  CHECK_THROWS_AS((void)NoiseModel<double>::diagonal(bad), InvalidArgument);
  MatrixX<double> not_spd(2, 2);
  not_spd << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS((void)NoiseModel<double>::full(not_spd), InvalidArgument);
  MatrixX<double> asym(2, 2);
  asym << 1.0, 0.5, 0.1, 1.0;
  CHECK_THROWS_AS((void)NoiseModel<double>::full(asym), InvalidArgument);
  MatrixX<double> ok(2, 2);
  ok << 2.0, 0.3, 0.3, 1.0;
  const auto noise = NoiseModel<double>::full(ok);
  MatrixX<double> rhs = MatrixX<double>::Identity(2, 2);
  CHECK((noise.covariance() * noise.solve(rhs) - rhs).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(noise.log_det(2) == doctest::Approx(std::log(2.0 * 1.0 - 0.09)).epsilon(1e-12));
}

TEST_CASE("hyperparameter validation") {
  Hyperparams h;
  CHECK_NOTHROW(h.validate());
  h.damping = 0.0;
  CHECK_THROWS_AS(h.validate(), InvalidArgument);
  h.damping = 1.0;
  h.slab_variance = 0.0;
  CHECK_THROWS_AS(h.validate(), InvalidArgument);
  h.slab_variance = 1.0;
  h.admm_rho = 0.0;
  CHECK_THROWS_AS(h.validate(), InvalidArgument);
}
