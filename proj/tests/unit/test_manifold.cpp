#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kclab/manifold.hpp"
#include "kclab/samplers.hpp"

using namespace kclab;

namespace {

constexpr double kCap = 1.2;
constexpr double kWidth = 0.4;

// Uniform points on the sphere by normalised Gaussian triples.
std::vector<Vec3> sphere_points(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Vec3> out;
  while (out.size() < count) {
    Vec3 v{g(rng), g(rng), g(rng)};
    const double r = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (r < 1e-6) continue;
    out.push_back({v[0] / r, v[1] / r, v[2] / r});
  }
  return out;
}

double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

ChartFunction constant_function(double c) {
  return [c](const Vec2&) { return c; };
}

}  // namespace

TEST_CASE("stereographic charts") {
  const Atlas atlas = stereographic_atlas(kCap);
  REQUIRE(atlas.size() == 2);
  const Chart& north = atlas.chart(0);
  const Chart& south = atlas.chart(1);
  CHECK(north.id() == "north");
  CHECK(south.id() == "south");
  CHECK(north.image_radius() == doctest::Approx(1.0 / std::tan(kCap / 2.0)));

  const Vec2 n0 = north.forward({0, 0, 1});
  CHECK(n0[0] == 0.0);
  CHECK(n0[1] == 0.0);
  const Vec2 e = north.forward({1, 0, 0});
  CHECK(e[0] == doctest::Approx(1.0));
  const Vec2 s = south.forward({0.6, 0.0, -0.8});
  CHECK(s[0] == doctest::Approx(0.6 / 1.8));

  // The cap boundary maps onto the circle of radius cot(cap / 2).
  const Vec3 rim{std::sin(kCap), 0.0, -std::cos(kCap)};
  CHECK(std::hypot(north.forward(rim)[0], north.forward(rim)[1]) ==
        doctest::Approx(north.image_radius()).epsilon(1e-12));
  CHECK_FALSE(north.in_domain({0, 0, -1}));
  CHECK(north.in_domain({0, 0, 1}));
  CHECK_FALSE(north.in_image({north.image_radius(), 0.0}));

  CHECK_THROWS_AS(stereographic_atlas(0.0), std::invalid_argument);
  CHECK_THROWS_AS(stereographic_atlas(2.0), std::invalid_argument);

  std::size_t checked = 0;
  for (const Vec3& x : sphere_points(10000, 1)) {
    for (std::size_t i : atlas.charts_containing(x)) {
      const Chart& c = atlas.chart(i);
      CHECK(c.in_image(c.forward(x)));
      const double err = dist(c.inverse(c.forward(x)), x);
      if (err > 1e-12) FAIL_CHECK("round trip error " << err);
      ++checked;
    }
    CHECK_FALSE(atlas.charts_containing(x).empty());
  }
  CHECK(checked > 10000);
}

TEST_CASE("transition maps are inversions") {
  const Atlas atlas = stereographic_atlas(kCap);
  std::size_t n = 0;
  for (const Vec3& x : sphere_points(3000, 2)) {
    if (atlas.charts_containing(x).size() != 2) continue;
    const Vec2 u = atlas.chart(1).forward(x);
    const double r2 = u[0] * u[0] + u[1] * u[1];
    const Vec2 v = atlas.transition(0, 1, u);
    CHECK(v[0] == doctest::Approx(u[0] / r2).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(u[1] / r2).epsilon(1e-12));
    // Jacobian of u / |u|^2 has determinant -1 / |u|^4.
    const auto j = atlas.transition_jacobian(0, 1, u);
    const double det = j[0] * j[3] - j[1] * j[2];
    CHECK(std::abs(det) > 1e-6);
    CHECK(det == doctest::Approx(-1.0 / (r2 * r2)).epsilon(1e-5));
    if (++n == 1000) break;
  }
  CHECK(n == 1000);
  CHECK_THROWS_AS(atlas.transition(0, 1, {0.0, 0.0}), std::domain_error);
}

TEST_CASE("bump partition of unity") {
  CHECK(smooth_step(0.0) == 0.0);
  CHECK(smooth_step(-1.0) == 0.0);
  CHECK(smooth_step(1.0) == 1.0);
  CHECK(smooth_step(0.5) == doctest::Approx(0.5));
  for (double t : {0.1, 0.3, 0.77})
    CHECK(smooth_step(t) + smooth_step(1.0 - t) == doctest::Approx(1.0).epsilon(1e-15));

  const Atlas atlas = stereographic_atlas(kCap);
  const BumpPartition psi = bump_partition(atlas, kWidth);
  CHECK(psi.size() == 2);
  for (const Vec3& x : sphere_points(10000, 3)) {
    const auto w = psi.weights(x);
    if (std::abs(w[0] + w[1] - 1.0) > 1e-12) FAIL_CHECK("sum " << w[0] + w[1]);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(w[i] >= 0.0);
      if (w[i] > 0.0) CHECK(atlas.chart(i).in_domain(x));
    }
    if (x[2] >= kWidth / 2.0) CHECK(w[0] == 1.0);
    if (x[2] <= -kWidth / 2.0) CHECK(w[1] == 1.0);
  }
  CHECK(psi.weight(0, {1, 0, 0}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(bump_partition(atlas, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bump_partition(atlas, 2.0 * std::cos(kCap)), std::invalid_argument);
}

TEST_CASE("pullbacks to chart lattices") {
  const Atlas atlas = stereographic_atlas(kCap);
  const Chart& north = atlas.chart(0);
  const Lattice lat = make_lattice(north.image_box(), 257);

  SUBCASE("a constant field pulls back to a constant") {
    const SphereField c = sample_sphere(FieldSpec::sphere_isotropic({1.0}), 4);
    const GridField g = pullback(c, north, lat);
    const double expected = c.coefficient(0, 0) / std::sqrt(4.0 * std::numbers::pi);
    for (std::size_t i = 0; i < lat.size(); ++i)
      if (g.valid(i)) CHECK(g.values[i] == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("the mask is the complement of the disk") {
    const auto mask = chart_mask(north, lat);
    std::size_t off = 0;
    for (auto v : mask) off += v == 0;
    CHECK(std::abs(double(off) / lat.size() - (1.0 - std::numbers::pi / 4.0)) <= 0.02);
  }
  SUBCASE("bilinear interpolation tracks the exact pullback") {
    const SphereField f =
        sample_sphere(FieldSpec::sphere_isotropic(power_law_spectrum(4, 4.0)), 5);
    const ChartFunction exact = exact_chart_function(f, north);
    const ChartFunction grid = grid_chart_function(pullback(f, north, lat));
    std::mt19937_64 rng(6);
    const double r = 0.8 * north.image_radius();
    std::uniform_real_distribution<double> u(-r, r);
    double worst = 0.0;
    for (int k = 0; k < 2000; ++k) {
      const Vec2 p{u(rng), u(rng)};
      if (std::hypot(p[0], p[1]) >= r) continue;
      worst = std::max(worst, std::abs(grid(p) - exact(p)));
    }
    CHECK(worst < 1e-3);
    CHECK_THROWS_AS(grid({10.0, 0.0}), std::domain_error);
  }
  SUBCASE("the lattice must cover the image box") {
    const SphereField c = sample_sphere(FieldSpec::sphere_isotropic({1.0}), 4);
    CHECK_THROWS(pullback(c, north, make_lattice(BoxDomain::unit(2), 17)));
  }
}

TEST_CASE("patching chart functions") {
  const Atlas atlas = stereographic_atlas(kCap);
  const BumpPartition psi = bump_partition(atlas, kWidth);

  SUBCASE("patching the exact pullbacks reproduces the field") {
    const SphereField f =
        sample_sphere(FieldSpec::sphere_isotropic(power_law_spectrum(6, 2.0)), 7);
    const PatchedField p =
        patch({exact_chart_function(f, atlas.chart(0)), exact_chart_function(f, atlas.chart(1))}, psi,
              atlas);
    for (const Vec3& x : sphere_points(10000, 8)) {
      const double err = std::abs(p.evaluate(x) - f.evaluate(x));
      if (err > 1e-12) FAIL_CHECK("patch error " << err);
    }
  }
  SUBCASE("patched values stay within the active chart values") {
    const PatchedField p = patch({constant_function(1.0), constant_function(2.0)}, psi, atlas);
    CHECK(p.evaluate({0, 0, 1}) == 1.0);
    CHECK(p.evaluate({0, 0, -1}) == 2.0);
    CHECK(p.evaluate({0.6, 0, 0.8}) == 1.0);
    for (const Vec3& x : sphere_points(2000, 9)) {
      const auto range = p.active_range(x);
      const double v = p.evaluate(x);
      CHECK(v >= range[0] - 1e-15);
      CHECK(v <= range[1] + 1e-15);
      // Disagreement between charts bounds the deviation from either one.
      CHECK(std::abs(v - range[0]) <= range[1] - range[0] + 1e-15);
      CHECK(std::abs(v - range[1]) <= range[1] - range[0] + 1e-15);
    }
  }
}

TEST_CASE("chartwise regularity of a constant field") {
  McConfig mc;
  mc.n_replicates = 100;
  mc.points_per_axis = 129;
  mc.min_level = 2;
  mc.max_level = 6;
  mc.holder_samples = 20;
  mc.holder_min_level = 2;
  mc.holder_max_level = 5;
  const double ps[] = {4.0};
  const ChartwiseReport r = chartwise_regularity(FieldSpec::sphere_isotropic({1.0}),
                                                 stereographic_atlas(kCap), kWidth, 0, ps, mc);
  REQUIRE(r.charts.size() == 2);
  for (const auto& c : r.charts) {
    CHECK(c.report.degenerate);
    CHECK(c.report.verdict == "constant");
  }
  CHECK_FALSE(r.discrepancy);
  const auto j = to_json(r);
  CHECK(j.at("charts").size() == 2);
  CHECK(j.at("charts")[0].at("chart_id") == "north");
  CHECK_THROWS(chartwise_regularity(FieldSpec::sphere_isotropic({1.0}), stereographic_atlas(kCap),
                                    kWidth, 1, ps, mc));
}
