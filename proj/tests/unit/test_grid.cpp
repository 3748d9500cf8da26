#include <doctest.h>

#include <cmath>
#include <random>

#include "kclab/experiment.hpp"
#include "kclab/grid.hpp"

using namespace kclab;

namespace {

// Brute-force greedy cover: repeatedly pick the lowest-index point covering
// the most uncovered points. Balls are closed, with slack for rounding in
// distances such as 3 * 0.1.
std::size_t naive_greedy_cover(const Lattice& lat, double radius) {
  radius *= 1.0 + 1e-12;
  const std::size_t N = lat.size();
  std::vector<bool> covered(N, false);
  std::size_t remaining = N, balls = 0;
  while (remaining > 0) {
    std::size_t best = 0, best_gain = 0;
    for (std::size_t c = 0; c < N; ++c) {
      std::size_t gain = 0;
      for (std::size_t q = 0; q < N; ++q)
        if (!covered[q] && lat.distance(c, q) <= radius) ++gain;
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    for (std::size_t q = 0; q < N; ++q)
      if (!covered[q] && lat.distance(best, q) <= radius) {
        covered[q] = true;
        --remaining;
      }
    ++balls;
  }
  return balls;
}

}  // namespace

TEST_CASE("make_lattice enumerates the closed box") {
  const Lattice a = make_lattice(BoxDomain::unit(1), 2);
  CHECK(a.size() == 2);
  CHECK(a.point(0)[0] == 0.0);
  CHECK(a.point(1)[0] == 1.0);
  CHECK(a.spacing(0) == 1.0);

  const Lattice b = make_lattice(BoxDomain::unit(2), 3);
  CHECK(b.size() == 9);
  CHECK(b.spacing(0) == 0.5);
  CHECK(b.spacing(1) == 0.5);

  const Lattice c = make_lattice(BoxDomain({0.0}, {2.0}), 5);
  CHECK(c.spacing(0) == 0.5);
  CHECK(c.point(3)[0] == 1.5);
  CHECK(c.point(4)[0] == 2.0);

  CHECK_THROWS_AS(make_lattice(BoxDomain::unit(1), 1), std::invalid_argument);
  CHECK_THROWS_AS(BoxDomain({0.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("dyadic_pairs enumerates axis pairs at each level") {
  const Lattice lat = make_lattice(BoxDomain::unit(1), 9);
  const int one[] = {1};
  const PointPairSet p1 = dyadic_pairs(lat, one);
  REQUIRE(p1.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(p1.pairs[i].a == i);
    CHECK(p1.pairs[i].b == i + 4);
    CHECK(p1.lags[i] == 0.5);
  }
  const int three[] = {3};
  const PointPairSet p3 = dyadic_pairs(lat, three);
  CHECK(p3.size() == 8);
  for (double lag : p3.lags) CHECK(lag == 0.125);

  CHECK(dyadic_pairs(lat, std::span<const int>{}).empty());

  const Lattice odd = make_lattice(BoxDomain::unit(1), 10);
  CHECK_THROWS_AS(dyadic_pairs(odd, one), std::invalid_argument);
}

TEST_CASE("pair lags equal recomputed distances") {
  const Lattice lat = make_lattice(BoxDomain({-0.3, 1.0}, {0.7, 3.5}), 33);
  const int levels[] = {1, 2, 3, 4, 5};
  const PointPairSet pairs = dyadic_pairs(lat, levels, 50, 7);
  CHECK(pairs.size() > 0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs.pairs[i].a != pairs.pairs[i].b);
    const auto x = lat.point(pairs.pairs[i].a);
    const auto y = lat.point(pairs.pairs[i].b);
    const double d = std::hypot(x[0] - y[0], x[1] - y[1]);
    CHECK(std::abs(pairs.lags[i] - d) <= 1e-14 * d);
  }
  // Random pairs are reproducible from the seed.
  const PointPairSet again = dyadic_pairs(lat, levels, 50, 7);
  for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(again.pairs[i].b == pairs.pairs[i].b);
}

TEST_CASE("restrict_pairs drops masked endpoints") {
  const Lattice lat = make_lattice(BoxDomain::unit(1), 9);
  const int one[] = {1};
  std::vector<std::uint8_t> mask(9, 1);
  mask[4] = 0;
  const PointPairSet kept = restrict_pairs(dyadic_pairs(lat, one), mask);
  CHECK(kept.size() == 3);
  for (const auto& p : kept.pairs) CHECK((p.a != 4 && p.b != 4));
}

TEST_CASE("covering numbers") {
  const Lattice line = make_lattice(BoxDomain::unit(1), 101);
  CHECK(covering_number(line, 0.5) == 1);
  const std::size_t n05 = covering_number(line, 0.05);
  CHECK(n05 >= 10);
  CHECK(n05 <= 11);
  CHECK_THROWS_AS(covering_number(line, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(covering_number(line, -1.0), std::invalid_argument);

  SUBCASE("matches a brute-force greedy cover") {
    const Lattice sq = make_lattice(BoxDomain::unit(2), 17);
    for (double r : {0.4, 0.2, 0.13, 0.07}) CHECK(covering_number(sq, r) == naive_greedy_cover(sq, r));
    const Lattice rect = make_lattice(BoxDomain({0.0, 0.0}, {2.0, 1.0}), 11);
    for (double r : {0.5, 0.3}) CHECK(covering_number(rect, r) == naive_greedy_cover(rect, r));
  }

  SUBCASE("nonincreasing along dyadic radii") {
    for (std::size_t dim : {1u, 2u}) {
      const Lattice lat = make_lattice(BoxDomain::unit(dim), dim == 1 ? 257 : 65);
      std::size_t prev = lat.size();
      for (int k = 6; k >= 0; --k) {
        const std::size_t n = covering_number(lat, std::ldexp(1.0, -k));
        CHECK(n <= prev);
        prev = n;
      }
      CHECK(prev == 1);
    }
  }

  SUBCASE("never below the volume bound") {
    // Any cover needs at least (points) / (points per ball) balls.
    const Lattice sq = make_lattice(BoxDomain::unit(2), 33);
    for (double r = 0.03; r < 1.0; r *= 1.3) {
      std::size_t ball = 0;
      const std::size_t centre = sq.size() / 2;
      for (std::size_t q = 0; q < sq.size(); ++q) ball += sq.distance(centre, q) <= r * (1.0 + 1e-12);
      CHECK(covering_number(sq, r) * ball >= sq.size());
    }
  }

  SUBCASE("entropy slopes") {
    CHECK(covering_table(1, 1025, 1, 6).slope == doctest::Approx(1.0).epsilon(1e-12));
    // Radius 1/2 is below the asymptotic regime in 2-D; levels start at 2.
    const CoveringTable t2 = covering_table(2, 129, 2, 5);
    CHECK(t2.slope >= 1.6);
    CHECK(t2.slope <= 2.4);
  }
}

TEST_CASE("lattice and pair JSON round trip") {
  const Lattice lat = make_lattice(BoxDomain({0.0, -1.0}, {1.0, 1.0}), 9);
  CHECK(lattice_from_json(to_json(lat)) == lat);
  const int levels[] = {1, 2};
  const PointPairSet pairs = dyadic_pairs(lat, levels, 3, 11);
  const PointPairSet back = pairs_from_json(lat, to_json(pairs));
  REQUIRE(back.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(back.pairs[i].a == pairs.pairs[i].a);
    CHECK(back.pairs[i].b == pairs.pairs[i].b);
    CHECK(back.lags[i] == pairs.lags[i]);
  }
}
