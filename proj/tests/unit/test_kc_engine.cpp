#include <doctest.h>

#include <cmath>

#include "kclab/kc_engine.hpp"
#include "kclab/samplers.hpp"

using namespace kclab;

namespace {

StructureFunctionData power_law(double c, double theta, double p, std::size_t points) {
  StructureFunctionData d;
  d.p = p;
  d.alpha = MultiIndex::zero(1);
  for (std::size_t k = 0; k < points; ++k) {
    const double h = std::ldexp(1.0, -static_cast<int>(k + 2));
    d.points.insert(d.points.begin(), {h, c * std::pow(h, theta), 0.01 * c * std::pow(h, theta), 10});
  }
  return d;
}

const StructurePoint& at_lag(const StructureFunctionData& d, double lag) {
  for (const auto& pt : d.points)
    if (std::abs(pt.lag - lag) <= 1e-12) return pt;
  throw std::runtime_error("lag not found");
}

McConfig small_config() {
  McConfig mc;
  mc.n_replicates = 300;
  mc.points_per_axis = 1025;
  mc.min_level = 2;
  mc.max_level = 7;
  mc.holder_samples = 60;
  mc.holder_min_level = 2;
  mc.holder_max_level = 8;
  return mc;
}

}  // namespace

TEST_CASE("structure functions of Brownian motion") {
  const Lattice lat = make_lattice(BoxDomain::unit(1), 257);
  const int levels[] = {2, 3, 4};
  const PointPairSet pairs = dyadic_pairs(lat, levels);
  const FieldSpec bm = FieldSpec::brownian_motion();
  const auto p2 = estimate_structure_function(bm, lat, pairs, MultiIndex::zero(1), 2.0, 400, 31);
  const auto p4 = estimate_structure_function(bm, lat, pairs, MultiIndex::zero(1), 4.0, 400, 31);
  REQUIRE(p2.points.size() == 3);
  CHECK(p2.points.front().lag < p2.points.back().lag);

  // E|B(t+h) - B(t)|^2 = h and E|.|^4 = 3 h^2.
  const auto& a = at_lag(p2, 0.25);
  CHECK(std::abs(a.estimate - 0.25) <= 4.0 * a.standard_error);
  const auto& b = at_lag(p4, 0.125);
  CHECK(std::abs(b.estimate - 3.0 / 64.0) <= 4.0 * b.standard_error);

  const auto zero = estimate_structure_function(FieldSpec::covariance_field("zero", {}), lat, pairs,
                                                MultiIndex::zero(1), 2.0, 100, 1);
  for (const auto& pt : zero.points) {
    CHECK(pt.estimate == 0.0);
    CHECK(pt.standard_error == 0.0);
  }
}

TEST_CASE("standard errors shrink like one over root n") {
  const Lattice lat = make_lattice(BoxDomain::unit(1), 129);
  const int levels[] = {3};
  const PointPairSet pairs = dyadic_pairs(lat, levels);
  const FieldSpec bm = FieldSpec::brownian_motion();
  const auto small = estimate_structure_function(bm, lat, pairs, MultiIndex::zero(1), 4.0, 1000, 8);
  const auto large = estimate_structure_function(bm, lat, pairs, MultiIndex::zero(1), 4.0, 2000, 9);
  const double ratio = small.points[0].standard_error / large.points[0].standard_error;
  CAPTURE(ratio);
  CHECK(ratio >= 1.25);
  CHECK(ratio <= 1.6);
}

TEST_CASE("moment exponent fits") {
  SUBCASE("exact power law") {
    const MomentFit f = fit_moment_exponent(power_law(3.0, 2.5, 4.0, 5), 1);
    REQUIRE(f.theta_hat);
    CHECK(*f.theta_hat == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(*f.epsilon_hat == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK_FALSE(f.degenerate);
  }
  SUBCASE("all-zero estimates are degenerate") {
    const MomentFit f = fit_moment_exponent(power_law(0.0, 2.0, 4.0, 5), 1);
    CHECK(f.degenerate);
    CHECK_FALSE(f.theta_hat);
  }
  SUBCASE("too few points") {
    CHECK_THROWS(fit_moment_exponent(power_law(1.0, 2.0, 4.0, 2), 1));
  }
  SUBCASE("Brownian motion at p = 4") {
    const Lattice lat = make_lattice(BoxDomain::unit(1), 1025);
    const int levels[] = {2, 3, 4, 5, 6, 7, 8};
    const auto data = estimate_structure_function(FieldSpec::brownian_motion(), lat,
                                                  dyadic_pairs(lat, levels), MultiIndex::zero(1),
                                                  4.0, 300, 12);
    const MomentFit f = fit_moment_exponent(data, 1);
    REQUIRE(f.epsilon_hat);
    CHECK(*f.epsilon_hat >= 0.85);
    CHECK(*f.epsilon_hat <= 1.15);
    REQUIRE(f.theta_se);
    CHECK(*f.theta_se > 0.0);
    CHECK(jackknife_slopes(data).size() == 300);
  }
  SUBCASE("scaling the field leaves the exponent unchanged") {
    const Lattice lat = make_lattice(BoxDomain::unit(1), 257);
    const int levels[] = {2, 3, 4, 5, 6};
    const PointPairSet pairs = dyadic_pairs(lat, levels);
    const MultiIndex a0 = MultiIndex::zero(1);
    const double ps[] = {4.0};
    const FieldSpec spec = FieldSpec::fractional_bm(0.3);
    const LatticeSampler sampler(spec, lat);
    auto scaled = [&](double c) {
      return [&, c](std::uint64_t seed) {
        GridField f = sampler.draw(seed);
        for (double& v : f.values) v *= c;
        return f;
      };
    };
    const auto base = estimate_structure_functions(scaled(1.0), pairs, {&a0, 1}, ps, 200, 3);
    const auto big = estimate_structure_functions(scaled(7.0), pairs, {&a0, 1}, ps, 200, 3);
    CHECK(*fit_moment_exponent(big[0][0], 1).theta_hat ==
          doctest::Approx(*fit_moment_exponent(base[0][0], 1).theta_hat).epsilon(1e-10));
  }
}

TEST_CASE("jackknife standard error") {
  // Delete-one means of {1, 2, 3, 4}: SE equals the usual sd / sqrt(n).
  const double loo[] = {3.0, 8.0 / 3.0, 7.0 / 3.0, 2.0};
  const double expected = std::sqrt(5.0 / 3.0) / 2.0;
  REQUIRE(jackknife_standard_error(loo));
  CHECK(*jackknife_standard_error(loo) == doctest::Approx(expected).epsilon(1e-12));
  const double one[] = {1.0};
  CHECK_FALSE(jackknife_standard_error(one));
}

TEST_CASE("predicted regularity") {
  CHECK(predict_t_max(0, 4.0, 1.0, 1) == doctest::Approx(0.25));
  CHECK(predict_t_max(1, 8.0, 3.0, 1) == doctest::Approx(11.0 / 8.0));
  // Brownian motion: eps = p/2 - 1 gives 1/2 - 1/p, increasing to 1/2.
  double prev = 0.0;
  for (double p : {4.0, 8.0, 16.0, 64.0, 1024.0}) {
    const double t = predict_t_max(0, p, p / 2.0 - 1.0, 1);
    CHECK(t == doctest::Approx(0.5 - 1.0 / p));
    CHECK(t > prev);
    CHECK(t < 0.5);
    prev = t;
  }
  // Nondecreasing in eps, with the branch switch at eps = p - n.
  const double p = 6.0;
  const int n = 2;
  double last = 0.0;
  for (double eps = 0.5; eps <= p; eps += 0.25) {
    const double t = predict_t_max(0, p, eps, n);
    CHECK(t >= last);
    CHECK(t == doctest::Approx(eps <= p - n ? eps / p : 1.0 - n / p));
    last = t;
  }
  std::string warning;
  CHECK(predict_t_max(0, 4.0, 9.0, 1, &warning) == predict_t_max(0, 4.0, 4.0, 1));
  CHECK_FALSE(warning.empty());
  CHECK_THROWS_AS(predict_t_max(0, 1.0, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(predict_t_max(0, 4.0, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(predict_t_max(-1, 4.0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(predict_t_max(0, 4.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("Sobolev resolution sweep separates the two sides of nu = 1/2") {
  const std::size_t ms[] = {129, 257, 513};
  const FieldSpec bm = FieldSpec::brownian_motion();
  const auto stable = sobolev_resolution_sweep(bm, BoxDomain::unit(1), ms, NormSpec(0.3), 4.0, 100, 6);
  CHECK(stable.rows.size() == 3);
  CHECK_FALSE(stable.divergent);
  for (double nu : {0.6, 0.7}) {
    const auto sweep = sobolev_resolution_sweep(bm, BoxDomain::unit(1), ms, NormSpec(nu), 4.0, 100, 6);
    CAPTURE(nu);
    CHECK(sweep.divergent);
    CHECK(sweep.rows[2].mean > sweep.rows[1].mean);
    CHECK(sweep.rows[1].mean > sweep.rows[0].mean);
  }
  const std::size_t bad[] = {129, 200};
  CHECK_THROWS(sobolev_resolution_sweep(bm, BoxDomain::unit(1), bad, NormSpec(0.3), 4.0, 100, 6));
}

TEST_CASE("verification of fractional BM") {
  const double ps[] = {4.0, 8.0};
  const RegularityReport r = run_verification(FieldSpec::fractional_bm(0.3), 0, ps, small_config());
  REQUIRE(r.per_p.size() == 2);
  // eps = pH - 1 gives H - 1/p.
  for (const auto& row : r.per_p) {
    REQUIRE(row.t_max);
    CHECK(std::abs(*row.t_max - (0.3 - 1.0 / row.p)) <= 0.05);
  }
  REQUIRE(r.t_star);
  REQUIRE(r.empirical_t);
  CHECK(std::abs(*r.empirical_t - 0.3) <= 0.06);
}

TEST_CASE("verification of integrated BM uses the derivative") {
  const double ps[] = {4.0, 8.0, 16.0};
  const RegularityReport r = run_verification(FieldSpec::integrated_bm(), 1, ps, small_config());
  for (const auto& row : r.per_p) {
    REQUIRE(row.t_max);
    CHECK(row.alpha.order() == 1);
    CHECK(std::abs(*row.t_max - (1.5 - 1.0 / row.p)) <= 0.05);
  }
  CHECK(r.verdict == "pass");

  McConfig strict = small_config();
  strict.strict = true;
  strict.n_replicates = 100;
  const RegularityReport s = run_verification(FieldSpec::integrated_bm(), 1, ps, strict);
  for (const auto& row : s.per_p) CHECK(row.alpha.order() == 1);

  McConfig low = small_config();
  low.n_replicates = 99;
  CHECK_THROWS(run_verification(FieldSpec::integrated_bm(), 1, ps, low));
}

TEST_CASE("reports do not depend on the thread count") {
  const double ps[] = {4.0};
  McConfig mc = small_config();
  mc.n_replicates = 100;
  mc.holder_samples = 20;
  mc.threads = 1;
  const std::string one = to_json(run_verification(FieldSpec::brownian_motion(), 0, ps, mc)).dump();
  mc.threads = 3;
  const std::string three = to_json(run_verification(FieldSpec::brownian_motion(), 0, ps, mc)).dump();
  CHECK(one == three);
}

TEST_CASE("a constant field is reported as degenerate") {
  const double ps[] = {4.0, 8.0};
  McConfig mc = small_config();
  mc.n_replicates = 100;
  mc.holder_samples = 20;
  const RegularityReport r = run_verification(FieldSpec::covariance_field("zero", {}), 0, ps, mc);
  CHECK(r.degenerate);
  CHECK(r.verdict == "constant");
  CHECK_FALSE(r.t_star);
  for (const auto& row : r.per_p) CHECK_FALSE(row.epsilon_hat);
}

TEST_CASE("shared weights remove the weighting gap on a curved relation") {
  // Same curved log-log relation, different error profiles.
  auto make = [](double tail_se) {
    StructureFunctionData d;
    d.p = 8.0;
    d.alpha = MultiIndex::zero(2);
    for (int k = 6; k >= 2; --k) {
      const double h = std::ldexp(1.0, -k);
      const double v = std::pow(h, 8.0) * (1.0 + 3.0 * h * h);
      const double rel = k == 2 ? tail_se : 0.05;
      d.points.push_back({h, v, rel * v, 100});
    }
    d.replicate_means.assign(4, std::vector<double>(5, 0.0));
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t g = 0; g < 5; ++g)
        d.replicate_means[r][g] = d.points[g].estimate * (1.0 + 0.01 * (double(r) - 1.5));
    return d;
  };
  const auto a = make(0.05);
  const auto b = make(0.5);
  CHECK(std::abs(*fit_moment_exponent(a, 2).theta_hat - *fit_moment_exponent(b, 2).theta_hat) > 1e-3);
  const auto c = compare_slopes(a, b);
  REQUIRE(c);
  CHECK(c->slope_a == doctest::Approx(c->slope_b).epsilon(1e-12));
  REQUIRE(c->difference_se);
  CHECK(*c->difference_se == doctest::Approx(0.0).epsilon(1e-12));

  auto short_b = b;
  short_b.points.pop_back();
  CHECK_FALSE(compare_slopes(a, short_b));
}
