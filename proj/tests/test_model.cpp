#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "timecov/model.hpp"

using namespace timecov;

namespace {
const PhysicalConstants kUnit{};
const Interval kWide{-50.0, 50.0};
}  // namespace

TEST_CASE("eval_timemap: catalogue values") {
  SUBCASE("linear alpha=2 is t = tau/2") {
    const auto v = eval_timemap(TimeMap::linear(2.0, kWide), 1.0);
    CHECK(v.t == 0.5);
    CHECK(v.tprime == 0.5);
  }
  SUBCASE("identity") {
    const auto v = eval_timemap(TimeMap::identity(kWide), 3.7);
    CHECK(v.t == 3.7);
    CHECK(v.tprime == 1.0);
  }
  SUBCASE("sine perturbed at the origin") {
    const auto v = eval_timemap(TimeMap::sine_perturbed(0.3, 1.0, kWide), 0.0);
    CHECK(v.t == 0.0);
    CHECK(v.tprime == doctest::Approx(1.3).epsilon(1e-15));
  }
}

TEST_CASE("identity map is bitwise stable") {
  const auto map = TimeMap::identity(kWide);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double tau = u(rng);
    const auto a = map.eval(tau);
    const auto b = map.eval(tau);
    CHECK(a.t == tau);
    CHECK(a.tprime == 1.0);
    CHECK(a.t == b.t);
  }
}

TEST_CASE("linear map differences scale by 1/alpha") {
  const auto map = TimeMap::linear(3.0, kWide);
  const double d = map.t_of(7.5) - map.t_of(1.25);
  CHECK(d == doctest::Approx((7.5 - 1.25) / 3.0).epsilon(1e-15));
}

TEST_CASE("scaled and linear agree for power-of-two rates") {
  const auto a = TimeMap::linear(0.5, kWide);
  const auto b = TimeMap::scaled(2.0, kWide);
  for (double tau : {-3.0, 0.1, 1.7, 40.0}) {
    CHECK(a.eval(tau).t == b.eval(tau).t);
    CHECK(a.eval(tau).tprime == b.eval(tau).tprime);
  }
}

TEST_CASE("time maps reject non-monotone parameters at construction") {
  SUBCASE("alpha = 0") {
    CHECK_THROWS_WITH_AS(TimeMap::linear(0.0, kWide), doctest::Contains("monotonicity"), ValidationError);
  }
  SUBCASE("negative alpha") { CHECK_THROWS_AS(TimeMap::linear(-1.0, kWide), ValidationError); }
  SUBCASE("sine with |a w| >= 1") {
    CHECK_THROWS_AS(TimeMap::sine_perturbed(0.5, 2.0, kWide), ValidationError);
    CHECK_THROWS_AS(TimeMap::sine_perturbed(-1.2, 1.0, kWide), ValidationError);
  }
  SUBCASE("ramp to a non-positive rate") {
    CHECK_THROWS_AS(TimeMap::smooth_ramp(0.0, 2.0, 1.0, kWide), ValidationError);
    CHECK_THROWS_AS(TimeMap::smooth_ramp(-0.5, 2.0, 1.0, kWide), ValidationError);
  }
  SUBCASE("empty domain") { CHECK_THROWS_AS(TimeMap::identity({1.0, 1.0}), ValidationError); }
}

TEST_CASE("evaluation outside the domain is a domain error") {
  const auto map = TimeMap::sine_perturbed(0.3, 1.0, {0.0, 10.0});
  CHECK_THROWS_AS(map.eval(-1e-9), DomainError);
  CHECK_THROWS_AS(map.eval(10.5), DomainError);
  CHECK_NOTHROW(map.eval(10.0));
}

TEST_CASE("property: every constructible map has T' > 0 and T' = dT/dtau") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double lo = -5.0 + 5.0 * u(rng);
    const Interval dom{lo, lo + 0.5 + 10.0 * u(rng)};
    TimeMap map = TimeMap::identity(dom);
    switch (trial % 4) {
      case 1:
        map = TimeMap::linear(0.1 + 5.0 * u(rng), dom);
        break;
      case 2: {
        const double w = 0.2 + 3.0 * u(rng);
        map = TimeMap::sine_perturbed((0.95 * u(rng)) / w, w, dom);
        break;
      }
      case 3:
        map = TimeMap::smooth_ramp(0.05 + 4.0 * u(rng), lo + 5.0 * u(rng), 0.1 + 2.0 * u(rng), dom);
        break;
      default:
        break;
    }
    double prev_t = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 400; ++k) {
      const double tau = std::min(dom.hi, dom.lo + dom.length() * k / 400.0);
      const auto v = map.eval(tau);
      REQUIRE(v.tprime > 0.0);
      CHECK(v.t > prev_t);
      prev_t = v.t;
      // Central difference of T as an independent check of T'.
      const double h = 1e-5;
      if (tau - h >= dom.lo && tau + h <= dom.hi) {
        const double fd = (map.eval(tau + h).t - map.eval(tau - h).t) / (2.0 * h);
        CHECK(fd == doctest::Approx(v.tprime).epsilon(1e-7));
      }
    }
  }
}

TEST_CASE("smooth ramp starts at T(0) = 0 and approaches its final rate") {
  const auto map = TimeMap::smooth_ramp(2.0, 5.0, 0.5, {0.0, 20.0});
  CHECK(std::abs(map.eval(0.0).t) <= 1e-14);
  CHECK(map.eval(0.0).tprime == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(map.eval(20.0).tprime == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("eval_potential: catalogue values") {
  CHECK(eval_potential(PotentialSpec::harmonic(1.0), kUnit, 0.0, 2.0) == 2.0);
  CHECK(eval_potential(PotentialSpec::free(), kUnit, 3.0, -7.0) == 0.0);
  CHECK(eval_potential(PotentialSpec::driven_harmonic(1.0, 0.1), kUnit, 1.0, 1.0) ==
        doctest::Approx(0.605).epsilon(1e-14));
  CHECK(eval_potential(PotentialSpec::moving_well(2.0, 1.0, 0.0, 0.0, 0.0), kUnit, 0.0, 3.0) == 4.0);
  CHECK_THROWS_AS(eval_potential(PotentialSpec::free(), kUnit, NAN, 0.0), DomainError);
}

TEST_CASE("free potential is exactly zero with zero force") {
  const auto pot = PotentialSpec::free();
  for (double x : {-1e6, -1.0, 0.0, 3.0}) {
    CHECK(pot.value(kUnit, 12.0, x) == 0.0);
    CHECK(pot.gradient(kUnit, 12.0, x) == 0.0);
  }
}

TEST_CASE("property: analytic dV/dx matches a central difference") {
  const PhysicalConstants c{1.0, 1.7};
  const PotentialSpec pots[] = {
      PotentialSpec::harmonic(1.3),
      PotentialSpec::driven_harmonic(1.0, 0.1),
      PotentialSpec::moving_well(2.5, 0.5, 0.2, 0.7, 1.9),
  };
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(0.0, 10.0), ux(-5.0, 5.0);
  for (const auto& pot : pots) {
    for (int i = 0; i < 200; ++i) {
      const double t = ut(rng);
      const double x = ux(rng);
      const double h = 1e-6;
      const double fd = (pot.value(c, t, x + h) - pot.value(c, t, x - h)) / (2.0 * h);
      const double g = pot.gradient(c, t, x);
      CHECK(std::abs(fd - g) <= 1e-6 * std::max(1.0, std::abs(g)));
      CHECK(pot.value(c, t, x) == pot.value(c, t, x));
    }
  }
}

TEST_CASE("spatial grid") {
  const SpatialGrid g(-12.0, 12.0, 512);
  CHECK(g.dx() == doctest::Approx(24.0 / 511.0).epsilon(1e-15));
  CHECK(g.x(0) == -12.0);
  const double last = g.x(511);
  CHECK((last == 12.0 || std::nextafter(last, 12.0) == 12.0));
  CHECK_THROWS_AS(SpatialGrid(0.0, 1.0, 7), ValidationError);
  CHECK_THROWS_AS(SpatialGrid(1.0, 1.0, 64), ValidationError);
  CHECK_NOTHROW(SpatialGrid(0.0, 1.0, 100));
}

TEST_CASE("wavefunction invariants") {
  const SpatialGrid g(-1.0, 1.0, 8);
  std::vector<Complex> ok(8, Complex(1.0, 0.0));
  ok.front() = ok.back() = Complex{};
  CHECK_NOTHROW(Wavefunction(g, ok));

  auto bad_edge = ok;
  bad_edge.front() = Complex(1e-3, 0.0);
  CHECK_THROWS_AS(Wavefunction(g, bad_edge), ValidationError);

  auto bad_value = ok;
  bad_value[3] = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
  CHECK_THROWS_AS(Wavefunction(g, bad_value), ValidationError);

  CHECK_THROWS_AS(Wavefunction(g, std::vector<Complex>(5)), ValidationError);
}

TEST_CASE("prepare_gaussian") {
  const SpatialGrid g(-12.0, 12.0, 512);
  const auto psi = prepare_gaussian(g, {0.0, 1.0, 0.0}, kUnit);
  CHECK(std::abs(psi.norm() - 1.0) <= 1e-12);
  CHECK(psi[0] == Complex{});
  CHECK(psi[511] == Complex{});

  // <x> by direct quadrature.
  double mean = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) mean += std::norm(psi[j]) * g.x(j) * g.dx();
  CHECK(std::abs(mean) <= 1e-10);

  SUBCASE("support check") {
    CHECK_THROWS_AS(prepare_gaussian(g, {11.5, 1.0, 0.0}, kUnit), ValidationError);
    CHECK_THROWS_AS(prepare_gaussian(g, {0.0, 1.6, 0.0}, kUnit), ValidationError);
    CHECK_NOTHROW(prepare_gaussian(g, {4.0, 1.0, 2.0}, kUnit));
  }
  SUBCASE("norm property over random parameters") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
      const double w = 0.3 + 0.9 * u(rng);
      const double c0 = (u(rng) - 0.5) * (24.0 - 16.0 * w);
      const auto p = prepare_gaussian(g, {c0, w, 4.0 * (u(rng) - 0.5)}, kUnit);
      CHECK(std::abs(p.norm() - 1.0) <= 1e-12);
    }
  }
}
