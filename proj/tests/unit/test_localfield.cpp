#include "multibump/constants.hpp"
#include "multibump/errors.hpp"
#include "multibump/localfield.hpp"
#include "multibump/oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace multibump;

TEST_SUITE("localfield") {
  TEST_CASE("ground state matches the shooting level") {
    const auto w = WeightSpec::build(weights::step());
    LocalOptions o;
    o.cells_per_unit = 400;
    const auto b = ground_state(w, o);
    const double c = oracle::brute_ground_level(w).level;
    CHECK(b.level == doctest::Approx(c).epsilon(2e-5));
    CHECK(b.u.max_abs() == doctest::Approx(3.70814935460).epsilon(1e-4));
    CHECK(b.dleft == doctest::Approx(9.72298102768).epsilon(1e-3));
    CHECK(b.dright == doctest::Approx(-9.72298102768).epsilon(1e-3));
    CHECK(nehari_factor(b.u) == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("nehari projection lands on the constraint") {
    const auto w = WeightSpec::build(weights::step());
    auto g = Grid::build_span(w, 0.0, 1.0, 100);
    auto u = GridFunction::sample(g, [](double t) { return t * (1 - t) * (1 + t); });
    const auto p = nehari_project(u);
    CHECK(nehari_factor(p) == doctest::Approx(1.0).epsilon(1e-12));
    GridFunction zero(g);
    CHECK_THROWS_AS(nehari_factor(zero), DegenerateDirection);
  }

  TEST_CASE("principal eigenvalue of the constant weight") {
    const auto w = WeightSpec::build(weights::step());
    const auto e = principal_eigenvalue(w);
    const double pi = 3.14159265358979323846;
    CHECK(e.lambda1 == doctest::Approx(pi * pi).epsilon(1e-4));
    for (double v : e.eigenfunction.values) CHECK(v >= 0.0);
  }

  TEST_CASE("pinned level exceeds c and zeta satisfies the margin") {
    const auto w = WeightSpec::build(weights::step());
    const auto cd = compute_constants(w);
    CHECK(cd.pack.c < cd.pack.c_zeta);
    CHECK(cd.pack.zeta < (w.period() - w.tau()) / 2);
    CHECK(2 * w.sup_a_plus() * (cd.pack.c + cd.pack.c_zeta) * std::pow(cd.pack.zeta, 3) <= 0.9);
    CHECK(cd.pack.r * cd.pack.r < 4 * cd.pack.c);
  }

  TEST_CASE("single bump on one side realizes the pinned level") {
    const auto w = WeightSpec::build(weights::step());
    const auto p = pinned_zero_level(w, 0.2);
    const double c = oracle::brute_ground_level(w).level;
    CHECK(p.level == doctest::Approx(c / std::pow(0.8, 3)).epsilon(1e-3));
  }
}
