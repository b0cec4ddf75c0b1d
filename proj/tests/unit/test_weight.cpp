#include "multibump/constants.hpp"
#include "multibump/errors.hpp"
#include "multibump/weight.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace multibump;

namespace {
const double pi = 3.14159265358979323846;
}

TEST_SUITE("weight") {
  TEST_CASE("sine and step weights validate") {
    const auto s = WeightSpec::build(weights::sine());
    CHECK(s.sup_a_plus() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.period() == doctest::Approx(2 * pi));
    const auto st = WeightSpec::build(weights::step());
    CHECK(st.sup_a_plus() == 1.0);
    CHECK(st.tau() == 1.0);
  }

  TEST_CASE("sign change inside the positivity interval is rejected") {
    CHECK_THROWS_AS(WeightSpec::build(weights::sine(pi / 2)), SignStructureViolation);
  }

  TEST_CASE("a- without mass at tau is rejected") {
    WeightDescription d;
    d.period = 2.0;
    d.tau = 1.0;
    d.pieces = {{0.0, 1.0, PieceKind::poly, {1.0}}, {1.0, 1.5, PieceKind::poly, {0.0}}, {1.5, 2.0, PieceKind::poly, {-1.0}}};
    CHECK_THROWS_AS(WeightSpec::build(d), EdgeMassViolation);
  }

  TEST_CASE("eval splits into a+ - mu a-") {
    const auto s = WeightSpec::build(weights::sine());
    CHECK(s.eval(10.0, pi / 2) == doctest::Approx(1.0));
    CHECK(s.eval(10.0, 3 * pi / 2) == doctest::Approx(-10.0));
    CHECK(s.eval(10.0, 3 * pi / 2 + 2 * pi) == doctest::Approx(-10.0));
  }

  TEST_CASE("periodicity is exact for polynomial data") {
    const auto w = WeightSpec::build(weights::step(1.0, 2.0, 1.5, 0.5));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> t(-10.0, 10.0);
    for (int k = 0; k < 500; ++k) {
      const double s = t(rng);
      CHECK(w.eval(7.0, s) == w.eval(7.0, s + w.period()));
      CHECK(w.eval(0.0, s) == w.a_plus(s));
      CHECK(w.a_plus(s) >= 0.0);
      CHECK(w.eval(3.0, s) == doctest::Approx(w.a_plus(s) - 3.0 * w.a_minus(s)));
    }
  }

  TEST_CASE("compute_r closed form") {
    CHECK(compute_r(WeightSpec::build(weights::sine())) == doctest::Approx(1.0 / std::sqrt(32 * pi * pi * pi)).epsilon(1e-9));
    CHECK(compute_r(WeightSpec::build(weights::sine())) == doctest::Approx(0.031746).epsilon(1e-4));
    CHECK(compute_r(WeightSpec::build(weights::step())) == doctest::Approx(1.0 / std::sqrt(32.0)).epsilon(1e-14));
    const auto w = WeightSpec::build(weights::step());
    CHECK(compute_r(w.scaled(4.0)) == doctest::Approx(compute_r(w) / 2).epsilon(1e-14));
  }

  TEST_CASE("integrals of a-") {
    const auto w = WeightSpec::build(weights::step());
    CHECK(w.integrate_minus(1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(w.integrate_minus(0.0, 6.0) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(w.integrate_plus(0.5, 1.5) == doctest::Approx(0.5).epsilon(1e-13));
    const auto s = WeightSpec::build(weights::sine());
    CHECK(s.integrate_minus(pi, 2 * pi) == doctest::Approx(2.0).epsilon(1e-10));
  }

  TEST_CASE("json round trip and malformed input") {
    const auto d = weights::step(1.0, 3.0);
    const auto back = weight_description_from_json(to_json(d));
    CHECK(back.period == 3.0);
    CHECK(back.pieces.size() == d.pieces.size());
    CHECK_THROWS_AS(weight_description_from_json(nlohmann::json{{"T", 2.0}}), InputError);
    nlohmann::json bad = to_json(d);
    bad["pieces"][0]["kind"] = "spline";
    CHECK_THROWS_AS(weight_description_from_json(bad), InputError);
    CHECK_THROWS_AS(load_weight_description("/nonexistent/weight.json"), InputError);
  }

  TEST_CASE("samples pieces interpolate linearly") {
    WeightDescription d;
    d.period = 3.0;
    d.tau = 1.0;
    d.pieces = {{0.0, 1.0, PieceKind::poly, {2.0}}, {1.0, 3.0, PieceKind::samples, {0.0, -1.0, -2.0, -1.0, 0.0}}};
    const auto w = WeightSpec::build(d);
    CHECK(w.a(1.25) == doctest::Approx(-0.5));
    CHECK(w.a(2.0) == doctest::Approx(-2.0));
    CHECK(w.integrate_minus(1.0, 3.0) == doctest::Approx(2.0).epsilon(1e-12));
  }
}
