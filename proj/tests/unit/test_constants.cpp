#include "multibump/constants.hpp"
#include "multibump/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace multibump;

TEST_SUITE("constants") {
  TEST_CASE("rho dominates its explicit terms") {
    const auto w = WeightSpec::build(weights::step());
    const auto cd = compute_constants(w);
    const double K = cd.pack.K;
    CHECK(K == doctest::Approx(2 * cd.bump.amplitude));
    CHECK(cd.pack.rho >= 16 * 2 * K / (w.period() - w.tau()));
    CHECK(cd.pack.rho > std::abs(cd.bump.dleft) + std::abs(cd.bump.dright));
    CHECK(cd.pack.rho >= cd.pack.rho_bump);
    CHECK(bound_rho(w, cd.pack.c, cd.pack.c_zeta, 1.0) >= 32.0);
  }

  TEST_CASE("K override is honored") {
    const auto w = WeightSpec::build(weights::step());
    ConstantOptions o;
    o.K = 1.0;
    const auto cd = compute_constants(w, o);
    CHECK(cd.pack.K == 1.0);
    CHECK(cd.pack.r * cd.pack.r == doctest::Approx(1.0 / 32));
  }

  TEST_CASE("sine weight constants") {
    const auto w = WeightSpec::build(weights::sine());
    const auto cd = compute_constants(w);
    CHECK(cd.pack.c < cd.pack.c_zeta);
    CHECK(2 * (cd.pack.c + cd.pack.c_zeta) * std::pow(cd.pack.zeta, 3) <= 0.9);
  }
}
