#include "multibump/connection.hpp"
#include "multibump/errors.hpp"
#include "multibump/constants.hpp"
#include "multibump/verify.hpp"

#include <doctest.h>

#include <cmath>

using namespace multibump;

namespace {
struct Fixture {
  WeightSpec w = WeightSpec::build(weights::step());
  LocalData cd = compute_constants(w);
  ConnectionProblem problem(double x, double y, double mu) const {
    return {-1, 1, 1, x, y, mu, cd.pack.K, cd.pack.r};
  }
};
}  // namespace

TEST_SUITE("connection") {
  TEST_CASE("positive data give a positive block solution with signed sensitivities") {
    Fixture f;
    const auto p = f.problem(f.cd.pack.K / 2, f.cd.pack.K / 2, 1000.0);
    const auto s = solve_connection(f.w, p, {});
    CHECK(s.zeros == 0);
    CHECK(s.plus_energy.at(0) < p.r * p.r);
    CHECK(std::abs(s.sigma_values.at(0)) < p.K);
    const auto sg = sensitivity_signs(p, s);
    CHECK(sg.v_positive);
    CHECK(sg.v_decreasing);
    CHECK(sg.z_positive);
    CHECK(sg.z_increasing);
    CHECK(sg.far_slope_bound);
    CHECK(sg.combined_left_negative);
    CHECK(sg.combined_right_positive);
    const auto ed = energy_derivatives(f.w, p, s);
    CHECK(ed.rel_err_x <= 1e-5);
    CHECK(ed.rel_err_y <= 1e-5);
    const auto fc = sensitivity_fd_check(f.w, p, s);
    CHECK(fc.rel_err_v <= 1e-6);
    CHECK(fc.rel_err_z <= 1e-6);
  }

  TEST_CASE("minimum over the enclosed positivity interval is below sqrt(lambda1)") {
    Fixture f;
    const auto p = f.problem(f.cd.pack.K, f.cd.pack.K, 100.0);
    const auto s = solve_connection(f.w, p, {});
    const auto& g = *s.u.grid;
    const auto& iv = g.interval(0, true);
    double m = INFINITY;
    for (std::size_t k = iv.first; k <= iv.last; ++k) m = std::min(m, s.u[k]);
    CHECK(m > 0.0);
    CHECK(m <= std::sqrt(f.cd.lambda1));
  }

  TEST_CASE("opposite signs give one monotone crossing") {
    Fixture f;
    const auto s = solve_connection(f.w, f.problem(f.cd.pack.K, -f.cd.pack.K / 2, 1000.0), {});
    CHECK(s.zeros == 1);
    CHECK(s.monotone);
  }

  TEST_CASE("below threshold the amplitude cap becomes active") {
    Fixture f;
    CHECK_THROWS_AS(solve_connection(f.w, f.problem(f.cd.pack.K / 2, -f.cd.pack.K / 2, 10.0), {}), InteriorityFailure);
  }

  TEST_CASE("uniqueness over random starts") {
    Fixture f;
    double spread = 1.0;
    CHECK(uniqueness_probe(f.w, f.problem(1.0, 2.0, 1000.0), 5, 42, {}, &spread));
    CHECK(spread <= 1e-6);
  }

  TEST_CASE("trivial data give the zero solution") {
    Fixture f;
    const auto s = solve_connection(f.w, f.problem(0.0, 0.0, 100.0), {});
    CHECK(s.u.max_abs() == 0.0);
  }

  TEST_CASE("invalid problems") {
    Fixture f;
    auto p = f.problem(1.0, 1.0, 100.0);
    p.l = 2;
    CHECK_THROWS_AS(solve_connection(f.w, p, {}), InputError);
    p = f.problem(2 * f.cd.pack.K, 1.0, 100.0);
    CHECK_THROWS_AS(solve_connection(f.w, p, {}), InputError);
  }

  TEST_CASE("count_zeros") {
    const auto w = WeightSpec::build(weights::step());
    const auto g = Grid::build(w, 1, 2, 8, false);
    GridFunction u(g, {1, 0, 0, -1, -2, 0, 1, 1, 1});
    CHECK(count_zeros(u) == 2);
  }

  TEST_CASE("graded block agrees with multiple shooting") {
    Fixture f;
    ConnectionOptions o;
    o.cells_per_interval = 800;
    const auto p = f.problem(f.cd.pack.K / 4, f.cd.pack.K / 4, 10.0);
    const auto s = solve_connection(f.w, p, o);
    CHECK(block_oracle_residual(s.u, p.mu, 50).max_rel <= 1e-6);
  }
}
