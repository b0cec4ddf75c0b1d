#include "multibump/verify.hpp"
#include "multibump/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace multibump;

TEST_SUITE("verify") {
  TEST_CASE("log-log fit recovers an exact power") {
    std::vector<double> x{1, 10, 100, 1000}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -1.0 / 3));
    const auto f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(-1.0 / 3).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.half_width <= 1e-10);
    CHECK_THROWS_AS(fit_loglog({1.0}, {1.0}), InputError);
    CHECK_THROWS_AS(fit_loglog({1.0, 2.0}, {1.0, -1.0}), InputError);
  }

  TEST_CASE("kendall tau") {
    CHECK(kendall_tau({1, 2, 3, 4}, {1, 2, 3, 4}) == 1.0);
    CHECK(kendall_tau({1, 2, 3, 4}, {4, 3, 2, 1}) == -1.0);
  }

  TEST_CASE("decay constant of the step weight") {
    const auto w = WeightSpec::build(weights::step());
    for (double d : {0.1, 0.25, 0.4}) CHECK(decay_constant(w, d) == doctest::Approx(std::pow(d * d / 2, -1.0 / 3)).epsilon(1e-12));
    CHECK_THROWS_AS(decay_constant(w, 0.6), InputError);
    CHECK_THROWS_AS(decay_constant(w, 0.0), InputError);
  }

  TEST_CASE("sweeps need two decades") {
    const auto w = WeightSpec::build(weights::step());
    const auto cd = compute_constants(w);
    const auto bump = window_bump(w, 100);
    const auto L = SymbolWindow::parse("1", true);
    CHECK_THROWS_AS(asymptotic_sweep(w, L, {10.0, 100.0}, cd.pack, bump), InsufficientSweep);
    CHECK_THROWS_AS(asymptotic_sweep(w, L, {10.0, 50.0, 99.0}, cd.pack, bump), InsufficientSweep);
    CHECK_THROWS_AS(asymptotic_sweep(w, L, {1000.0, 100.0, 10.0}, cd.pack, bump), InputError);
  }

  TEST_CASE("identities and decay on a certified solution") {
    const auto w = WeightSpec::build(weights::step());
    const auto cd = compute_constants(w);
    SolveOptions o;
    o.cells_per_interval = 400;
    const auto bump = window_bump(w, 400);
    const auto L = SymbolWindow::parse("10", true);
    const auto sol = solve_multibump(w, L, 1000.0, cd.pack, bump, o);
    const auto nr = nehari_identities(sol);
    CHECK(nr.local_abs <= 1e-6);
    CHECK(nr.global_abs <= 1e-6);
    CHECK(nr.cutoff_rel <= 1e-4);
    const auto ds = decay_sample(sol.u, 1000.0, 0.25);
    CHECK(ds.bound_holds);
    CHECK(ds.interior_max < ds.boundary_max);
    const auto ld = limit_distance(sol.u, 1000.0, bump, L);
    const auto ls = limit_distance(sol.u, 1000.0, bump, L, 0.5, true);
    CHECK(ld.holder == doctest::Approx(ls.holder).epsilon(1e-14));
    CHECK(ld.sup > 0.0);
    CHECK(ld.lipschitz >= ld.holder / 2);
    CHECK(oracle_residual(sol.u, 1000.0).max_rel <= 1e-4);
  }

  TEST_CASE("window cut-off wraps across the periodic cell") {
    const auto w = WeightSpec::build(weights::step());
    const auto g = Grid::build(w, 0, 4, 40, true);
    CHECK(window_cutoff(*g, 0, 0.5) == 1.0);
    CHECK(window_cutoff(*g, 0, 3.9) == doctest::Approx(cutoff(w, 0, -0.1)));
    CHECK(window_cutoff(*g, 1, 2.5) == 1.0);
  }
}
