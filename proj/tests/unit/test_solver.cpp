#include "multibump/solver.hpp"
#include "multibump/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace multibump;

namespace {
struct Fixture {
  WeightSpec w = WeightSpec::build(weights::step());
  LocalData cd = compute_constants(w);
  BumpProfile bump = window_bump(w, 200);
  SolveOptions opts = [] {
    SolveOptions o;
    o.cells_per_interval = 200;
    return o;
  }();
};
}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("symbol windows") {
    const auto a = SymbolWindow::parse("110", true);
    CHECK(a.period() == 3);
    CHECK(a.code(4) == 1);
    CHECK(a.code(-1) == 0);
    CHECK(a.zero_run() == 1);
    CHECK(SymbolWindow::parse("100", true).zero_run() == 2);
    CHECK(SymbolWindow::parse("1001", true).zero_run() == 2);
    const auto b = SymbolWindow::parse("10001", false);
    CHECK(b.N() == 2);
    CHECK(b.first() == -2);
    CHECK(b.zero_run() == 3);
    CHECK_THROWS_AS(b.code(3), IndexOutOfWindow);
    CHECK_THROWS_AS(SymbolWindow::parse("000", true), InputError);
    CHECK_THROWS_AS(SymbolWindow::parse("1x", true), InputError);
    CHECK_THROWS_AS(SymbolWindow::parse("10", false), InputError);
  }

  TEST_CASE("geometric schedule") {
    const auto s = geometric_schedule(10.0, 2.0, 100.0);
    CHECK(s.size() == 5u);
    CHECK(s.front() == 10.0);
    CHECK(s.back() >= 100.0);
  }

  TEST_CASE("initial guess pastes bumps on coded intervals") {
    Fixture f;
    const auto L = SymbolWindow::parse("10", true);
    const auto g = L.make_grid(f.w, 200);
    const auto u = initial_guess(f.w, L, f.bump, g);
    CHECK(u.at(0.5) == doctest::Approx(f.bump.u.at(0.5)));
    CHECK(u.at(2.5) == 0.0);
    CHECK(u.at(1.5) == 0.0);
  }

  TEST_CASE("periodic codes certify and keep their period") {
    Fixture f;
    for (const char* code : {"1", "10"}) {
      const auto L = SymbolWindow::parse(code, true);
      const auto sol = solve_multibump(f.w, L, 200.0, f.cd.pack, f.bump, f.opts);
      CHECK(sol.report.certified);
      CHECK(sol.report.positivity);
      CHECK(sol.report.residual_inf <= f.opts.newton_tol);
      for (const auto& iv : sol.report.intervals) CHECK(iv.large == (iv.code == 1));
      CHECK(minimal_period(sol.u, L.period()) == L.period());
      CHECK(!sol.report.continuation_path.empty());
      CHECK(sol.report.continuation_path.back().first == 200.0);
    }
  }

  TEST_CASE("membership of the pasted guess at large mu") {
    Fixture f;
    const auto L = SymbolWindow::parse("110", true);
    const auto sol = solve_multibump(f.w, L, 1000.0, f.cd.pack, f.bump, f.opts);
    const auto rep = check_membership(sol.u, 1000.0, f.cd.pack, L);
    CHECK(rep.dichotomy);
    CHECK(rep.c1);
    CHECK(rep.c4);
    for (const auto& iv : rep.intervals) CHECK((iv.energy > f.cd.pack.r * f.cd.pack.r) == (iv.code == 1));
  }

  TEST_CASE("continuation walks up in mu") {
    Fixture f;
    const auto L = SymbolWindow::parse("1", true);
    auto sol = solve_multibump(f.w, L, 50.0, f.cd.pack, f.bump, f.opts);
    const auto path = continue_solution(sol.u, 50.0, 800.0, f.opts);
    CHECK(path.back().first == 800.0);
    CHECK(to_dofs(gradient(sol.u, 800.0)).lpNorm<Eigen::Infinity>() <= f.opts.newton_tol);
  }

  TEST_CASE("bad inputs") {
    Fixture f;
    const auto L = SymbolWindow::parse("1", true);
    CHECK_THROWS_AS(solve_multibump(f.w, L, -1.0, f.cd.pack, f.bump, f.opts), InputError);
    CHECK_THROWS_AS(subharmonic(f.w, SymbolWindow::parse("1", false), 10.0, f.cd.pack, f.bump, f.opts), InputError);
  }
}
