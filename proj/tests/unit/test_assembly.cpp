#include "multibump/assembly.hpp"
#include "multibump/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace multibump;

namespace {
GridFunction random_function(const GridPtr& g, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  const double a1 = n(rng), a2 = n(rng), a3 = n(rng);
  auto u = GridFunction::sample(g, [&](double t) {
    return scale * (a1 * std::sin(3.14159265358979 * t) + a2 * std::cos(2 * 3.14159265358979 * t) + a3);
  });
  if (g->periodic()) u.fold();
  else u[0] = u[u.size() - 1] = 0.0;
  return u;
}
}  // namespace

TEST_SUITE("assembly") {
  TEST_CASE("grid layout over I_N") {
    const auto w = WeightSpec::build(weights::step());
    const auto g = make_grid(w, 1, 40);
    CHECK(g->t_begin() == -2.0);
    CHECK(g->t_end() == 4.0);
    CHECK(g->cells() == 6u * 40u);
    CHECK(g->intervals().size() == 6u);
    CHECK(g->t(g->sigma_node(1)) == doctest::Approx(2.0));
    CHECK(g->t(g->tau_node(0)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(g->sigma_node(5), IndexOutOfWindow);
    CHECK(make_even_grid(w, 1, 40)->t_end() == 2.0);
  }

  TEST_CASE("end grading clusters nodes and keeps breakpoints") {
    const auto w = WeightSpec::build(weights::step());
    const auto u = Grid::build(w, -1, 4, 40, false);
    const auto gr = Grid::build(w, -1, 4, 40, false, 2.0);
    CHECK(gr->node_count() == u->node_count());
    CHECK(gr->h(0) < u->h(0) / 10);
    CHECK(gr->h(gr->cells() - 1) < u->h(0) / 10);
    CHECK(gr->t(40) == doctest::Approx(0.0));
    CHECK_THROWS_AS(Grid::build(w, 0, 4, 40, true, 2.0), InputError);
    CHECK_THROWS_AS(Grid::build(w, 0, 4, 40, false, 0.5), InputError);
  }

  TEST_CASE("gradient is the derivative of the action") {
    const auto w = WeightSpec::build(weights::step());
    for (bool periodic : {true, false}) {
      const auto g = periodic ? make_grid(w, 1, 50) : Grid::build(w, -1, 4, 50, false);
      const auto u = random_function(g, 1);
      const auto v = random_function(g, 2);
      const double mu = 5.0, eps = 1e-5;
      GridFunction up = u, um = u;
      for (std::size_t k = 0; k < u.size(); ++k) up[k] += eps * v[k], um[k] -= eps * v[k];
      const double fd = (action(up, mu) - action(um, mu)) / (2 * eps);
      const double an = to_dofs(gradient(u, mu)).dot(to_dofs(v));
      CHECK(fd == doctest::Approx(an).epsilon(1e-7));

      const auto gp = to_dofs(gradient(up, mu)), gm = to_dofs(gradient(um, mu));
      const Eigen::VectorXd hfd = (gp - gm) / (2 * eps);
      const Eigen::VectorXd h = to_dofs(hessian_apply(u, mu, v));
      CHECK((hfd - h).lpNorm<Eigen::Infinity>() <= 1e-6 * h.lpNorm<Eigen::Infinity>());
      const Eigen::VectorXd hj = jacobian(u, mu) * to_dofs(v);
      CHECK((hj - h).lpNorm<Eigen::Infinity>() <= 1e-12 * h.lpNorm<Eigen::Infinity>());
    }
  }

  TEST_CASE("energies and quartic integrals of simple functions") {
    const auto w = WeightSpec::build(weights::step());
    const auto g = make_grid(w, 0, 64);
    auto u = GridFunction::sample(g, [](double t) { return t > 0 && t < 1 ? t * (1 - t) : 0.0; });
    CHECK(interval_energy(u, 0, true) == doctest::Approx(1.0 / 3).epsilon(1e-3));
    CHECK(interval_energy(u, 0, false) == doctest::Approx(0.0));
    const auto& iv = g->interval(0, true);
    CHECK(quartic_integral(u, 0.0, iv.first, iv.last) == doctest::Approx(1.0 / 630).epsilon(1e-3));
    auto c = GridFunction::sample(g, [](double) { return 1.0; });
    CHECK(quartic_integral(c, 2.0, 0, g->node_count() - 1) == doctest::Approx(1.0 - 2.0).epsilon(1e-12));
  }

  TEST_CASE("cut-off is one on I+ and zero far away") {
    const auto w = WeightSpec::build(weights::step());
    CHECK(cutoff(w, 0, 0.5) == 1.0);
    CHECK(cutoff(w, 0, 1.5) == 0.0);
    CHECK(cutoff(w, 0, -0.5) == 0.0);
    CHECK(cutoff(w, 0, 1.125) == doctest::Approx(0.5));
    CHECK(cutoff(w, 1, 2.5) == 1.0);
    const double e = 1e-6;
    CHECK((cutoff(w, 0, 1.1 + e) - cutoff(w, 0, 1.1 - e)) / (2 * e) == doctest::Approx(cutoff_derivative(w, 0, 1.1)).epsilon(1e-6));
  }

  TEST_CASE("one-sided derivatives are exact on discrete solutions") {
    const auto w = WeightSpec::build(weights::step());
    const auto g = Grid::build(w, 1, 2, 64, false);
    GridFunction u(g);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = 1.0 + g->t(k);
    CHECK(one_sided_derivative(u, 0.0, 0, Side::right) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(one_sided_derivative(u, 0.0, u.size() - 1, Side::left) == doctest::Approx(1.0).epsilon(1e-12));
  }
}
