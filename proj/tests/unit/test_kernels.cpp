#include "multibump/kernels.hpp"
#include "multibump/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace multibump;

TEST_SUITE("kernels") {
  TEST_CASE("serial and parallel kernels agree") {
    const auto w = WeightSpec::build(weights::step());
    const auto g = make_grid(w, 2, 300);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> u(g->node_count()), v(g->node_count());
    for (auto& x : u) x = d(rng);
    for (auto& x : v) x = d(rng);
    u.back() = u.front();
    v.back() = v.front();
    const double mu = 37.0;
    const double a = kernels::serial::action(*g, u, mu), b = kernels::parallel::action(*g, u, mu);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    std::vector<double> gs(u.size()), gp(u.size()), hs(u.size()), hp(u.size());
    kernels::serial::gradient(*g, u, mu, gs);
    kernels::parallel::gradient(*g, u, mu, gp);
    kernels::serial::hessian_apply(*g, u, mu, v, hs);
    kernels::parallel::hessian_apply(*g, u, mu, v, hp);
    double eg = 0, eh = 0, sg = 0, sh = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      eg = std::max(eg, std::abs(gs[k] - gp[k]));
      eh = std::max(eh, std::abs(hs[k] - hp[k]));
      sg = std::max(sg, std::abs(gs[k]));
      sh = std::max(sh, std::abs(hs[k]));
    }
    CHECK(eg <= 1e-12 * sg);
    CHECK(eh <= 1e-12 * sh);
  }

  TEST_CASE("holder seminorm: serial, parallel and a closed form") {
    std::vector<double> t(801), e(801);
    for (std::size_t k = 0; k < t.size(); ++k) {
      t[k] = k / 800.0;
      e[k] = std::sqrt(t[k]);
    }
    const auto s = kernels::serial::holder_seminorm(t, e, 0.5, 1e-12);
    const auto p = kernels::parallel::holder_seminorm(t, e, 0.5, 1e-12);
    CHECK(s.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.value == doctest::Approx(s.value).epsilon(1e-14));
    const auto l = kernels::parallel::holder_seminorm(t, e, 1.0, 1.0 / 800 * (1 - 1e-9));
    CHECK(l.value == doctest::Approx(std::sqrt(800.0)).epsilon(1e-9));
  }
}
