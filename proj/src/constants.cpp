#include "multibump/constants.hpp"

#include "multibump/errors.hpp"

#include <algorithm>
#include <cmath>

namespace multibump {

double compute_r(const WeightSpec& w) {
  const double tau = w.tau();
  return 1.0 / std::sqrt(32.0 * w.sup_a_plus() * tau * tau * tau);
}

ZetaChoice choose_zeta(const WeightSpec& w, double c, const LocalOptions& opts) {
  const double tau = w.tau();
  const double h = tau / local_cells(tau, opts);
  ZetaChoice out;
  out.c = c;
  double zeta = std::min(0.25 * (w.period() - tau), 0.25 * tau);
  for (int halvings = 0;; ++halvings) {
    if (zeta < 4.0 * h) throw NoAdmissibleZeta("zeta fell below the mesh resolution");
    const auto pinned = pinned_zero_level(w, zeta, opts);
    const double lhs = 2.0 * w.sup_a_plus() * (c + pinned.level) * zeta * zeta * zeta;
    if (lhs <= 0.9) {
      out.zeta = zeta;
      out.c_zeta = pinned.level;
      out.t_bar = pinned.t_bar;
      out.halvings = halvings;
      out.margin = 1.0 - lhs;
      return out;
    }
    zeta *= 0.5;
  }
}

double bound_rho(const WeightSpec& w, double c, double c_zeta, double K) {
  const double tau = w.tau();
  const double E = 2.0 * (c + c_zeta);
  // p, q affine with unit jump: ||p'||_2 = ||q'||_2 = tau^{-1/2}, |p|, |q| <= 1,
  // and |u| <= 1 + sqrt(tau E) on [0, tau].
  const double kinetic = std::sqrt(E) / std::sqrt(tau);
  const double amp = 1.0 + std::sqrt(tau * E);
  const double cubic = w.sup_a_plus() * tau * amp * amp * amp;
  return 16.0 * (2.0 * K / (w.period() - tau) + 2.0 * (kinetic + cubic));
}

double bump_rho(const WeightSpec& w, const BumpProfile& bump, double K) {
  return 16.0 * (2.0 * K / (w.period() - w.tau()) + std::abs(bump.dleft) + std::abs(bump.dright));
}

LocalData compute_constants(const WeightSpec& w, const ConstantOptions& opts) {
  LocalData d;
  d.bump = ground_state(w, opts.local);
  auto& p = d.pack;
  p.c = d.bump.level;
  p.r = compute_r(w);
  const auto z = choose_zeta(w, p.c, opts.local);
  p.zeta = z.zeta;
  p.c_zeta = z.c_zeta;
  p.t_bar = z.t_bar;
  p.zeta_halvings = z.halvings;
  p.K = opts.K.value_or(2.0 * d.bump.amplitude);
  if (!(p.K > 0.0)) throw InputError("K must be positive");
  p.k = opts.k;
  p.rho = bound_rho(w, p.c, p.c_zeta, p.K);
  p.rho_bump = bump_rho(w, d.bump, p.K);
  d.lambda1 = principal_eigenvalue(w, opts.local).lambda1;
  return d;
}

nlohmann::json to_json(const ConstantPack& p) {
  return {{"r", p.r},           {"r2", p.r * p.r}, {"zeta", p.zeta},   {"K", p.K},
          {"rho", p.rho},       {"rho_bump", p.rho_bump}, {"k", p.k}, {"c", p.c},
          {"c_zeta", p.c_zeta}, {"t_bar", p.t_bar}, {"zeta_halvings", p.zeta_halvings}};
}

}  // namespace multibump
