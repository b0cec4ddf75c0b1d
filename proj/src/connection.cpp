#include "multibump/connection.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <random>

namespace multibump {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

void ConnectionProblem::validate() const {
  if (l < 0) throw InputError("l must be >= 0");
  if (l > k_bound) throw InputError("l exceeds the bound k");
  if (!(K > 0.0)) throw InputError("K must be positive");
  if (!(r > 0.0)) throw InputError("r must be positive");
  if (!(mu > 0.0)) throw InputError("mu must be positive");
  if (!(std::abs(x) <= K) || !(std::abs(y) <= K)) throw InputError("boundary data exceed K");
}

GridPtr connection_grid(const WeightSpec& w, const ConnectionProblem& p, int cells_per_interval, double end_grading) {
  return Grid::build(w, 2 * p.i + 1, 2 * (p.i + p.l + 1), cells_per_interval, false, end_grading);
}

namespace {

struct Caps {
  std::vector<double> energy, sigma;
};

Caps measure_caps(const GridFunction& u) {
  Caps c;
  for (const auto& iv : u.grid->intervals()) {
    if (!iv.plus) continue;
    c.energy.push_back(stiffness_integral(u, iv.first, iv.last));
    c.sigma.push_back(u[iv.first]);
  }
  return c;
}

bool feasible(const GridFunction& u, const ConnectionProblem& p) {
  const Caps c = measure_caps(u);
  for (double e : c.energy)
    if (!(e <= p.r * p.r)) return false;
  for (double s : c.sigma)
    if (!(std::abs(s) <= p.K)) return false;
  return true;
}

// Decaying profiles x / (1 + |x| int sqrt(mu a- / 2)) that solve u'' = mu a- u^3
// exactly for constant a-, entering from each end of the block.
GridFunction default_start(const GridPtr& g, const ConnectionProblem& p) {
  GridFunction u(g);
  const WeightSpec& w = g->weight();
  const std::size_t n = u.size() - 1;
  std::vector<double> from_left(n + 1, 0.0), from_right(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const double tm = 0.5 * (g->t(k) + g->t(k - 1));
    from_left[k] = from_left[k - 1] + std::sqrt(0.5 * p.mu * w.a_minus(tm)) * g->h(k - 1);
  }
  for (std::size_t k = n; k-- > 0;) {
    const double tm = 0.5 * (g->t(k) + g->t(k + 1));
    from_right[k] = from_right[k + 1] + std::sqrt(0.5 * p.mu * w.a_minus(tm)) * g->h(k);
  }
  const auto& a = g->intervals().front();
  const auto& b = g->intervals().back();
  for (std::size_t k = 0; k <= n; ++k) {
    double v = 0.0;
    if (k <= a.last) v += p.x / (1.0 + std::abs(p.x) * from_left[k]) * (g->t(a.last) - g->t(k)) / (g->t(a.last) - g->t(a.first));
    if (k >= b.first) v += p.y / (1.0 + std::abs(p.y) * from_right[k]) * (g->t(k) - g->t(b.first)) / (g->t(b.last) - g->t(b.first));
    u[k] = v;
  }
  u[0] = p.x;
  u[n] = p.y;
  return u;
}

std::size_t last_node(const GridFunction& u) { return u.size() - 1; }

}  // namespace

int count_zeros(const GridFunction& u) {
  int zeros = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k] == 0.0) {
      if (k == 0 || u[k - 1] != 0.0) ++zeros;
    } else if (k > 0 && u[k - 1] != 0.0 && (u[k] > 0.0) != (u[k - 1] > 0.0)) {
      ++zeros;
    }
  }
  return zeros;
}

std::pair<GridFunction, GridFunction> sensitivities(const GridFunction& u, double mu) {
  const Grid& g = *u.grid;
  if (g.periodic()) throw InputError("sensitivities need a Dirichlet block grid");
  const double len = g.t_end() - g.t_begin();
  GridFunction v0(u.grid), z0(u.grid);
  for (std::size_t k = 0; k < u.size(); ++k) {
    v0[k] = (g.t_end() - g.t(k)) / len;
    z0[k] = 1.0 - v0[k];
  }
  v0[0] = 1.0;
  v0[last_node(u)] = 0.0;
  z0[0] = 0.0;
  z0[last_node(u)] = 1.0;
  const SpMat J = jacobian(u, mu);
  Eigen::SparseLU<SpMat> lu;
  lu.compute(J);
  if (lu.info() != Eigen::Success) throw SingularLinearization("linearized block operator is singular");
  auto solve = [&](const GridFunction& base) {
    const Vec rhs = -to_dofs(hessian_apply(u, mu, base));
    const Vec w = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !w.allFinite())
      throw SingularLinearization("linearized solve failed");
    const double res = (J * w - rhs).lpNorm<Eigen::Infinity>();
    if (res > 1e-8 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()) || w.lpNorm<Eigen::Infinity>() > 1e12)
      throw SingularLinearization("linearized block operator is numerically singular");
    return from_dofs(to_dofs(base) + w, base);
  };
  return {solve(v0), solve(z0)};
}

std::pair<double, double> linear_end_slopes(const GridFunction& u, double mu, const GridFunction& v) {
  const GridFunction Hv = hessian_apply(u, mu, v);
  return {-Hv[0], Hv[last_node(u)]};
}

ConnectionSolution solve_connection(const WeightSpec& w, const ConnectionProblem& p, const ConnectionOptions& opts,
                                    std::optional<GridFunction> start) {
  p.validate();
  GridPtr g = start ? start->grid : connection_grid(w, p, opts.cells_per_interval, opts.end_grading);
  GridFunction u = start ? *start : default_start(g, p);
  u[0] = p.x;
  u[last_node(u)] = p.y;
  if (!feasible(u, p)) throw InputError("the starting function violates a cap");

  const SpMat P = weighted_operator(g, 1.0, std::vector<double>(g->q_w().size(), 0.0));
  Eigen::SimplicialLDLT<SpMat> pre;
  pre.compute(P);
  if (pre.info() != Eigen::Success) throw NonConvergence("stiffness factorization failed");

  ConnectionSolution sol;
  double J0 = action(u, p.mu);
  bool converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    sol.iterations = it;
    const Vec gr = to_dofs(gradient(u, p.mu));
    const double gnorm = gr.lpNorm<Eigen::Infinity>();
    if (gnorm <= opts.tol) {
      converged = true;
      break;
    }
    Vec d;
    bool newton = false;
    {
      Eigen::SimplicialLDLT<SpMat> ldlt;
      ldlt.compute(jacobian(u, p.mu));
      if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
        d = -ldlt.solve(gr);
        newton = d.allFinite();
      }
    }
    if (!newton) d = -pre.solve(gr);
    const Vec x = to_dofs(u);
    const double slope = gr.dot(d);
    const bool polish = newton && (gnorm < 1e-6 || -slope <= 1e-12 * std::max(1.0, std::abs(J0)));
    double step = 1.0;
    bool moved = false, blocked = false;
    for (int back = 0; back < 60; ++back, step *= 0.5) {
      GridFunction trial = from_dofs(x + step * d, u);
      if (!feasible(trial, p)) {
        blocked = true;
        continue;
      }
      const double Jt = action(trial, p.mu);
      if (polish || Jt <= J0 + 1e-4 * step * slope) {
        u = std::move(trial);
        J0 = Jt;
        moved = true;
        break;
      }
    }
    if (newton) ++sol.newton_steps;
    if (!moved) {
      if (blocked) throw InteriorityFailure("a cap blocks descent at mu = " + std::to_string(p.mu));
      if (newton && d.lpNorm<Eigen::Infinity>() <= 1e-14 * std::max(1.0, u.max_abs())) {
        converged = true;
        break;
      }
      throw NonConvergence("block descent stalled at mu = " + std::to_string(p.mu));
    }
    if (blocked && step < 1e-10) throw InteriorityFailure("a cap is active at mu = " + std::to_string(p.mu));
    if (newton && !blocked && d.lpNorm<Eigen::Infinity>() <= 1e-10 * std::max(1.0, u.max_abs())) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NonConvergence("block solve did not converge at mu = " + std::to_string(p.mu));

  const Caps caps = measure_caps(u);
  for (double e : caps.energy)
    if (e >= p.r * p.r * (1.0 - opts.cap_margin))
      throw InteriorityFailure("the energy cap is active at mu = " + std::to_string(p.mu));
  for (double s : caps.sigma)
    if (std::abs(s) >= p.K * (1.0 - opts.cap_margin))
      throw InteriorityFailure("the amplitude cap is active at mu = " + std::to_string(p.mu));

  sol.u = u;
  sol.plus_energy = caps.energy;
  sol.sigma_values = caps.sigma;
  sol.action = J0;
  sol.slope_left = one_sided_derivative(u, p.mu, 0, Side::right);
  sol.slope_right = one_sided_derivative(u, p.mu, last_node(u), Side::left);
  sol.zeros = count_zeros(u);
  bool pos = true, neg = true;
  for (std::size_t c = 0; c < g->cells(); ++c) {
    pos = pos && u[c + 1] > u[c];
    neg = neg && u[c + 1] < u[c];
  }
  sol.monotone = pos || neg;
  std::tie(sol.v, sol.z) = sensitivities(u, p.mu);
  return sol;
}

EnergyDerivatives energy_derivatives(const WeightSpec& w, const ConnectionProblem& p, const ConnectionSolution& sol,
                                     const ConnectionOptions& opts, std::optional<double> h) {
  EnergyDerivatives d;
  d.dJdx = -sol.slope_left;
  d.dJdy = sol.slope_right;
  const double step = h.value_or(1e-4 * std::max(p.K, 1.0));
  ConnectionOptions o = opts;
  o.tol = std::min(opts.tol, 1e-13);
  o.cap_margin = 0.0;
  auto value = [&](double dx, double dy) {
    ConnectionProblem q = p;
    q.x += dx;
    q.y += dy;
    q.K = std::max(p.K, std::max(std::abs(q.x), std::abs(q.y)));
    GridFunction s = sol.u;
    s[0] = q.x;
    s[last_node(s)] = q.y;
    return solve_connection(w, q, o, s).action;
  };
  d.fd_dJdx = (value(step, 0.0) - value(-step, 0.0)) / (2.0 * step);
  d.fd_dJdy = (value(0.0, step) - value(0.0, -step)) / (2.0 * step);
  auto rel = [](double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s > 0.0 ? std::abs(a - b) / s : 0.0;
  };
  d.rel_err_x = rel(d.dJdx, d.fd_dJdx);
  d.rel_err_y = rel(d.dJdy, d.fd_dJdy);
  return d;
}

SensitivityCheck sensitivity_fd_check(const WeightSpec& w, const ConnectionProblem& p, const ConnectionSolution& sol,
                                      const ConnectionOptions& opts, double h_rel) {
  const double h = h_rel * p.K;
  ConnectionOptions o = opts;
  o.tol = std::min(opts.tol, 1e-13);
  o.cap_margin = 0.0;
  auto solve_at = [&](double dx, double dy) {
    ConnectionProblem q = p;
    q.x += dx;
    q.y += dy;
    q.K = std::max(p.K, std::max(std::abs(q.x), std::abs(q.y)));
    GridFunction s = sol.u;
    s[0] = q.x;
    s[last_node(s)] = q.y;
    return solve_connection(w, q, o, s).u;
  };
  auto err = [&](const GridFunction& plus, const GridFunction& minus, const GridFunction& exact) {
    double e = 0.0;
    for (std::size_t k = 0; k < exact.size(); ++k)
      e = std::max(e, std::abs((plus[k] - minus[k]) / (2.0 * h) - exact[k]));
    return e / exact.max_abs();
  };
  SensitivityCheck c;
  c.rel_err_v = err(solve_at(h, 0.0), solve_at(-h, 0.0), sol.v);
  c.rel_err_z = err(solve_at(0.0, h), solve_at(0.0, -h), sol.z);
  return c;
}

SensitivitySigns sensitivity_signs(const ConnectionProblem& p, const ConnectionSolution& sol) {
  SensitivitySigns s;
  const auto& v = sol.v;
  const auto& z = sol.z;
  const std::size_t n = v.size() - 1;
  s.v_positive = s.v_decreasing = s.z_positive = s.z_increasing = true;
  for (std::size_t k = 0; k < n; ++k) {
    s.v_positive = s.v_positive && v[k] > 0.0;
    s.z_positive = s.z_positive && z[k + 1] > 0.0;
    s.v_decreasing = s.v_decreasing && v[k + 1] < v[k];
    s.z_increasing = s.z_increasing && z[k + 1] > z[k];
  }
  std::tie(s.dv_left, s.dv_right) = linear_end_slopes(sol.u, p.mu, v);
  std::tie(s.dz_left, s.dz_right) = linear_end_slopes(sol.u, p.mu, z);
  const Grid& g = *sol.u.grid;
  const double len = g.t_end() - g.t_begin();
  s.far_slope_bound = std::abs(s.dv_right) <= 2.0 / len && std::abs(s.dz_left) <= 2.0 / len;
  double slope_sup = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c)
    slope_sup = std::max(slope_sup, std::abs(sol.u[c + 1] - sol.u[c]) / g.h(c));
  s.near_bound_margin = 2.0 * p.K / len + 5.0 * slope_sup -
                        std::max(std::abs(p.x * s.dv_left), std::abs(p.y * s.dz_right));
  s.combined_left_negative = s.dv_left + s.dz_left < 0.0;
  s.combined_right_positive = s.dv_right + s.dz_right > 0.0;
  return s;
}

bool uniqueness_probe(const WeightSpec& w, const ConnectionProblem& p, int n_starts, std::uint64_t seed,
                      const ConnectionOptions& opts, double* spread) {
  if (n_starts < 1) throw InputError("n_starts must be >= 1");
  p.validate();
  const GridPtr g = connection_grid(w, p, opts.cells_per_interval, opts.end_grading);
  const GridFunction base = default_start(g, p);
  const double len = g->t_end() - g->t_begin();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);

  std::vector<GridFunction> found;
  for (int s = 0; s < n_starts; ++s) {
    GridFunction start = base;
    if (s > 0) {
      double c[4];
      for (double& ci : c) ci = coef(rng);
      double amp = 0.5 * p.K;
      for (int tries = 0; tries < 60; ++tries, amp *= 0.5) {
        GridFunction trial = base;
        for (std::size_t k = 1; k + 1 < trial.size(); ++k) {
          const double phase = M_PI * (g->t(k) - g->t_begin()) / len;
          for (int m = 0; m < 4; ++m) trial[k] += amp * c[m] * std::sin((m + 1) * phase);
        }
        if (feasible(trial, p)) {
          start = std::move(trial);
          break;
        }
      }
    }
    found.push_back(solve_connection(w, p, opts, start).u);
  }
  double worst = 0.0;
  for (const auto& f : found)
    for (std::size_t k = 0; k < f.size(); ++k) worst = std::max(worst, std::abs(f[k] - found.front()[k]));
  if (spread) *spread = worst;
  return worst <= 1e-6;
}

nlohmann::json to_json(const ConnectionSolution& s) {
  return {{"slope_left", s.slope_left},     {"slope_right", s.slope_right}, {"action", s.action},
          {"iterations", s.iterations},     {"newton_steps", s.newton_steps}, {"zeros", s.zeros},
          {"monotone", s.monotone},         {"plus_energy", s.plus_energy}, {"sigma_values", s.sigma_values}};
}

}  // namespace multibump
