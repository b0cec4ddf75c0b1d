#include "multibump/localfield.hpp"

#include "multibump/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace multibump {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// Replace the rows and columns of pinned dofs by the identity.
void pin_matrix(SpMat& A, const std::vector<Eigen::Index>& pins) {
  if (pins.empty()) return;
  std::vector<char> mask(static_cast<std::size_t>(A.rows()), 0);
  for (auto p : pins) mask[static_cast<std::size_t>(p)] = 1;
  for (Eigen::Index k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      if (mask[static_cast<std::size_t>(it.row())] || mask[static_cast<std::size_t>(it.col())])
        it.valueRef() = it.row() == it.col() ? 1.0 : 0.0;
}

void pin_vector(Vec& v, const std::vector<Eigen::Index>& pins) {
  for (auto p : pins) v[p] = 0.0;
}

double plus_quartic(const GridFunction& u) { return quartic_integral(u, 0.0, 0, u.grid->cells()); }
double dirichlet_energy(const GridFunction& u) { return stiffness_integral(u, 0, u.grid->cells()); }

}  // namespace

int local_cells(double length, const LocalOptions& opts) {
  return std::max(8, static_cast<int>(std::ceil(opts.cells_per_unit * length - 1e-9)));
}

double nehari_factor(const GridFunction& u) {
  const double A = dirichlet_energy(u);
  const double B = plus_quartic(u);
  if (!(B > 1e-300) || !(B > 1e-14 * A * A)) throw DegenerateDirection("int a+ u^4 vanishes: no Nehari rescaling");
  return std::sqrt(A / B);
}

GridFunction nehari_project(const GridFunction& u) {
  const double s = nehari_factor(u);
  GridFunction out = u;
  for (double& v : out.values) v *= s;
  return out;
}

BumpProfile minimize_nehari(const GridPtr& grid, const std::vector<std::size_t>& pin_nodes,
                            const LocalOptions& opts, std::size_t dominant) {
  if (grid->periodic()) throw InputError("local problems need a Dirichlet grid");
  const Grid& g = *grid;
  std::vector<Eigen::Index> pins;
  for (auto k : pin_nodes) {
    if (k == 0 || k >= g.cells()) throw InputError("pin must be an interior node");
    pins.push_back(static_cast<Eigen::Index>(k) - 1);
  }

  // Start: positive bumps between consecutive zeros, one of them taller so
  // the descent leaves the symmetric saddle.
  std::vector<std::size_t> zeros{0};
  zeros.insert(zeros.end(), pin_nodes.begin(), pin_nodes.end());
  zeros.push_back(g.cells());
  std::sort(zeros.begin(), zeros.end());
  GridFunction u(grid);
  for (std::size_t z = 0; z + 1 < zeros.size(); ++z) {
    const double a = g.t(zeros[z]), b = g.t(zeros[z + 1]);
    const double height = z == dominant ? 1.0 : 0.6;
    for (std::size_t k = zeros[z]; k <= zeros[z + 1]; ++k)
      u[k] = height * std::sin(std::numbers::pi * (g.t(k) - a) / (b - a));
  }
  u[0] = 0.0;
  u[g.cells()] = 0.0;
  for (auto k : pin_nodes) u[k] = 0.0;
  u = nehari_project(u);

  SpMat K = weighted_operator(grid, 1.0, std::vector<double>(g.q_xi().size(), 0.0));
  pin_matrix(K, pins);
  Eigen::SimplicialLDLT<SpMat> Kinv(K);
  if (Kinv.info() != Eigen::Success) throw NonConvergence("stiffness factorization failed");

  auto reduced = [&](const GridFunction& v) {
    const double A = dirichlet_energy(v), B = plus_quartic(v);
    return A * A / (4.0 * B);
  };

  BumpProfile out;
  double F = reduced(u);
  for (int it = 0; it < opts.max_descent; ++it) {
    out.descent_iterations = it;
    const Vec x = to_dofs(u);
    const Vec Kx = K * x;
    Vec G = Kx - to_dofs(gradient(u, 0.0));
    pin_vector(G, pins);
    const double A = dirichlet_energy(u), B = plus_quartic(u);
    Vec grad = (A / B) * Kx - (A * A / (B * B)) * G;
    pin_vector(grad, pins);
    const Vec p = Kinv.solve(grad);
    const double dec = grad.dot(p);
    if (!(dec > 1e-16 * F * F)) break;
    double step = 1.0;
    bool moved = false;
    for (int back = 0; back < 40; ++back) {
      GridFunction trial = from_dofs(x - step * p, u);
      double Ft;
      try {
        Ft = reduced(trial);
      } catch (const Error&) {
        Ft = std::numeric_limits<double>::infinity();
      }
      if (std::isfinite(Ft) && Ft <= F - 1e-4 * step * dec) {
        u = nehari_project(trial);
        F = Ft;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }

  // Newton polish on K u - G(u) = 0.
  double res = 0.0;
  for (int it = 0; it <= opts.max_newton; ++it) {
    Vec R = to_dofs(gradient(u, 0.0));
    pin_vector(R, pins);
    res = R.lpNorm<Eigen::Infinity>();
    out.newton_iterations = it;
    if (res <= opts.newton_tol) break;
    if (it == opts.max_newton) break;
    SpMat J = jacobian(u, 0.0);
    pin_matrix(J, pins);
    Eigen::SparseLU<SpMat> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw NonConvergence("singular Jacobian in the local Newton polish");
    const Vec d = lu.solve(R);
    u = from_dofs(to_dofs(u) - d, u);
  }
  if (!(res <= opts.newton_tol))
    throw NonConvergence("local Newton residual " + std::to_string(res) + " above tolerance");

  double sum = 0.0;
  for (double v : u.values) sum += v;
  out.sign = 1;
  if (sum < 0.0) {
    for (double& v : u.values) v = -v;
  }
  out.u = u;
  out.level = 0.25 * dirichlet_energy(u);
  out.dleft = one_sided_derivative(u, 0.0, 0, Side::right);
  out.dright = one_sided_derivative(u, 0.0, g.cells(), Side::left);
  out.amplitude = u.max_abs();
  return out;
}

BumpProfile ground_state_on(const WeightSpec& w, double t0, double t1, const LocalOptions& opts) {
  if (!(t0 >= 0.0 && t1 <= w.tau() && t1 > t0)) throw InputError("local interval must lie in [0, tau]");
  return minimize_nehari(Grid::build_span(w, t0, t1, local_cells(t1 - t0, opts)), {}, opts);
}

BumpProfile ground_state(const WeightSpec& w, const LocalOptions& opts) {
  return ground_state_on(w, 0.0, w.tau(), opts);
}

PinnedLevel pinned_zero_level(const WeightSpec& w, double zeta, const LocalOptions& opts) {
  const double tau = w.tau();
  if (!(zeta > 0.0 && zeta < 0.5 * tau)) throw InputError("pinned level needs 0 < zeta < tau / 2");
  const int cells = local_cells(tau, opts);

  // A Nehari function vanishing at t_bar has level >= min of the two side
  // levels, with equality for one bump and a zero tail.
  struct Eval {
    double level;
    bool left;
  };
  auto eval = [&](double tb) {
    const auto l = minimize_nehari(Grid::build_span(w, 0.0, tb, cells), {}, opts).level;
    const auto r = minimize_nehari(Grid::build_span(w, tb, tau, cells), {}, opts).level;
    return l <= r ? Eval{l, true} : Eval{r, false};
  };

  constexpr int scan = 9;
  const double lo = zeta, hi = tau - zeta;
  std::vector<double> ts(scan);
  std::vector<Eval> vs;
  for (int k = 0; k < scan; ++k) {
    ts[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (scan - 1);
    vs.push_back(eval(ts[static_cast<std::size_t>(k)]));
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < vs.size(); ++k)
    if (vs[k].level < vs[best].level) best = k;

  double a = ts[best > 0 ? best - 1 : 0], b = ts[std::min(best + 1, ts.size() - 1)];
  double bt = ts[best];
  Eval bv = vs[best];
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  Eval f1 = eval(x1), f2 = eval(x2);
  for (int it = 0; it < 40 && b - a > 1e-10 * tau; ++it) {
    if (f1.level < f2.level) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - gr * (b - a); f1 = eval(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + gr * (b - a); f2 = eval(x2);
    }
  }
  if (f1.level < bv.level) bt = x1, bv = f1;
  if (f2.level < bv.level) bt = x2, bv = f2;

  PinnedLevel out;
  out.level = bv.level;
  out.t_bar = bt;
  out.bump_left = bv.left;
  out.bump = bv.left ? minimize_nehari(Grid::build_span(w, 0.0, bt, cells), {}, opts)
                     : minimize_nehari(Grid::build_span(w, bt, tau, cells), {}, opts);
  return out;
}

BumpProfile pinned_minimizer(const WeightSpec& w, double t_bar, const LocalOptions& opts) {
  const double tau = w.tau();
  if (!(t_bar > 0.0 && t_bar < tau)) throw InputError("pin must lie inside (0, tau)");
  auto grid = Grid::build_span(w, 0.0, tau, local_cells(tau, opts));
  const auto& x = grid->nodes();
  std::size_t k = static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), t_bar) - x.begin());
  if (k > 0 && std::abs(x[k - 1] - t_bar) < std::abs(x[k] - t_bar)) --k;
  k = std::clamp<std::size_t>(k, 1, grid->cells() - 1);

  // One start per dominant side; keep the lower level.
  BumpProfile best = minimize_nehari(grid, {k}, opts, 0);
  BumpProfile other = minimize_nehari(grid, {k}, opts, 1);
  return other.level < best.level ? other : best;
}

Eigenpair principal_eigenvalue(const WeightSpec& w, const LocalOptions& opts) {
  auto grid = Grid::build_span(w, 0.0, w.tau(), local_cells(w.tau(), opts));
  const Grid& g = *grid;
  const SpMat K = weighted_operator(grid, 1.0, std::vector<double>(g.q_xi().size(), 0.0));
  const SpMat M = weighted_operator(grid, 0.0, g.q_ap());
  Eigen::SimplicialLDLT<SpMat> Kinv(K);
  Vec phi = to_dofs(GridFunction::sample(grid, [&](double t) { return std::sin(std::numbers::pi * t / w.tau()); }));
  double lambda = 0.0;
  Eigenpair out;
  for (int it = 0; it < 1000; ++it) {
    Vec x = Kinv.solve(M * phi);
    x /= x.lpNorm<Eigen::Infinity>();
    const double next = x.dot(K * x) / x.dot(M * x);
    phi = x;
    out.iterations = it + 1;
    if (std::abs(next - lambda) <= 1e-15 * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  if (phi.sum() < 0.0) phi = -phi;
  out.lambda1 = lambda;
  out.eigenfunction = from_dofs(phi / phi.maxCoeff(), GridFunction(grid));
  return out;
}

}  // namespace multibump
