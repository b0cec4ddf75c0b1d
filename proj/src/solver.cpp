#include "multibump/solver.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace multibump {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

SymbolWindow SymbolWindow::from(std::vector<int> symbols, bool periodic, int N) {
  if (symbols.empty()) throw InputError("empty symbol window");
  for (int s : symbols)
    if (s != 0 && s != 1) throw InputError("symbols must be 0 or 1");
  if (std::none_of(symbols.begin(), symbols.end(), [](int s) { return s == 1; }))
    throw InputError("the code needs at least one 1");
  if (!periodic) {
    if (N < 0) throw InputError("N must be >= 0");
    if (static_cast<int>(symbols.size()) != 2 * N + 1)
      throw InputError("a non-periodic window needs 2N + 1 symbols");
  }
  SymbolWindow w;
  w.symbols_ = std::move(symbols);
  w.periodic_ = periodic;
  w.N_ = periodic ? 0 : N;
  return w;
}

SymbolWindow SymbolWindow::parse(const std::string& s, bool periodic, int N) {
  std::vector<int> v;
  for (char ch : s) {
    if (ch == '0' || ch == '1') v.push_back(ch - '0');
    else if (ch != ',' && ch != ' ') throw InputError(std::string("bad symbol '") + ch + "'");
  }
  if (!periodic && N == 0 && !v.empty() && v.size() % 2 == 1) N = static_cast<int>(v.size() / 2);
  return from(std::move(v), periodic, N);
}

int SymbolWindow::code(int i) const {
  if (periodic_) {
    const int m = period();
    return symbols_[static_cast<std::size_t>(((i % m) + m) % m)];
  }
  if (i < -N_ || i > N_) throw IndexOutOfWindow("code index " + std::to_string(i) + " outside the window");
  return symbols_[static_cast<std::size_t>(i + N_)];
}

int SymbolWindow::zero_run() const {
  const int n = period();
  int best = 0, run = 0;
  const int span = periodic_ ? 2 * n : n;
  for (int k = 0; k < span; ++k) {
    if (symbols_[static_cast<std::size_t>(k % n)] == 0) best = std::max(best, ++run);
    else run = 0;
  }
  return std::min(best, n);
}

std::string SymbolWindow::str() const {
  std::string s;
  for (int v : symbols_) s += static_cast<char>('0' + v);
  return s;
}

GridPtr SymbolWindow::make_grid(const WeightSpec& w, int cells_per_interval) const {
  if (periodic_) return Grid::build(w, 0, 2 * period(), cells_per_interval, true);
  return multibump::make_grid(w, N_, cells_per_interval);
}

BumpProfile window_bump(const WeightSpec& w, int cells, const LocalOptions& opts) {
  return minimize_nehari(Grid::build_span(w, 0.0, w.tau(), cells), {}, opts);
}

GridFunction initial_guess(const WeightSpec& w, const SymbolWindow& L, const BumpProfile& bump, const GridPtr& grid) {
  GridFunction u(grid);
  const std::size_t m = bump.u.size() - 1;
  for (const auto& iv : grid->intervals()) {
    if (!iv.plus || L.code(iv.index) != 1) continue;
    if (iv.last - iv.first == m) {
      for (std::size_t k = 0; k <= m; ++k) u[iv.first + k] = bump.u[k];
    } else {
      for (std::size_t k = iv.first; k <= iv.last; ++k) u[k] = bump.u.at(grid->t(k) - w.sigma(iv.index));
    }
  }
  u.fold();
  return u;
}

int newton_solve(GridFunction& u, double mu, double tol, int max_iter) {
  Vec x = to_dofs(u);
  Vec R = to_dofs(gradient(u, mu));
  double rn = R.squaredNorm();
  for (int it = 0; it < max_iter; ++it) {
    if (R.lpNorm<Eigen::Infinity>() <= tol) return it;
    SpMat J = jacobian(u, mu);
    Eigen::SparseLU<SpMat> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw NewtonFailure("singular Jacobian at mu = " + std::to_string(mu));
    const Vec d = lu.solve(R);
    if (!d.allFinite()) throw NewtonFailure("non-finite Newton step at mu = " + std::to_string(mu));
    const bool undamped = R.lpNorm<Eigen::Infinity>() < 1e-4;
    double step = 1.0;
    bool moved = false;
    for (int back = 0; back < 30; ++back) {
      GridFunction trial = from_dofs(x - step * d, u);
      trial.fold();
      const Vec Rt = to_dofs(gradient(trial, mu));
      const double rt = Rt.squaredNorm();
      if (undamped || rt <= (1.0 - 2e-4 * step) * rn) {
        u = std::move(trial);
        x = to_dofs(u);
        R = Rt;
        rn = rt;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) throw NewtonFailure("line search stalled at mu = " + std::to_string(mu));
  }
  if (R.lpNorm<Eigen::Infinity>() <= tol) return max_iter;
  throw NewtonFailure("Newton did not converge at mu = " + std::to_string(mu));
}

std::vector<std::pair<double, int>> continue_solution(GridFunction& u, double mu_from, double mu_to,
                                                      const SolveOptions& opts) {
  std::vector<std::pair<double, int>> path;
  double g = opts.growth;
  double done = mu_from;
  int refinements = 0;
  while (done < mu_to) {
    double mu = std::min(mu_to, done * g);
    if (mu_to - mu <= 1e-12 * mu_to) mu = mu_to;
    GridFunction trial = u;
    try {
      path.emplace_back(mu, newton_solve(trial, mu, opts.newton_tol, opts.max_newton));
      u = std::move(trial);
      done = mu;
    } catch (const NewtonFailure&) {
      if (++refinements > opts.max_refinements)
        throw ContinuationBreakdown("continuation failed beyond mu = " + std::to_string(done));
      g = std::sqrt(g);
    }
  }
  return path;
}

SolveReport check_membership(const GridFunction& u, double mu, const ConstantPack& consts, const SymbolWindow& L) {
  const Grid& g = *u.grid;
  const WeightSpec& w = g.weight();
  SolveReport rep;
  rep.mu = mu;
  rep.residual_inf = to_dofs(gradient(u, mu)).lpNorm<Eigen::Infinity>();
  const double r2 = consts.r * consts.r;
  const double upper = 2.0 * (consts.c + consts.c_zeta);

  rep.min_value = std::numeric_limits<double>::infinity();
  for (double v : u.values) rep.min_value = std::min(rep.min_value, v);
  rep.positivity = rep.min_value > 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c)
    rep.slope_sup = std::max(rep.slope_sup, std::abs(u[c + 1] - u[c]) / g.h(c));

  for (const auto& iv : g.intervals()) {
    if (!iv.plus) continue;
    IntervalFlags f;
    f.index = iv.index;
    f.code = L.code(iv.index);
    f.energy = stiffness_integral(u, iv.first, iv.last);
    f.tie = f.energy == r2;
    f.large = f.energy >= r2;
    if (g.has_interval(iv.index, false)) {
      const auto& mi = g.interval(iv.index, false);
      f.minus_energy = stiffness_integral(u, mi.first, mi.last);
      for (std::size_t k = mi.first; k <= mi.last; ++k) f.minus_sup = std::max(f.minus_sup, std::abs(u[k]));
      f.c3 = f.minus_sup < consts.K;
    }
    if (f.code == 1) {
      f.c1 = f.energy > r2 && f.energy < upper;
      const double lo = w.sigma(iv.index) + consts.zeta, hi = w.tau_i(iv.index) - consts.zeta;
      for (std::size_t k = iv.first; k <= iv.last; ++k)
        if (g.t(k) >= lo && g.t(k) <= hi && !(u[k] > 0.0)) f.c2 = false;
      const std::size_t ks = iv.first, kt = iv.last;
      f.d_sigma_left = one_sided_derivative(u, mu, ks, Side::left);
      f.d_tau_right = one_sided_derivative(u, mu, kt, Side::right);
      const double rho = consts.rho;
      if (u[ks] >= 0.0 && !(f.d_sigma_left < rho)) f.c4 = false;
      if (u[ks] <= 0.0 && !(f.d_sigma_left > -rho)) f.c4 = false;
      if (u[kt] >= 0.0 && !(f.d_tau_right > -rho)) f.c4 = false;
      if (u[kt] <= 0.0 && !(f.d_tau_right < rho)) f.c4 = false;
    } else {
      f.c1 = f.energy < r2;
    }
    rep.c1 = rep.c1 && f.c1;
    rep.c2 = rep.c2 && f.c2;
    rep.c3 = rep.c3 && f.c3;
    rep.c4 = rep.c4 && f.c4;
    rep.tie_flag = rep.tie_flag || f.tie;
    rep.dichotomy = rep.dichotomy && (f.large == (f.code == 1));
    rep.intervals.push_back(f);
  }
  if (!rep.c1) rep.failures.emplace_back("C1");
  if (!rep.c2) rep.failures.emplace_back("C2");
  if (!rep.c3) rep.failures.emplace_back("C3");
  if (!rep.c4) rep.failures.emplace_back("C4");
  if (!rep.positivity) rep.failures.emplace_back("positivity");
  if (!rep.dichotomy) rep.failures.emplace_back("dichotomy");
  rep.certified = rep.failures.empty();
  return rep;
}

nlohmann::json to_json(const SolveReport& r) {
  nlohmann::json iv = nlohmann::json::array();
  for (const auto& f : r.intervals)
    iv.push_back({{"i", f.index},
                  {"code", f.code},
                  {"energy", f.energy},
                  {"minus_energy", f.minus_energy},
                  {"class", f.large ? "large" : "small"},
                  {"tie", f.tie},
                  {"C1", f.c1},
                  {"C2", f.c2},
                  {"C3", f.c3},
                  {"C4", f.c4},
                  {"du_sigma_left", f.d_sigma_left},
                  {"du_tau_right", f.d_tau_right},
                  {"minus_sup", f.minus_sup}});
  nlohmann::json path = nlohmann::json::array();
  for (const auto& [mu, it] : r.continuation_path) path.push_back({{"mu", mu}, {"newton_iters", it}});
  return {{"mu", r.mu},
          {"residual_inf", r.residual_inf},
          {"certified", r.certified},
          {"positivity", r.positivity},
          {"min_value", r.min_value},
          {"slope_sup", r.slope_sup},
          {"flags", {{"C1", r.c1}, {"C2", r.c2}, {"C3", r.c3}, {"C4", r.c4}, {"dichotomy", r.dichotomy}}},
          {"tie_flag", r.tie_flag},
          {"failures", r.failures},
          {"intervals", iv},
          {"continuation_path", path}};
}

std::vector<double> geometric_schedule(double mu0, double g, double mu_max) {
  if (!(mu0 > 0.0 && g > 1.0)) throw InputError("schedule needs mu0 > 0 and growth > 1");
  std::vector<double> out;
  for (double mu = mu0;; mu *= g) {
    out.push_back(mu);
    if (mu >= mu_max * (1.0 - 1e-12)) break;
  }
  return out;
}

Solution solve_multibump(const WeightSpec& w, const SymbolWindow& L, double mu_target, const ConstantPack& consts,
                         const BumpProfile& bump, const SolveOptions& opts) {
  if (!(mu_target > 0.0)) throw InputError("mu must be positive");
  if (!(opts.growth > 1.0)) throw InputError("growth factor must exceed 1");
  auto grid = L.make_grid(w, opts.cells_per_interval);
  const GridFunction guess = initial_guess(w, L, bump, grid);

  Solution sol;
  sol.window = L;
  sol.mu = mu_target;
  std::vector<std::pair<double, int>> path;

  double g = opts.growth;
  double mu = std::min(opts.mu0, mu_target);
  double mu_done = 0.0;
  GridFunction u = guess;
  int refinements = 0;
  for (;;) {
    GridFunction trial = mu_done > 0.0 ? u : guess;
    try {
      const int it = newton_solve(trial, mu, opts.newton_tol, opts.max_newton);
      path.emplace_back(mu, it);
      u = std::move(trial);
      mu_done = mu;
      if (mu >= mu_target) break;
      mu = std::min(mu_target, mu * g);
      if (mu_target - mu <= 1e-12 * mu_target) mu = mu_target;
    } catch (const NewtonFailure&) {
      if (++refinements > opts.max_refinements)
        throw ContinuationBreakdown("continuation failed at mu = " + std::to_string(mu));
      if (mu_done == 0.0) {
        // The pasted profile is closer to the solution for larger mu.
        mu = std::min(mu_target, mu * opts.growth);
      } else {
        g = std::sqrt(g);
        mu = std::min(mu_target, mu_done * g);
      }
    }
  }
  sol.u = u;
  sol.report = check_membership(u, mu_target, consts, L);
  sol.report.continuation_path = path;
  if (sol.report.residual_inf > opts.newton_tol) sol.report.failures.emplace_back("residual");
  sol.report.certified = sol.report.failures.empty();
  if (opts.require_certificate && !sol.report.certified) {
    std::string what = "solution at mu = " + std::to_string(mu_target) + " fails";
    for (const auto& f : sol.report.failures) what += " " + f;
    throw CertificationFailure(what, sol.report);
  }
  return sol;
}

MuStarBracket estimate_mu_star(const WeightSpec& w, const std::vector<SymbolWindow>& probes,
                               const std::vector<double>& schedule, const ConstantPack& consts,
                               const BumpProfile& bump, const SolveOptions& opts) {
  if (schedule.empty()) throw InputError("empty mu schedule");
  if (!std::is_sorted(schedule.begin(), schedule.end())) throw InputError("mu schedule must increase");
  MuStarBracket out;
  out.schedule = schedule;
  for (const auto& L : probes) {
    std::vector<bool> row;
    GridFunction u;
    bool warm = false;
    for (double mu : schedule) {
      bool ok = false;
      try {
        if (warm) {
          GridFunction trial = u;
          newton_solve(trial, mu, opts.newton_tol, opts.max_newton);
          u = std::move(trial);
        } else {
          throw NewtonFailure("cold start");
        }
      } catch (const NewtonFailure&) {
        try {
          SolveOptions o = opts;
          o.require_certificate = false;
          u = solve_multibump(w, L, mu, consts, bump, o).u;
          warm = true;
        } catch (const Error&) {
          warm = false;
        }
      }
      if (warm) {
        const auto rep = check_membership(u, mu, consts, L);
        ok = rep.certified && rep.residual_inf <= opts.newton_tol;
      }
      row.push_back(ok);
    }
    out.certified.push_back(row);
  }
  for (std::size_t j = 0; j < schedule.size(); ++j) {
    const bool all = std::all_of(out.certified.begin(), out.certified.end(), [&](const auto& r) { return r[j]; });
    if (all) {
      out.mu_pass = schedule[j];
      out.mu_fail = j > 0 ? schedule[j - 1] : 0.0;
      return out;
    }
  }
  throw ScheduleExhausted("no scheduled mu certifies every probe window");
}

int minimal_period(const GridFunction& u, int m, double rel_tol) {
  const Grid& g = *u.grid;
  if (!g.periodic() || m < 1) throw InputError("minimal_period needs a periodic m-period cell");
  const std::size_t n = g.cells();
  if (n % static_cast<std::size_t>(m) != 0) throw InputError("cell size is not a multiple of m");
  const std::size_t per = n / static_cast<std::size_t>(m);
  const double scale = u.max_abs();
  for (int d = 1; d <= m; ++d) {
    if (m % d != 0) continue;
    const std::size_t s = per * static_cast<std::size_t>(d);
    double diff = 0.0;
    for (std::size_t k = 0; k < n; ++k) diff = std::max(diff, std::abs(u[(k + s) % n] - u[k]));
    if (diff <= rel_tol * scale) return d;
  }
  return m;
}

Subharmonic subharmonic(const WeightSpec& w, const SymbolWindow& L, double mu, const ConstantPack& consts,
                        const BumpProfile& bump, const SolveOptions& opts) {
  if (!L.periodic()) throw InputError("subharmonics need a periodic code");
  Subharmonic out;
  out.solution = solve_multibump(w, L, mu, consts, bump, opts);
  out.minimal_period = minimal_period(out.solution.u, L.period());
  return out;
}

}  // namespace multibump
