#include "multibump/verify.hpp"

#include "multibump/kernels.hpp"
#include "multibump/oracle.hpp"
#include "multibump/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace multibump {

namespace {

bool in_code(const SymbolWindow& L, int i) {
  try {
    return L.code(i) == 1;
  } catch (const IndexOutOfWindow&) {
    return false;
  }
}

// Student t quantile at 0.975 for nu = 1..30 degrees of freedom.
double t975(int nu) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                 2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                 2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (nu < 1) return std::numeric_limits<double>::infinity();
  if (nu <= 30) return table[nu - 1];
  return 1.96;
}

}  // namespace

double window_cutoff(const Grid& g, int i, double t) {
  const WeightSpec& w = g.weight();
  if (!g.periodic()) return cutoff(w, i, t);
  const double L = g.t_end() - g.t_begin();
  return cutoff(w, i, t - L) + cutoff(w, i, t) + cutoff(w, i, t + L);
}

double window_cutoff_derivative(const Grid& g, int i, double t) {
  const WeightSpec& w = g.weight();
  if (!g.periodic()) return cutoff_derivative(w, i, t);
  const double L = g.t_end() - g.t_begin();
  return cutoff_derivative(w, i, t - L) + cutoff_derivative(w, i, t) + cutoff_derivative(w, i, t + L);
}

NehariResiduals nehari_identities(const GridFunction& u, double mu, const SymbolWindow& L) {
  const Grid& g = *u.grid;
  NehariResiduals r;

  const GridFunction res = gradient(u, mu);
  const std::size_t rows = g.periodic() ? g.cells() : g.node_count();
  std::vector<bool> in_large(g.node_count(), false);
  for (const auto& iv : g.intervals())
    if (iv.plus && in_code(L, iv.index))
      for (std::size_t k = iv.first; k <= iv.last; ++k) in_large[k] = true;
  if (g.periodic() && in_large.back()) in_large.front() = true;
  for (std::size_t k = g.periodic() ? 0 : 1; k < (g.periodic() ? rows : rows - 1); ++k)
    if (!in_large[k]) r.weak_inf = std::max(r.weak_inf, std::abs(res[k]));

  for (const auto& iv : g.intervals()) {
    if (!iv.plus || !in_code(L, iv.index)) continue;
    const double kin = stiffness_integral(u, iv.first, iv.last);
    const double quart = quartic_integral(u, mu, iv.first, iv.last);
    const double boundary = u[iv.last] * one_sided_derivative(u, mu, iv.last, Side::left) -
                            u[iv.first] * one_sided_derivative(u, mu, iv.first, Side::right);
    const double d = std::abs(kin - quart - boundary);
    r.local_per_interval.push_back(d);
    r.local_abs = std::max(r.local_abs, d);
    if (kin > 0.0) r.local_rel = std::max(r.local_rel, d / kin);
  }

  const double kin = stiffness_integral(u, 0, g.node_count() - 1);
  const double quart = quartic_integral(u, mu, 0, g.node_count() - 1);
  r.global_abs = std::abs(kin - quart);
  r.global_rel = kin > 0.0 ? r.global_abs / kin : 0.0;

  const auto& xi = g.q_xi();
  const auto& qw = g.q_w();
  const auto& ap = g.q_ap();
  const auto& am = g.q_am();
  for (int i = L.first(); i <= L.last(); ++i) {
    double A = 0.0, B = 0.0, C = 0.0;
    for (std::size_t c = 0; c < g.cells(); ++c) {
      const double slope = (u[c + 1] - u[c]) / g.h(c);
      for (std::size_t q = g.q_begin(c); q < g.q_begin(c + 1); ++q) {
        const double t = g.t(c) + xi[q] * g.h(c);
        const double eta = window_cutoff(g, i, t);
        const double deta = window_cutoff_derivative(g, i, t);
        if (eta == 0.0 && deta == 0.0) continue;
        const double uq = u[c] + xi[q] * (u[c + 1] - u[c]);
        const double d = deta * uq + eta * slope;
        A += qw[q] * d * d;
        B += qw[q] * (ap[q] - mu * am[q]) * eta * eta * uq * uq * uq * uq;
        C += qw[q] * deta * deta * uq * uq;
      }
    }
    const double d = std::abs(A - B - C);
    const double rel = A > 0.0 ? d / A : d;
    r.cutoff_per_interval.push_back(rel);
    r.cutoff_rel = std::max(r.cutoff_rel, rel);
  }
  return r;
}

NehariResiduals nehari_identities(const Solution& sol) { return nehari_identities(sol.u, sol.mu, sol.window); }

double decay_constant(const WeightSpec& w, double delta) {
  const double T = w.period(), tau = w.tau();
  if (!(delta > 0.0 && delta < 0.5 * (T - tau))) throw InputError("delta must lie in (0, (T - tau)/2)");
  // int_{e-delta}^{e} int_{e-delta}^{t} a- = int (e - s) a-(s) ds, and the mirror at tau.
  auto weighted = [&](double t0, double t1, auto&& weight) {
    const auto bp = w.breakpoints_in(t0, t1);
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < bp.size(); ++k)
      s += quadrature::integrate([&](double x) { return weight(x) * w.a_minus(x); }, bp[k], bp[k + 1], 8);
    return s;
  };
  const double right = weighted(T - delta, T, [&](double s) { return T - s; });
  const double left = weighted(tau, tau + delta, [&](double s) { return s - tau; });
  const double m = std::min(right, left);
  if (!(m > 0.0)) throw InputError("a- vanishes near an end of the negativity interval");
  return std::pow(m, -1.0 / 3.0);
}

DecaySample decay_sample(const GridFunction& u, double mu, double delta) {
  const Grid& g = *u.grid;
  const WeightSpec& w = g.weight();
  const double C = decay_constant(w, delta);
  DecaySample s;
  s.mu = mu;
  s.bound_holds = true;
  bool any = false;
  for (const auto& iv : g.intervals()) {
    if (iv.plus) continue;
    const double lo = w.tau_i(iv.index) + delta, hi = w.sigma(iv.index + 1) - delta;
    double inner = 0.0;
    for (std::size_t k = iv.first; k <= iv.last; ++k)
      if (g.t(k) >= lo && g.t(k) <= hi) inner = std::max(inner, std::abs(u[k]));
    const double edge = std::max(std::abs(u[iv.first]), std::abs(u[iv.last]));
    const double bound = C * std::cbrt(edge / mu);
    if (inner > bound) s.bound_holds = false;
    if (!any || inner > s.interior_max) {
      s.interior_max = inner;
      s.boundary_max = edge;
      s.bound = bound;
      any = true;
    }
  }
  if (!any) throw InputError("the grid carries no negativity interval");
  return s;
}

LinearFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("fit needs at least two matching points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(x[k] > 0.0 && y[k] > 0.0)) throw InputError("log-log fit needs positive data");
    lx[k] = std::log(x[k]);
    ly[k] = std::log(y[k]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) mx += lx[k], my += ly[k];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double sse = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double e = ly[k] - f.intercept - f.slope * lx[k];
      sse += e * e;
    }
    f.half_width = t975(static_cast<int>(n) - 2) * std::sqrt(sse / (n - 2) / sxx);
  } else {
    f.half_width = std::numeric_limits<double>::infinity();
  }
  return f;
}

LimitDistance limit_distance(const GridFunction& u, double mu, const BumpProfile& bump, const SymbolWindow& L,
                             double alpha, bool use_serial_kernel) {
  (void)mu;
  const Grid& g = *u.grid;
  const WeightSpec& w = g.weight();
  const GridFunction lim = initial_guess(w, L, bump, u.grid);
  std::vector<double> e(u.size());
  LimitDistance d;
  for (std::size_t k = 0; k < u.size(); ++k) {
    e[k] = u[k] - lim[k];
    d.sup = std::max(d.sup, std::abs(e[k]));
  }
  const double gap = g.min_cell() * (1.0 - 1e-9);
  auto seminorm = use_serial_kernel ? kernels::serial::holder_seminorm : kernels::parallel::holder_seminorm;
  d.holder_seminorm = seminorm(g.nodes(), e, alpha, gap).value;
  d.lipschitz_seminorm = seminorm(g.nodes(), e, 1.0, gap).value;
  d.holder = d.sup + d.holder_seminorm;
  d.lipschitz = d.sup + d.lipschitz_seminorm;

  const auto& xi = g.q_xi();
  const auto& ap = g.q_ap();
  for (const auto& iv : g.intervals()) {
    if (iv.plus) {
      double sup = 0.0, slope = 0.0, second = 0.0;
      for (std::size_t k = iv.first; k <= iv.last; ++k) sup = std::max(sup, std::abs(e[k]));
      for (std::size_t c = iv.first; c < iv.last; ++c) {
        slope = std::max(slope, std::abs(e[c + 1] - e[c]) / g.h(c));
        for (std::size_t q = g.q_begin(c); q < g.q_begin(c + 1); ++q) {
          const double uq = u[c] + xi[q] * (u[c + 1] - u[c]);
          const double lq = lim[c] + xi[q] * (lim[c + 1] - lim[c]);
          second = std::max(second, std::abs(ap[q] * (uq * uq * uq - lq * lq * lq)));
        }
      }
      d.index.push_back(iv.index);
      d.code.push_back(in_code(L, iv.index) ? 1 : 0);
      d.w2_plus.push_back(sup + slope + second);
      double minus = 0.0;
      if (g.has_interval(iv.index, false)) {
        const auto& mi = g.interval(iv.index, false);
        for (std::size_t k = mi.first; k <= mi.last; ++k) minus = std::max(minus, std::abs(u[k]));
        minus += stiffness_integral(u, mi.first, mi.last);
      }
      d.p1_minus.push_back(minus);
    }
  }
  return d;
}

OracleCheck oracle_residual(const GridFunction& u, double mu, double tol) {
  const Grid& g = *u.grid;
  const WeightSpec& w = g.weight();
  const auto& ivs = g.intervals();
  const double scale = std::max(u.max_abs(), std::numeric_limits<double>::min());
  OracleCheck out;
  out.intervals = static_cast<int>(ivs.size());
  double worst = 0.0;
  bool failed = false;
  std::string why;
#pragma omp parallel for schedule(dynamic) reduction(max : worst)
  for (std::size_t n = 0; n < ivs.size(); ++n) {
    const auto& iv = ivs[n];
    try {
      const double guess = one_sided_derivative(u, mu, iv.first, Side::right);
      const auto sh =
          oracle::shoot_dirichlet(w, mu, g.t(iv.first), g.t(iv.last), u[iv.first], u[iv.last], tol, guess);
      for (std::size_t k = iv.first; k <= iv.last; ++k)
        worst = std::max(worst, std::abs(sh.run.trajectory.at(g.t(k))[0] - u[k]) / scale);
    } catch (const Error& e) {
#pragma omp critical
      {
        failed = true;
        why = e.what();
      }
    }
  }
  if (failed) throw NonConvergence("oracle re-integration failed: " + why);
  out.max_rel = worst;
  return out;
}

OracleCheck block_oracle_residual(const GridFunction& u, double mu, std::size_t stride, double tol) {
  const Grid& g = *u.grid;
  if (g.periodic()) throw InputError("block_oracle_residual needs a Dirichlet grid");
  if (stride < 1) throw InputError("stride must be >= 1");
  std::vector<std::size_t> idx;
  for (const auto& iv : g.intervals())
    for (std::size_t k = iv.first; k < iv.last; k += stride) idx.push_back(k);
  idx.push_back(g.node_count() - 1);
  std::vector<double> nodes, values, slopes;
  for (std::size_t k : idx) {
    nodes.push_back(g.t(k));
    values.push_back(u[k]);
  }
  for (std::size_t j = 0; j + 1 < idx.size(); ++j) slopes.push_back(one_sided_derivative(u, mu, idx[j], Side::right));
  const auto ms = oracle::shoot_multiple(g.weight(), mu, nodes, u[0], u[g.node_count() - 1], values, slopes, tol);
  OracleCheck out;
  out.intervals = static_cast<int>(slopes.size());
  const double scale = std::max(u.max_abs(), std::numeric_limits<double>::min());
  for (std::size_t k = 0; k < g.node_count(); ++k) out.max_rel = std::max(out.max_rel, std::abs(ms.at(g.t(k)) - u[k]) / scale);
  return out;
}

double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("kendall tau needs at least two matching points");
  long conc = 0, disc = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double s = (x[j] - x[i]) * (y[j] - y[i]);
      if (s > 0) ++conc;
      else if (s < 0) ++disc;
    }
  const double pairs = 0.5 * static_cast<double>(x.size()) * static_cast<double>(x.size() - 1);
  return static_cast<double>(conc - disc) / pairs;
}

AsymptoticReport asymptotic_sweep(const WeightSpec& w, const SymbolWindow& L, const std::vector<double>& mu_list,
                                  const ConstantPack& consts, const BumpProfile& bump, const SweepOptions& opts) {
  if (mu_list.size() < 3) throw InsufficientSweep("a sweep needs at least three mu values");
  for (std::size_t k = 1; k < mu_list.size(); ++k)
    if (!(mu_list[k] > mu_list[k - 1])) throw InputError("mu_list must be strictly increasing");
  if (!(mu_list.front() > 0.0)) throw InputError("mu must be positive");
  if (std::log10(mu_list.back() / mu_list.front()) < 2.0 - 1e-9)
    throw InsufficientSweep("the mu sweep spans fewer than two decades");

  AsymptoticReport rep;
  rep.delta = opts.delta;
  rep.alpha = opts.alpha;
  rep.c_delta = decay_constant(w, opts.delta);

  SolveOptions so = opts.solve;
  so.require_certificate = false;
  Solution first = solve_multibump(w, L, mu_list.front(), consts, bump, so);
  std::vector<GridFunction> states{first.u};
  std::vector<std::vector<std::pair<double, int>>> paths{first.report.continuation_path};
  GridFunction u = first.u;
  for (std::size_t k = 1; k < mu_list.size(); ++k) {
    paths.push_back(continue_solution(u, mu_list[k - 1], mu_list[k], so));
    states.push_back(u);
  }

  rep.points.resize(mu_list.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < mu_list.size(); ++k) {
    auto& p = rep.points[k];
    p.mu = mu_list[k];
    p.report = check_membership(states[k], p.mu, consts, L);
    p.report.continuation_path = paths[k];
    if (p.report.residual_inf > so.newton_tol) p.report.failures.emplace_back("residual");
    p.report.certified = p.report.failures.empty();
    p.certified = p.report.certified;
    p.decay = decay_sample(states[k], p.mu, opts.delta);
    p.distance = limit_distance(states[k], p.mu, bump, L, opts.alpha, true);
    p.identities = nehari_identities(states[k], p.mu, L);
  }

  std::vector<double> xs, ys;
  rep.bounds_hold = true;
  for (const auto& p : rep.points) {
    xs.push_back(p.mu);
    ys.push_back(p.decay.interior_max);
    rep.bounds_hold = rep.bounds_hold && p.decay.bound_holds;
  }
  rep.decay_fit = fit_loglog(xs, ys);
  return rep;
}

double decay_rate(const AsymptoticReport& rep) { return rep.decay_fit.slope; }

nlohmann::json to_json(const NehariResiduals& r) {
  return {{"weak_inf", r.weak_inf},
          {"local_abs", r.local_abs},
          {"local_rel", r.local_rel},
          {"global_abs", r.global_abs},
          {"global_rel", r.global_rel},
          {"cutoff_rel", r.cutoff_rel},
          {"local_per_interval", r.local_per_interval},
          {"cutoff_per_interval", r.cutoff_per_interval}};
}

nlohmann::json to_json(const AsymptoticReport& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points)
    pts.push_back({{"mu", p.mu},
                   {"certified", p.certified},
                   {"failures", p.report.failures},
                   {"residual_inf", p.report.residual_inf},
                   {"decay",
                    {{"interior_max", p.decay.interior_max},
                     {"boundary_max", p.decay.boundary_max},
                     {"bound", p.decay.bound},
                     {"bound_holds", p.decay.bound_holds}}},
                   {"distance",
                    {{"sup", p.distance.sup},
                     {"holder", p.distance.holder},
                     {"lipschitz", p.distance.lipschitz},
                     {"holder_seminorm", p.distance.holder_seminorm},
                     {"lipschitz_seminorm", p.distance.lipschitz_seminorm},
                     {"index", p.distance.index},
                     {"code", p.distance.code},
                     {"w2_plus", p.distance.w2_plus},
                     {"p1_minus", p.distance.p1_minus}}},
                   {"identities", to_json(p.identities)}});
  return {{"delta", r.delta},
          {"c_delta", r.c_delta},
          {"alpha", r.alpha},
          {"bounds_hold", r.bounds_hold},
          {"decay_fit",
           {{"slope", r.decay_fit.slope}, {"intercept", r.decay_fit.intercept}, {"half_width", r.decay_fit.half_width}}},
          {"points", pts}};
}

}  // namespace multibump
