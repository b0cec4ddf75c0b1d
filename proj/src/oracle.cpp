#include "multibump/oracle.hpp"

#include "multibump/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace multibump::oracle {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Continuous extension (Hairer, Norsett & Wanner).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct Rhs {
  const WeightSpec& w;
  double mu;
  std::size_t seg;
  double shift;

  State operator()(double t, const State& y) const {
    const double a = w.eval_on_segment(mu, seg, t - shift);
    const double q = -3.0 * a * y[0] * y[0];
    return {y[1], -a * y[0] * y[0] * y[0], y[1] * y[1], y[4], q * y[3], y[6], q * y[5]};
  }
};

State axpy(const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms) {
  State out = y;
  for (const auto& [c, k] : terms)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * c * (*k)[i];
  return out;
}

}  // namespace

State DenseStep::at(double t) const {
  const double th = (t - t0) / h;
  const double th1 = 1.0 - th;
  State out{};
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = coeff[0][i] + th * (coeff[1][i] + th1 * (coeff[2][i] + th * (coeff[3][i] + th1 * coeff[4][i])));
  return out;
}

State Trajectory::at(double t) const {
  if (steps_.empty()) return {};
  const double a = t_begin(), b = t_end();
  t = std::clamp(t, std::min(a, b), std::max(a, b));
  const bool backward = steps_.front().h < 0.0;
  auto it = backward ? std::partition_point(steps_.begin(), steps_.end(),
                                            [t](const DenseStep& s) { return s.t0 + s.h > t; })
                     : std::partition_point(steps_.begin(), steps_.end(),
                                            [t](const DenseStep& s) { return s.t0 + s.h < t; });
  if (it == steps_.end()) --it;
  return it->at(t);
}

IntegrateResult integrate(const WeightSpec& w, double mu, IvpState from, double t_end,
                          const IntegrateOptions& opts) {
  const double dir = t_end < from.t ? -1.0 : 1.0;
  IntegrateResult res;
  State y{from.u, from.du, 0.0, 0.0, 1.0, 1.0, 0.0};
  double t = from.t;
  auto bps = w.breakpoints_in(std::min(from.t, t_end), std::max(from.t, t_end));
  if (dir < 0.0) std::reverse(bps.begin(), bps.end());
  const double tol = opts.tol;
  double h = opts.fixed_step > 0.0 ? opts.fixed_step : std::min(1e-3, std::max(std::abs(t_end - t), 1e-12));

  auto finish = [&](const State& s, double tf) {
    res.final = {tf, s[0], s[1]};
    res.energy = std::abs(s[2]);
    res.dfinal_u = s[3];
    res.dfinal_du = s[4];
    res.dfinal_u_x = s[5];
    res.dfinal_du_x = s[6];
  };

  for (std::size_t b = 0; b + 1 < bps.size(); ++b) {
    const double seg_end = bps[b + 1];
    const double mid = 0.5 * (bps[b] + seg_end);
    const double shift = w.period() * std::floor(mid / w.period());
    const Rhs f{w, mu, w.segment_of(mid - shift), shift};
    State k1 = f(t, y);  // restart: fresh first stage on each smooth piece
    while (dir * (seg_end - t) > 0.0) {
      if (res.accepted + res.rejected > opts.max_steps) throw BlowUp("integrate: step budget exhausted");
      bool last = false;
      double step = dir * h;
      if (dir * (t + step - seg_end) >= 0.0 || dir * (seg_end - (t + step)) < 1e-12 * std::max(1.0, std::abs(seg_end))) {
        step = seg_end - t;
        last = true;
      }
      const State k2 = f(t + c2 * step, axpy(y, step, {{a21, &k1}}));
      const State k3 = f(t + c3 * step, axpy(y, step, {{a31, &k1}, {a32, &k2}}));
      const State k4 = f(t + c4 * step, axpy(y, step, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
      const State k5 = f(t + c5 * step, axpy(y, step, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
      const State k6 =
          f(t + step, axpy(y, step, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
      const State ynew = axpy(y, step, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
      const State k7 = f(t + step, ynew);

      double err = 0.0;
      if (opts.fixed_step <= 0.0) {
        for (std::size_t i = 0; i < y.size(); ++i) {
          const double e = std::abs(step) * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
          const double sc = tol + tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
          err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / static_cast<double>(y.size()));
        if (!std::isfinite(err)) err = 1e10;
        if (err > 1.0) {
          ++res.rejected;
          h = std::abs(step) * std::max(0.1, 0.9 * std::pow(err, -0.2));
          if (h < 1e-15 * std::max(1.0, std::abs(t))) throw BlowUp("integrate: step size underflow");
          continue;
        }
      }

      DenseStep ds;
      ds.t0 = t;
      ds.h = step;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double diff = ynew[i] - y[i];
        const double bspl = step * k1[i] - diff;
        ds.coeff[0][i] = y[i];
        ds.coeff[1][i] = diff;
        ds.coeff[2][i] = bspl;
        ds.coeff[3][i] = diff - step * k7[i] - bspl;
        ds.coeff[4][i] = step * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      res.trajectory.push(ds);
      ++res.accepted;

      if (std::abs(ynew[0]) > opts.blow_up || !std::isfinite(ynew[0])) {
        if (!opts.throw_on_blow_up) {
          finish(ynew, t + step);
          res.blew_up = true;
          return res;
        }
        throw BlowUp("integrate: |u| exceeded " + std::to_string(opts.blow_up) + " at t = " +
                     std::to_string(t + step));
      }

      if (opts.stop_at_zero && y[0] > 0.0 && ynew[0] <= 0.0) {
        double lo = t, hi = t + step;
        for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-16 * std::max(1.0, std::abs(hi)); ++it) {
          const double m = 0.5 * (lo + hi);
          if (ds.at(m)[0] > 0.0) lo = m; else hi = m;
        }
        const double tz = 0.5 * (lo + hi);
        finish(ds.at(tz), tz);
        res.final.u = 0.0;
        res.hit_zero = true;
        return res;
      }

      t = last ? seg_end : t + step;
      y = ynew;
      k1 = k7;
      if (opts.fixed_step <= 0.0) {
        const double fac = err > 0.0 ? std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2))) : 5.0;
        h = std::abs(step) * fac;
      }
    }
  }
  finish(y, t_end);
  return res;
}

ShootResult shoot_dirichlet(const WeightSpec& w, double mu, double t0, double t1, double x, double y,
                            double tol, std::optional<double> slope_guess) {
  if (!(t1 > t0)) throw InputError("shoot_dirichlet: empty interval");
  IntegrateOptions opts;
  opts.tol = tol;
  opts.throw_on_blow_up = false;
  const double scale = std::max({1.0, std::abs(x), std::abs(y)});

  // Residual u(t1; s) - y, with escapes mapped to +-inf.
  struct Eval {
    double F;
    IntegrateResult r;
  };
  auto eval = [&](double slope) {
    Eval e{0.0, integrate(w, mu, {t0, x, slope}, t1, opts)};
    e.F = e.r.blew_up ? std::copysign(std::numeric_limits<double>::infinity(), e.r.final.u) : e.r.final.u - y;
    return e;
  };

  ShootResult out;
  if (slope_guess) {
    // Damped Newton near the guess; u(t1; s) need not be monotone in s on
    // positivity intervals, so this keeps the branch selected by the guess.
    double sl = *slope_guess;
    Eval e = eval(sl);
    for (int it = 0; it < 40 && std::isfinite(e.F); ++it) {
      if (std::abs(e.F) <= 1e-13 * scale) {
        out.slope = sl;
        out.end_slope = e.r.final.du;
        out.iterations = it;
        out.run = std::move(e.r);
        return out;
      }
      if (!(std::abs(e.r.dfinal_u) > 0.0) || !std::isfinite(e.r.dfinal_u)) break;
      const double d = e.F / e.r.dfinal_u;
      if (std::abs(d) <= 4e-16 * std::max(1.0, std::abs(sl))) {
        // the residual is at the rounding level of the slope
        out.slope = sl;
        out.end_slope = e.r.final.du;
        out.iterations = it;
        out.run = std::move(e.r);
        return out;
      }
      bool moved = false;
      for (double step = 1.0; step > 1e-6; step *= 0.5) {
        Eval t = eval(sl - step * d);
        if (std::isfinite(t.F) && std::abs(t.F) < std::abs(e.F)) {
          sl -= step * d;
          e = std::move(t);
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
  }

  double s = slope_guess.value_or((y - x) / (t1 - t0));
  Eval cur = eval(s);
  // u(t1; s) increases with s: bracket the root.
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  double Flo = 0.0, Fhi = 0.0;
  auto record = [&](double sv, double F) {
    if (F < 0.0 && sv > lo) { lo = sv; Flo = F; }
    if (F > 0.0 && sv < hi) { hi = sv; Fhi = F; }
  };
  record(s, cur.F);

  const double dscale = std::max(1.0, std::abs(s)) / (t1 - t0);
  for (int it = 0; it < 200; ++it) {
    out.iterations = it;
    if (std::abs(cur.F) <= 1e-13 * scale || (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-15 * std::max(1.0, std::abs(s)))) {
      if (cur.r.blew_up) break;
      out.slope = s;
      out.end_slope = cur.r.final.du;
      out.run = std::move(cur.r);
      return out;
    }
    double next;
    const bool newton_ok = std::isfinite(cur.F) && std::isfinite(cur.r.dfinal_u) && cur.r.dfinal_u > 0.0;
    if (newton_ok) {
      next = s - cur.F / cur.r.dfinal_u;
    } else if (!std::isfinite(lo)) {
      next = s - std::ldexp(dscale, std::min(it, 60));
    } else {
      next = s + std::ldexp(dscale, std::min(it, 60));
    }
    if (std::isfinite(lo) && std::isfinite(hi) && !(next > lo && next < hi)) {
      // secant on the bracket when both ends are finite, else bisect
      next = (std::isfinite(Flo) && std::isfinite(Fhi)) ? lo - Flo * (hi - lo) / (Fhi - Flo) : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    }
    const double prev = s;
    s = next;
    cur = eval(s);
    record(s, cur.F);
    if (std::abs(s - prev) <= 1e-15 * std::max(1.0, std::abs(s)) && !cur.r.blew_up) {
      out.slope = s;
      out.end_slope = cur.r.final.du;
      out.iterations = it + 1;
      out.run = std::move(cur.r);
      return out;
    }
  }
  throw NewtonFailure("shoot_dirichlet: no convergence");
}

MultipleShootResult shoot_multiple(const WeightSpec& w, double mu, const std::vector<double>& nodes, double x,
                                   double y, std::vector<double> values, std::vector<double> slopes, double tol) {
  const std::size_t M = nodes.size() - 1;
  if (nodes.size() < 2) throw InputError("shoot_multiple: needs at least one segment");
  for (std::size_t j = 0; j < M; ++j)
    if (!(nodes[j + 1] > nodes[j])) throw InputError("shoot_multiple: nodes must increase");
  if (values.size() != M + 1 || slopes.size() != M) throw InputError("shoot_multiple: guess size mismatch");
  values.front() = x;
  values.back() = y;
  IntegrateOptions opts;
  opts.tol = tol;
  opts.throw_on_blow_up = false;

  // Unknowns: s_0, then (u_j, s_j) for j = 1..M-1.
  const std::size_t n = 2 * M - 1;
  auto pack = [&](const std::vector<double>& u, const std::vector<double>& s) {
    Eigen::VectorXd z(n);
    z[0] = s[0];
    for (std::size_t j = 1; j < M; ++j) {
      z[2 * j - 1] = u[j];
      z[2 * j] = s[j];
    }
    return z;
  };
  auto unpack = [&](const Eigen::VectorXd& z, std::vector<double>& u, std::vector<double>& s) {
    s[0] = z[0];
    for (std::size_t j = 1; j < M; ++j) {
      u[j] = z[2 * j - 1];
      s[j] = z[2 * j];
    }
  };
  struct Eval {
    std::vector<IntegrateResult> runs;
    Eigen::VectorXd F;
    bool ok = true;
    double norm() const { return ok ? F.lpNorm<Eigen::Infinity>() : std::numeric_limits<double>::infinity(); }
  };
  auto eval = [&](const std::vector<double>& u, const std::vector<double>& s) {
    Eval e;
    e.runs.resize(M);
    e.F.resize(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < M; ++j) {
      e.runs[j] = integrate(w, mu, {nodes[j], u[j], s[j]}, nodes[j + 1], opts);
      if (e.runs[j].blew_up) e.ok = false;
    }
    if (!e.ok) return e;
    for (std::size_t j = 0; j + 1 < M; ++j) {
      e.F[2 * j] = e.runs[j].final.u - u[j + 1];
      e.F[2 * j + 1] = e.runs[j].final.du - s[j + 1];
    }
    e.F[n - 1] = e.runs[M - 1].final.u - y;
    return e;
  };

  const double scale = std::max({1.0, std::abs(x), std::abs(y)});
  double sscale = 1.0;
  for (double v : slopes) sscale = std::max(sscale, std::abs(v));
  Eval cur = eval(values, slopes);
  if (!cur.ok) throw BlowUp("shoot_multiple: the starting guess escapes");
  MultipleShootResult out;
  for (int it = 0; it < 60; ++it) {
    out.iterations = it;
    if (cur.norm() <= 1e-13 * std::max(scale, sscale)) break;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < M; ++j) {
      const auto& r = cur.runs[j];
      const std::size_t rows = j + 1 < M ? 2 : 1;
      const Eigen::Index r0 = static_cast<Eigen::Index>(2 * j);
      // columns of (u_j, s_j); u_0 = x is fixed
      const Eigen::Index cs = j == 0 ? 0 : static_cast<Eigen::Index>(2 * j);
      J(r0, cs) = r.dfinal_u;
      if (rows == 2) J(r0 + 1, cs) = r.dfinal_du;
      if (j > 0) {
        const Eigen::Index cu = static_cast<Eigen::Index>(2 * j - 1);
        J(r0, cu) = r.dfinal_u_x;
        if (rows == 2) J(r0 + 1, cu) = r.dfinal_du_x;
      }
      if (rows == 2) {
        J(r0, static_cast<Eigen::Index>(2 * j + 1)) -= 1.0;
        J(r0 + 1, static_cast<Eigen::Index>(2 * j + 2)) -= 1.0;
      }
    }
    const Eigen::VectorXd d = J.partialPivLu().solve(cur.F);
    if (!d.allFinite()) throw NewtonFailure("shoot_multiple: singular matching system");
    if (d.lpNorm<Eigen::Infinity>() <= 4e-16 * std::max(scale, sscale)) break;
    const Eigen::VectorXd z = pack(values, slopes);
    bool moved = false;
    for (double step = 1.0; step > 1e-8; step *= 0.5) {
      std::vector<double> u2 = values, s2 = slopes;
      unpack(z - step * d, u2, s2);
      Eval t = eval(u2, s2);
      if (t.norm() < cur.norm()) {
        values = std::move(u2);
        slopes = std::move(s2);
        cur = std::move(t);
        moved = true;
        break;
      }
    }
    if (!moved) {
      if (cur.norm() <= 1e-9 * std::max(scale, sscale)) break;
      throw NewtonFailure("shoot_multiple: line search stalled");
    }
    if (it == 59) throw NewtonFailure("shoot_multiple: no convergence");
  }
  out.nodes = nodes;
  out.slopes = slopes;
  out.residual = cur.norm();
  out.runs = std::move(cur.runs);
  return out;
}

double MultipleShootResult::at(double t) const {
  auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
  std::size_t j = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
  j = std::min(j, runs.size() - 1);
  return runs[j].trajectory.at(t)[0];
}

namespace {

// Values of a+ on the segments of [0, tau], or ScopeError if some segment is not constant.
std::vector<std::pair<WeightSpec::Segment, double>> constant_pieces(const WeightSpec& w) {
  std::vector<std::pair<WeightSpec::Segment, double>> out;
  for (std::size_t s = 0; s < w.segments().size(); ++s) {
    const auto seg = w.segments()[s];
    if (seg.t0 >= w.tau()) break;
    if (w.description().pieces[seg.piece].kind == PieceKind::sine)
      throw ScopeError("brute_ground_level: a+ must be piecewise constant");
    const double v0 = w.a_on_segment(s, seg.t0);
    for (int q = 1; q <= 16; ++q) {
      const double v = w.a_on_segment(s, seg.t0 + (seg.t1 - seg.t0) * q / 16.0);
      if (std::abs(v - v0) > 1e-14 * std::max(1.0, std::abs(v0)))
        throw ScopeError("brute_ground_level: a+ must be piecewise constant");
    }
    out.push_back({seg, std::max(0.0, v0)});
  }
  return out;
}

double peak_of(const Trajectory& tr) {
  double best = 0.0;
  for (const auto& st : tr.steps()) {
    const auto a = st.at(st.t0), b = st.at(st.t0 + st.h);
    best = std::max({best, a[0], b[0]});
    if (a[1] > 0.0 && b[1] <= 0.0) {
      double lo = st.t0, hi = st.t0 + st.h;
      for (int it = 0; it < 100; ++it) {
        const double m = 0.5 * (lo + hi);
        if (st.at(m)[1] > 0.0) lo = m; else hi = m;
      }
      best = std::max(best, st.at(0.5 * (lo + hi))[0]);
    }
  }
  return best;
}

}  // namespace

GroundLevel brute_ground_level(const WeightSpec& w, double tol) {
  const auto pieces = constant_pieces(w);
  const double tau = w.tau();
  IntegrateOptions opts;
  opts.tol = tol;
  opts.stop_at_zero = true;

  // Auxiliary weight: a+ on [0, tau], continued by a positive constant far
  // enough that every shot returns to zero.
  const double tail = std::max_element(pieces.begin(), pieces.end(),
                                       [](const auto& p, const auto& q) { return p.second < q.second; })->second;
  auto extended = [&](double length) {
    WeightDescription d;
    for (const auto& [seg, v] : pieces) d.pieces.push_back({seg.t0, seg.t1, PieceKind::poly, {v}});
    d.pieces.push_back({tau, length, PieceKind::poly, {tail}});
    d.pieces.push_back({length, length + 1.0, PieceKind::poly, {-1.0}});
    d.period = length + 1.0;
    d.tau = length;
    return WeightSpec::build(std::move(d));
  };

  GroundLevel out;
  const bool uniform = std::all_of(pieces.begin(), pieces.end(),
                                   [&](const auto& p) { return std::abs(p.second - pieces.front().second) <= 0.0; });
  if (uniform) {
    // u_lambda(t) = lambda u(lambda t) preserves u'' + a u^3 = 0 for constant a.
    const double a0 = pieces.front().second;
    const double amp = std::pow(2.0 / a0, 0.25);
    const double half_period = 2.0 * std::sqrt(2.0) * amp * 1.3110287771461;
    const auto aux = extended(std::max(2.0 * half_period, 2.0 * tau));
    const auto r = integrate(aux, 0.0, {0.0, 0.0, 1.0}, 2.0 * half_period + tau, opts);
    if (!r.hit_zero) throw NewtonFailure("brute_ground_level: shot did not return to zero");
    const double lambda = r.final.t / tau;
    out.level = 0.25 * lambda * lambda * lambda * r.energy;
    out.slope_left = lambda * lambda;
    out.slope_right = lambda * lambda * r.final.du;
    out.amplitude = lambda * peak_of(r.trajectory);
    return out;
  }

  // First return time decreases with the launch slope: bracket and bisect.
  const auto aux = extended(64.0 * tau);
  auto first_zero = [&](double s) {
    auto r = integrate(aux, 0.0, {0.0, 0.0, s}, 64.0 * tau, opts);
    if (!r.hit_zero) r.final.t = std::numeric_limits<double>::infinity();
    return r;
  };
  double lo = 1.0, hi = 1.0;
  while (first_zero(lo).final.t < tau) lo *= 0.5;
  while (first_zero(hi).final.t > tau) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double m = 0.5 * (lo + hi);
    if (first_zero(m).final.t > tau) lo = m; else hi = m;
  }
  const auto r = first_zero(0.5 * (lo + hi));
  out.level = 0.25 * r.energy;
  out.slope_left = 0.5 * (lo + hi);
  out.slope_right = r.final.du;
  out.amplitude = peak_of(r.trajectory);
  return out;
}

}  // namespace multibump::oracle
