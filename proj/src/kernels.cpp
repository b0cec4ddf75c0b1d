#include "multibump/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

namespace multibump::kernels {

namespace {

struct CellTerms {
  double left, right;
};

// Cell c contribution (a) to the action, (b) to the weak residual rows of its two nodes.
inline double cell_action(const Grid& g, std::span<const double> u, double mu, std::size_t c) {
  const double d = u[c + 1] - u[c];
  double quart = 0.0;
  for (std::size_t q = g.q_begin(c); q < g.q_begin(c + 1); ++q) {
    const double x = g.q_xi()[q];
    const double uq = (1.0 - x) * u[c] + x * u[c + 1];
    const double u2 = uq * uq;
    quart += g.q_w()[q] * (g.q_ap()[q] - mu * g.q_am()[q]) * u2 * u2;
  }
  return 0.5 * d * d / g.h(c) - 0.25 * quart;
}

inline CellTerms cell_gradient(const Grid& g, std::span<const double> u, double mu, std::size_t c) {
  const double slope = (u[c + 1] - u[c]) / g.h(c);
  double fl = 0.0, fr = 0.0;
  for (std::size_t q = g.q_begin(c); q < g.q_begin(c + 1); ++q) {
    const double x = g.q_xi()[q];
    const double uq = (1.0 - x) * u[c] + x * u[c + 1];
    const double f = g.q_w()[q] * (g.q_ap()[q] - mu * g.q_am()[q]) * uq * uq * uq;
    fl += f * (1.0 - x);
    fr += f * x;
  }
  return {-slope - fl, slope - fr};
}

inline CellTerms cell_hessian(const Grid& g, std::span<const double> u, double mu, std::span<const double> v,
                              std::size_t c) {
  const double dv = (v[c + 1] - v[c]) / g.h(c);
  double fl = 0.0, fr = 0.0;
  for (std::size_t q = g.q_begin(c); q < g.q_begin(c + 1); ++q) {
    const double x = g.q_xi()[q];
    const double uq = (1.0 - x) * u[c] + x * u[c + 1];
    const double vq = (1.0 - x) * v[c] + x * v[c + 1];
    const double f = 3.0 * g.q_w()[q] * (g.q_ap()[q] - mu * g.q_am()[q]) * uq * uq * vq;
    fl += f * (1.0 - x);
    fr += f * x;
  }
  return {-dv - fl, dv - fr};
}

inline void fold_periodic(const Grid& g, std::span<double> out) {
  if (!g.periodic()) return;
  const double s = out.front() + out.back();
  out.front() = s;
  out.back() = s;
}

// Best quotient over j > i for fixed i; pairs are scanned by increasing
// distance so the scan stops once no larger quotient is possible.
inline void holder_row(std::span<const double> t, std::span<const double> e, double alpha, double min_gap,
                       double emax, std::size_t i, double floor, HolderResult& best) {
  const std::size_t n = t.size();
  for (std::size_t j = i + 1; j < n; ++j) {
    const double d = t[j] - t[i];
    if (d < min_gap) continue;
    const double scale = std::pow(d, alpha);
    if (2.0 * emax / scale <= std::max(floor, best.value)) break;
    const double qv = std::abs(e[j] - e[i]) / scale;
    if (qv > best.value) best = {qv, i, j};
  }
}

}  // namespace

namespace serial {

double action(const Grid& g, std::span<const double> u, double mu) {
  double s = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) s += cell_action(g, u, mu, c);
  return s;
}

void gradient(const Grid& g, std::span<const double> u, double mu, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const auto t = cell_gradient(g, u, mu, c);
    out[c] += t.left;
    out[c + 1] += t.right;
  }
  fold_periodic(g, out);
}

void hessian_apply(const Grid& g, std::span<const double> u, double mu, std::span<const double> v,
                   std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const auto t = cell_hessian(g, u, mu, v, c);
    out[c] += t.left;
    out[c + 1] += t.right;
  }
  fold_periodic(g, out);
}

HolderResult holder_seminorm(std::span<const double> t, std::span<const double> e, double alpha, double min_gap) {
  HolderResult best;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j) {
      const double d = t[j] - t[i];
      if (d < min_gap) continue;
      const double qv = std::abs(e[j] - e[i]) / std::pow(d, alpha);
      if (qv > best.value) best = {qv, i, j};
    }
  return best;
}

}  // namespace serial

namespace parallel {

double action(const Grid& g, std::span<const double> u, double mu) {
  const auto n = static_cast<long>(g.cells());
  double s = 0.0;
#pragma omp parallel for reduction(+ : s) schedule(static)
  for (long c = 0; c < n; ++c) s += cell_action(g, u, mu, static_cast<std::size_t>(c));
  return s;
}

namespace {

template <class CellFn>
void scatter(const Grid& g, std::span<double> out, CellFn&& cell) {
  const auto n = static_cast<long>(g.cells());
  std::vector<CellTerms> terms(g.cells());
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (long c = 0; c < n; ++c) terms[static_cast<std::size_t>(c)] = cell(static_cast<std::size_t>(c));
#pragma omp for schedule(static)
    for (long k = 0; k <= n; ++k) {
      double v = 0.0;
      if (k < n) v += terms[static_cast<std::size_t>(k)].left;
      if (k > 0) v += terms[static_cast<std::size_t>(k - 1)].right;
      out[static_cast<std::size_t>(k)] = v;
    }
  }
  fold_periodic(g, out);
}

}  // namespace

void gradient(const Grid& g, std::span<const double> u, double mu, std::span<double> out) {
  scatter(g, out, [&](std::size_t c) { return cell_gradient(g, u, mu, c); });
}

void hessian_apply(const Grid& g, std::span<const double> u, double mu, std::span<const double> v,
                   std::span<double> out) {
  scatter(g, out, [&](std::size_t c) { return cell_hessian(g, u, mu, v, c); });
}

HolderResult holder_seminorm(std::span<const double> t, std::span<const double> e, double alpha, double min_gap) {
  double emax = 0.0;
  for (double v : e) emax = std::max(emax, std::abs(v));
  const auto n = static_cast<long>(t.size());
  HolderResult best;
  double shared_floor = 0.0;
#pragma omp parallel
  {
    HolderResult local;
#pragma omp for schedule(dynamic, 64)
    for (long i = 0; i < n; ++i) {
      double floor;
#pragma omp atomic read
      floor = shared_floor;
      const double before = local.value;
      holder_row(t, e, alpha, min_gap, emax, static_cast<std::size_t>(i), floor, local);
      if (local.value > before) {
#pragma omp critical(holder_floor)
        shared_floor = std::max(shared_floor, local.value);
      }
    }
#pragma omp critical(holder_merge)
    {
      if (local.value > best.value ||
          (local.value == best.value && std::make_pair(local.i, local.j) < std::make_pair(best.i, best.j)))
        best = local;
    }
  }
  return best;
}

}  // namespace parallel

}  // namespace multibump::kernels
