#include "multibump/assembly.hpp"

#include "multibump/errors.hpp"
#include "multibump/kernels.hpp"
#include "multibump/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace multibump {

double nodal_time(const WeightSpec& w, int j) {
  const int i = j >= 0 ? j / 2 : -((1 - j) / 2);
  return (j - 2 * i == 0) ? w.sigma(i) : w.tau_i(i);
}

namespace {

void fill_quadrature(const WeightSpec& w, const std::vector<double>& nodes, std::vector<std::size_t>& offset,
                     std::vector<double>& xi, std::vector<double>& qw, std::vector<double>& ap,
                     std::vector<double>& am, double& min_cell) {
  min_cell = std::numeric_limits<double>::infinity();
  using GL = quadrature::GaussLegendre5;
  for (std::size_t c = 0; c + 1 < nodes.size(); ++c) {
    const double t0 = nodes[c], t1 = nodes[c + 1];
    const double h = t1 - t0;
    min_cell = std::min(min_cell, h);
    offset.push_back(xi.size());
    const auto bps = w.breakpoints_in(t0, t1);
    for (std::size_t b = 0; b + 1 < bps.size(); ++b) {
      const double lo = bps[b], hi = bps[b + 1];
      const double mid = 0.5 * (lo + hi);
      const double shift = w.period() * std::floor(mid / w.period());
      const std::size_t seg = w.segment_of(mid - shift);
      for (int q = 0; q < GL::size; ++q) {
        const double t = lo + GL::nodes[q] * (hi - lo);
        const double a = w.a_on_segment(seg, t - shift);
        xi.push_back((t - t0) / h);
        qw.push_back(GL::weights[q] * (hi - lo));
        ap.push_back(std::max(0.0, a));
        am.push_back(std::max(0.0, -a));
      }
    }
  }
  offset.push_back(xi.size());
}

}  // namespace

std::shared_ptr<const Grid> Grid::build(const WeightSpec& w, int j_begin, int j_end, int cells_per_interval,
                                        bool periodic, double end_grading) {
  if (j_end <= j_begin) throw InputError("grid needs at least one nodal interval");
  if (cells_per_interval < 8) throw InputError("cells_per_interval must be >= 8");
  if (!(end_grading >= 1.0)) throw InputError("end_grading must be >= 1");
  if (periodic && end_grading != 1.0) throw InputError("periodic grids have no ends to grade");
  auto g = std::make_shared<Grid>();
  g->weight_ = std::make_shared<const WeightSpec>(w);
  g->periodic_ = periodic;
  g->m_ = cells_per_interval;

  g->nodes_.push_back(nodal_time(w, j_begin));
  for (int j = j_begin; j < j_end; ++j) {
    const double a = nodal_time(w, j), b = nodal_time(w, j + 1);
    const int i = j >= 0 ? j / 2 : -((1 - j) / 2);
    NodalInterval iv{j - 2 * i == 0, i, g->nodes_.size() - 1, 0};
    for (int c = 1; c < cells_per_interval; ++c) {
      const double sc = static_cast<double>(c) / cells_per_interval;
      double t = a + (b - a) * sc;
      if (j == j_begin) t = a + (b - a) * std::pow(sc, end_grading);
      else if (j == j_end - 1) t = b - (b - a) * std::pow(1.0 - sc, end_grading);
      g->nodes_.push_back(t);
    }
    g->nodes_.push_back(b);
    iv.last = g->nodes_.size() - 1;
    g->intervals_.push_back(iv);
  }
  fill_quadrature(w, g->nodes_, g->q_offset_, g->q_xi_, g->q_w_, g->q_ap_, g->q_am_, g->min_cell_);
  return g;
}

std::shared_ptr<const Grid> Grid::build_span(const WeightSpec& w, double t0, double t1, int cells) {
  if (!(t1 > t0)) throw InputError("grid span is empty");
  if (cells < 2) throw InputError("grid span needs >= 2 cells");
  auto g = std::make_shared<Grid>();
  g->weight_ = std::make_shared<const WeightSpec>(w);
  g->m_ = cells;
  for (int c = 0; c <= cells; ++c) g->nodes_.push_back(c == cells ? t1 : t0 + (t1 - t0) * c / cells);
  if (t0 >= 0.0 && t1 <= w.tau()) g->intervals_.push_back({true, 0, 0, g->nodes_.size() - 1});
  fill_quadrature(w, g->nodes_, g->q_offset_, g->q_xi_, g->q_w_, g->q_ap_, g->q_am_, g->min_cell_);
  return g;
}

const NodalInterval& Grid::interval(int i, bool plus) const {
  for (const auto& iv : intervals_)
    if (iv.index == i && iv.plus == plus) return iv;
  throw IndexOutOfWindow(std::string(plus ? "I+_" : "I-_") + std::to_string(i) + " is not in the grid");
}

bool Grid::has_interval(int i, bool plus) const {
  return std::any_of(intervals_.begin(), intervals_.end(),
                     [&](const NodalInterval& iv) { return iv.index == i && iv.plus == plus; });
}

std::size_t Grid::sigma_node(int i) const {
  for (const auto& iv : intervals_) {
    if (iv.plus && iv.index == i) return iv.first;
    if (!iv.plus && iv.index == i - 1) return iv.last;
  }
  throw IndexOutOfWindow("sigma_" + std::to_string(i) + " is not a grid node");
}

std::size_t Grid::tau_node(int i) const {
  for (const auto& iv : intervals_) {
    if (iv.plus && iv.index == i) return iv.last;
    if (!iv.plus && iv.index == i) return iv.first;
  }
  throw IndexOutOfWindow("tau_" + std::to_string(i) + " is not a grid node");
}

GridPtr make_grid(const WeightSpec& w, int N, int cells_per_interval) {
  if (N < 0) throw InputError("N must be >= 0");
  return Grid::build(w, -2 * N, 2 * N + 2, cells_per_interval, true);
}

GridPtr make_even_grid(const WeightSpec& w, int N, int cells_per_interval) {
  if (N < 1) throw InputError("even windows need N >= 1");
  return Grid::build(w, -2 * N, 2 * N, cells_per_interval, true);
}

GridFunction GridFunction::sample(GridPtr g, const std::function<double(double)>& f) {
  GridFunction u(g);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = f(g->t(k));
  if (g->periodic()) u.fold();
  return u;
}

double GridFunction::at(double t) const {
  const auto& x = grid->nodes();
  t = std::clamp(t, x.front(), x.back());
  auto it = std::upper_bound(x.begin(), x.end(), t);
  std::size_t k = it == x.end() ? x.size() - 2 : static_cast<std::size_t>(it - x.begin()) - 1;
  k = std::min(k, x.size() - 2);
  const double th = (t - x[k]) / (x[k + 1] - x[k]);
  return (1.0 - th) * values[k] + th * values[k + 1];
}

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

void GridFunction::fold() {
  if (grid->periodic()) values.back() = values.front();
}

double action(const GridFunction& u, double mu) { return kernels::parallel::action(*u.grid, u.values, mu); }

GridFunction gradient(const GridFunction& u, double mu) {
  GridFunction g(u.grid);
  kernels::parallel::gradient(*u.grid, u.values, mu, g.values);
  return g;
}

GridFunction hessian_apply(const GridFunction& u, double mu, const GridFunction& v) {
  GridFunction g(u.grid);
  kernels::parallel::hessian_apply(*u.grid, u.values, mu, v.values, g.values);
  return g;
}

double stiffness_integral(const GridFunction& u, std::size_t n0, std::size_t n1) {
  const Grid& g = *u.grid;
  double s = 0.0;
  for (std::size_t c = n0; c < n1; ++c) {
    const double d = u[c + 1] - u[c];
    s += d * d / g.h(c);
  }
  return s;
}

double quartic_integral(const GridFunction& u, double mu, std::size_t n0, std::size_t n1) {
  const Grid& g = *u.grid;
  double s = 0.0;
  for (std::size_t c = n0; c < n1; ++c)
    for (std::size_t q = g.q_begin(c); q < g.q_begin(c + 1); ++q) {
      const double x = g.q_xi()[q];
      const double uq = (1.0 - x) * u[c] + x * u[c + 1];
      s += g.q_w()[q] * (g.q_ap()[q] - mu * g.q_am()[q]) * uq * uq * uq * uq;
    }
  return s;
}

double interval_energy(const GridFunction& u, int i, bool plus) {
  const auto& iv = u.grid->interval(i, plus);
  return stiffness_integral(u, iv.first, iv.last);
}

double one_sided_derivative(const GridFunction& u, double mu, std::size_t k, Side side) {
  const Grid& g = *u.grid;
  std::size_t c;
  if (side == Side::right) {
    if (k + 1 >= g.node_count()) {
      if (!g.periodic()) throw InputError("no cell to the right of the last node");
      k = 0;
    }
    c = k;
  } else {
    if (k == 0) {
      if (!g.periodic()) throw InputError("no cell to the left of the first node");
      k = g.node_count() - 1;
    }
    c = k - 1;
  }
  const double slope = (u[c + 1] - u[c]) / g.h(c);
  double flux = 0.0;
  for (std::size_t q = g.q_begin(c); q < g.q_begin(c + 1); ++q) {
    const double x = g.q_xi()[q];
    const double uq = (1.0 - x) * u[c] + x * u[c + 1];
    const double phi = side == Side::right ? 1.0 - x : x;
    flux += g.q_w()[q] * (g.q_ap()[q] - mu * g.q_am()[q]) * uq * uq * uq * phi;
  }
  return side == Side::right ? slope + flux : slope - flux;
}

std::size_t dof_count(const Grid& g) { return g.periodic() ? g.cells() : g.cells() - 1; }

namespace {

// Node index -> dof index, or -1 for eliminated Dirichlet nodes.
inline long dof_of(const Grid& g, std::size_t k) {
  if (g.periodic()) return k == g.cells() ? 0 : static_cast<long>(k);
  if (k == 0 || k == g.cells()) return -1;
  return static_cast<long>(k) - 1;
}

}  // namespace

Eigen::SparseMatrix<double> weighted_operator(const GridPtr& gp, double stiff, const std::vector<double>& qc) {
  const Grid& g = *gp;
  const auto n = static_cast<Eigen::Index>(dof_count(g));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * g.cells());
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const double k = stiff / g.h(c);
    double m00 = 0.0, m01 = 0.0, m11 = 0.0;
    for (std::size_t q = g.q_begin(c); q < g.q_begin(c + 1); ++q) {
      const double x = g.q_xi()[q];
      const double wq = g.q_w()[q] * qc[q];
      m00 += wq * (1.0 - x) * (1.0 - x);
      m01 += wq * (1.0 - x) * x;
      m11 += wq * x * x;
    }
    const long a = dof_of(g, c), b = dof_of(g, c + 1);
    if (a >= 0) trip.emplace_back(a, a, k + m00);
    if (b >= 0) trip.emplace_back(b, b, k + m11);
    if (a >= 0 && b >= 0) {
      trip.emplace_back(a, b, -k + m01);
      trip.emplace_back(b, a, -k + m01);
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

std::vector<double> at_quadrature(const GridFunction& u) {
  const Grid& g = *u.grid;
  std::vector<double> out(g.q_xi().size());
  for (std::size_t c = 0; c < g.cells(); ++c)
    for (std::size_t q = g.q_begin(c); q < g.q_begin(c + 1); ++q) {
      const double x = g.q_xi()[q];
      out[q] = (1.0 - x) * u[c] + x * u[c + 1];
    }
  return out;
}

Eigen::SparseMatrix<double> jacobian(const GridFunction& u, double mu) {
  const Grid& g = *u.grid;
  auto uq = at_quadrature(u);
  for (std::size_t q = 0; q < uq.size(); ++q) uq[q] = -3.0 * (g.q_ap()[q] - mu * g.q_am()[q]) * uq[q] * uq[q];
  return weighted_operator(u.grid, 1.0, uq);
}

Eigen::VectorXd to_dofs(const GridFunction& f) {
  const Grid& g = *f.grid;
  Eigen::VectorXd x(static_cast<Eigen::Index>(dof_count(g)));
  for (std::size_t k = 0; k < f.size(); ++k) {
    const long d = dof_of(g, k);
    if (d >= 0) x[d] = f[k];
  }
  return x;
}

GridFunction from_dofs(const Eigen::VectorXd& x, const GridFunction& like) {
  GridFunction f = like;
  const Grid& g = *f.grid;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const long d = dof_of(g, k);
    if (d >= 0) f[k] = x[d];
  }
  return f;
}

namespace {

struct Ramp {
  double a0, a1, b0, b1;  // rise on [a0, a1], fall on [b0, b1]
};

Ramp ramp_of(const WeightSpec& w, int i) {
  const double q = 0.25 * (w.period() - w.tau());
  return {w.sigma(i) - q, w.sigma(i), w.tau_i(i), w.tau_i(i) + q};
}

}  // namespace

double cutoff(const WeightSpec& w, int i, double t) {
  const auto r = ramp_of(w, i);
  if (t <= r.a0 || t >= r.b1) return 0.0;
  if (t >= r.a1 && t <= r.b0) return 1.0;
  const double s = t < r.a1 ? (t - r.a0) / (r.a1 - r.a0) : (r.b1 - t) / (r.b1 - r.b0);
  return 0.5 * (1.0 - std::cos(std::numbers::pi * s));
}

double cutoff_derivative(const WeightSpec& w, int i, double t) {
  const auto r = ramp_of(w, i);
  if (t <= r.a0 || t >= r.b1 || (t >= r.a1 && t <= r.b0)) return 0.0;
  if (t < r.a1) return 0.5 * std::numbers::pi / (r.a1 - r.a0) * std::sin(std::numbers::pi * (t - r.a0) / (r.a1 - r.a0));
  return -0.5 * std::numbers::pi / (r.b1 - r.b0) * std::sin(std::numbers::pi * (r.b1 - t) / (r.b1 - r.b0));
}

}  // namespace multibump
