#pragma once

#include "multibump/assembly.hpp"
#include "multibump/weight.hpp"

#include <optional>
#include <vector>

namespace multibump {

/// Minimizer of the local Nehari problem on a Dirichlet sub-grid of [0, tau].
struct BumpProfile {
  GridFunction u;
  double level = 0.0;      // (1/4) int u'^2
  double dleft = 0.0;      // u'(t0+)
  double dright = 0.0;     // u'(t1-)
  int sign = 1;
  double amplitude = 0.0;  // max |u|
  int newton_iterations = 0;
  int descent_iterations = 0;
};

struct LocalOptions {
  int cells_per_unit = 200;  // cells per unit length of [0, tau]
  double newton_tol = 1e-10;
  int max_descent = 5000;
  int max_newton = 50;
};

/// Number of cells the options give an interval of the given length.
int local_cells(double length, const LocalOptions& opts);

/// Nehari scaling factor (int u'^2 / int a+ u^4)^{1/2}; throws DegenerateDirection.
double nehari_factor(const GridFunction& u);
GridFunction nehari_project(const GridFunction& u);

/// Ground state of u'' + a+ u^3 = 0 on [t0, t1] (a sub-interval of [0, tau]),
/// with the extra zero pins given as node indices. The start has a taller
/// sine arch on the `dominant`-th piece between zeros.
BumpProfile minimize_nehari(const GridPtr& grid, const std::vector<std::size_t>& pins,
                            const LocalOptions& opts = {}, std::size_t dominant = 0);

BumpProfile ground_state(const WeightSpec& w, const LocalOptions& opts = {});
BumpProfile ground_state_on(const WeightSpec& w, double t0, double t1, const LocalOptions& opts = {});

struct PinnedLevel {
  double level = 0.0;
  double t_bar = 0.0;
  /// Which side of t_bar carries the bump (the other side vanishes).
  bool bump_left = true;
  BumpProfile bump;
};

/// c_zeta = inf over Nehari functions vanishing at some t in [zeta, tau - zeta].
PinnedLevel pinned_zero_level(const WeightSpec& w, double zeta, const LocalOptions& opts = {});
/// Direct minimization on [0, tau] with u(t_bar) = 0 (t_bar snaps to a node).
BumpProfile pinned_minimizer(const WeightSpec& w, double t_bar, const LocalOptions& opts = {});

struct Eigenpair {
  double lambda1 = 0.0;
  GridFunction eigenfunction;  // positive, max 1
  int iterations = 0;
};

/// Smallest lambda with phi'' + lambda a+ phi = 0, phi(0) = phi(tau) = 0, by
/// inverse iteration.
Eigenpair principal_eigenvalue(const WeightSpec& w, const LocalOptions& opts = {});

struct LocalLevels {
  double c = 0.0;
  double c_zeta = 0.0;
  double zeta = 0.0;
  double t_bar = 0.0;
  double lambda1 = 0.0;
  GridFunction eigenfunction;
};

}  // namespace multibump
