#pragma once

#include "multibump/weight.hpp"

#include <array>
#include <optional>
#include <vector>

// Independent initial-value integrator for u'' + a_mu(t) u^3 = 0.
//
// Nothing here touches the finite-element grid or its quadrature tables:
// integrals are carried as extra ODE components, one-sided weight limits
// come from restarting the integration at every breakpoint of a.
namespace multibump::oracle {

struct IvpState {
  double t = 0.0;
  double u = 0.0;
  double du = 0.0;
};

/// Augmented state (u, u', int u'^2, v, v', w, w') with v and w the derivatives
/// of u with respect to the initial slope and the initial value.
using State = std::array<double, 7>;

/// One accepted Dormand-Prince step with its continuous extension.
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  std::array<State, 5> coeff{};  // r1..r5 of the order-4 interpolant
  State at(double t) const;
};

class Trajectory {
 public:
  void push(DenseStep step) { steps_.push_back(step); }
  const std::vector<DenseStep>& steps() const noexcept { return steps_; }
  bool empty() const noexcept { return steps_.empty(); }
  double t_begin() const { return steps_.front().t0; }
  double t_end() const { return steps_.back().t0 + steps_.back().h; }
  /// Dense evaluation; t is clamped into the covered range.
  State at(double t) const;

 private:
  std::vector<DenseStep> steps_;
};

struct IntegrateOptions {
  double tol = 1e-10;
  double blow_up = 1e6;
  /// Fixed step size (> 0 disables adaptivity; still stops at breakpoints).
  double fixed_step = 0.0;
  /// Stop at the first downward zero crossing of u after the start.
  bool stop_at_zero = false;
  /// When false, escape ends the run with blew_up set instead of throwing.
  bool throw_on_blow_up = true;
  std::size_t max_steps = 20'000'000;
};

struct IntegrateResult {
  IvpState final;
  double energy = 0.0;      // int u'^2 over the integrated range
  double dfinal_u = 0.0;    // d u(t_end) / d (initial slope)
  double dfinal_du = 0.0;
  double dfinal_u_x = 0.0;  // d u(t_end) / d (initial value)
  double dfinal_du_x = 0.0;
  bool hit_zero = false;
  bool blew_up = false;
  Trajectory trajectory;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Adaptive Dormand-Prince 5(4) with restarts at every breakpoint of a.
/// A t_end before from.t integrates backward in time.
/// Throws BlowUp when |u| exceeds opts.blow_up.
IntegrateResult integrate(const WeightSpec& w, double mu, IvpState from, double t_end,
                          const IntegrateOptions& opts = {});

struct ShootResult {
  double slope = 0.0;  // u'(t0+)
  double end_slope = 0.0;  // u'(t1-)
  int iterations = 0;
  IntegrateResult run;
};

/// Newton on the initial slope s so that u(t1; x, s) = y.
/// Throws NewtonFailure or BlowUp.
ShootResult shoot_dirichlet(const WeightSpec& w, double mu, double t0, double t1, double x, double y,
                            double tol = 1e-12, std::optional<double> slope_guess = std::nullopt);

struct MultipleShootResult {
  std::vector<double> nodes;
  std::vector<double> slopes;  // u'(t_j+) per segment
  std::vector<IntegrateResult> runs;
  int iterations = 0;
  double residual = 0.0;  // max matching defect
  double at(double t) const;
};

/// Multiple shooting over the partition `nodes`: one IVP per segment, with
/// continuity of u and u' at the inner nodes and u = x, y at the ends.
/// `values` (one per node) and `slopes` (one per segment) seed Newton.
/// Throws NewtonFailure or BlowUp.
MultipleShootResult shoot_multiple(const WeightSpec& w, double mu, const std::vector<double>& nodes, double x,
                                   double y, std::vector<double> values, std::vector<double> slopes,
                                   double tol = 1e-12);

struct GroundLevel {
  double level = 0.0;      // (1/4) int_0^tau u'^2
  double slope_left = 0.0; // u'(0+)
  double slope_right = 0.0;
  double amplitude = 0.0;
};

/// Positive Dirichlet solution of u'' + a+ u^3 = 0 on [0, tau] by shooting.
/// Requires a+ piecewise constant on [0, tau]; throws ScopeError otherwise.
GroundLevel brute_ground_level(const WeightSpec& w, double tol = 1e-12);

}  // namespace multibump::oracle
