#pragma once

#include "multibump/assembly.hpp"
#include "multibump/errors.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>

namespace multibump {

/// Dirichlet problem on the block [tau_i, sigma_{i+l+1}]: l positivity
/// intervals enclosed by negativity intervals, with u = x and u = y at the
/// ends, |u(sigma_j)| <= K and int over I+_j of u'^2 <= r^2 inside.
struct ConnectionProblem {
  int i = -1;
  int l = 1;
  int k_bound = 1;
  double x = 0.0;
  double y = 0.0;
  double mu = 0.0;
  double K = 1.0;
  double r = 1.0;

  double t_begin(const WeightSpec& w) const { return w.tau_i(i); }
  double t_end(const WeightSpec& w) const { return w.sigma(i + l + 1); }
  /// Throws InputError when an invariant fails.
  void validate() const;
};

struct ConnectionOptions {
  int cells_per_interval = 400;
  /// Polynomial grading of the two outer negativity intervals toward the block ends.
  double end_grading = 2.0;
  double tol = 1e-10;
  int max_iterations = 500;
  /// Relative distance to a cap under which the cap counts as active.
  double cap_margin = 1e-8;
};

struct ConnectionSolution {
  GridFunction u;
  GridFunction v;  // d u / d x
  GridFunction z;  // d u / d y
  double slope_left = 0.0;   // u'(t_begin+)
  double slope_right = 0.0;  // u'(t_end-)
  double action = 0.0;       // (1/2) int u'^2 - (1/4) int a_mu u^4 over the block
  int iterations = 0;
  int newton_steps = 0;
  int zeros = 0;                     // zeros of u on the block, endpoints included
  bool monotone = false;             // u' keeps one strict sign on every cell
  std::vector<double> plus_energy;   // int over each interior I+_j of u'^2
  std::vector<double> sigma_values;  // u(sigma_j) at each interior I+_j
};

/// Block grid carrying [tau_i, sigma_{i+l+1}] with Dirichlet ends.
GridPtr connection_grid(const WeightSpec& w, const ConnectionProblem& p, int cells_per_interval,
                        double end_grading = 2.0);

/// Minimizes the block action over the capped set by descent steps kept
/// feasible by backtracking, switching to Newton where the Hessian is positive
/// definite. Throws InteriorityFailure if a cap is active at convergence,
/// NonConvergence otherwise.
ConnectionSolution solve_connection(const WeightSpec& w, const ConnectionProblem& p,
                                    const ConnectionOptions& opts = {},
                                    std::optional<GridFunction> start = std::nullopt);

/// v'' + 3 a_mu u^2 v = 0 with (v, z) = (1, 0) and (0, 1) at the ends.
/// Throws SingularLinearization.
std::pair<GridFunction, GridFunction> sensitivities(const GridFunction& u, double mu);

/// One-sided end slopes of a solution of the linearized equation.
std::pair<double, double> linear_end_slopes(const GridFunction& u, double mu, const GridFunction& v);

struct EnergyDerivatives {
  double dJdx = 0.0;  // -u'(t_begin+)
  double dJdy = 0.0;  // u'(t_end-)
  double fd_dJdx = 0.0;
  double fd_dJdy = 0.0;
  double rel_err_x = 0.0;
  double rel_err_y = 0.0;
};

/// Analytic derivatives of the block action and their central finite
/// difference cross-check with step h (default 1e-4 max(K, 1)).
EnergyDerivatives energy_derivatives(const WeightSpec& w, const ConnectionProblem& p, const ConnectionSolution& sol,
                                     const ConnectionOptions& opts = {}, std::optional<double> h = std::nullopt);

struct SensitivityCheck {
  double rel_err_v = 0.0;  // sup |fd - v| / sup |v|
  double rel_err_z = 0.0;
};

/// Central differences of u in (x, y) against (v, z), step h = h_rel K.
SensitivityCheck sensitivity_fd_check(const WeightSpec& w, const ConnectionProblem& p, const ConnectionSolution& sol,
                                      const ConnectionOptions& opts = {}, double h_rel = 1e-5);

struct SensitivitySigns {
  bool v_positive = false, v_decreasing = false;
  bool z_positive = false, z_increasing = false;
  double dv_left = 0.0, dv_right = 0.0;
  double dz_left = 0.0, dz_right = 0.0;
  bool far_slope_bound = false;  // |v'(end-)|, |z'(begin+)| <= 2 / block length
  double near_bound_margin = 0.0;  // 2K/len + 5 ||u'||_inf - max(|x v'(begin+)|, |y z'(end-)|)
  bool combined_left_negative = false;  // v' + z' < 0 at the left end
  bool combined_right_positive = false;
};

SensitivitySigns sensitivity_signs(const ConnectionProblem& p, const ConnectionSolution& sol);

/// Solves from n_starts random feasible starts; true iff all agree with the
/// first to 1e-6 in sup norm.
bool uniqueness_probe(const WeightSpec& w, const ConnectionProblem& p, int n_starts, std::uint64_t seed = 1,
                      const ConnectionOptions& opts = {}, double* spread = nullptr);

/// Zeros of a nodal function, counting runs of exact zeros once.
int count_zeros(const GridFunction& u);

nlohmann::json to_json(const ConnectionSolution& s);

}  // namespace multibump
