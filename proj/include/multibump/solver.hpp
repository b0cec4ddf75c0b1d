#pragma once

#include "multibump/assembly.hpp"
#include "multibump/constants.hpp"
#include "multibump/errors.hpp"
#include "multibump/localfield.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace multibump {

/// Finite window of a {0,1} code. Non-periodic windows list L_{-N}..L_N;
/// periodic windows list one period L_0..L_{m-1}.
class SymbolWindow {
 public:
  static SymbolWindow parse(const std::string& symbols, bool periodic, int N = 0);
  static SymbolWindow from(std::vector<int> symbols, bool periodic, int N = 0);

  bool periodic() const noexcept { return periodic_; }
  int N() const noexcept { return N_; }
  int period() const noexcept { return static_cast<int>(symbols_.size()); }
  const std::vector<int>& symbols() const noexcept { return symbols_; }
  /// Indices of the positivity intervals carried by the window grid.
  int first() const noexcept { return periodic_ ? 0 : -N_; }
  int last() const noexcept { return periodic_ ? period() - 1 : N_; }
  /// L_i; periodic windows extend by periodicity, others throw IndexOutOfWindow.
  int code(int i) const;
  /// Longest run of zeros (cyclic for periodic windows).
  int zero_run() const;
  std::string str() const;

  /// Periodic grid carrying the window.
  GridPtr make_grid(const WeightSpec& w, int cells_per_interval) const;

 private:
  std::vector<int> symbols_;
  bool periodic_ = false;
  int N_ = 0;
};

struct IntervalFlags {
  int index = 0;
  int code = 0;
  double energy = 0.0;        // int over I+_i of u'^2
  double minus_energy = 0.0;  // int over I-_i of u'^2
  bool large = false;
  bool tie = false;
  bool c1 = true, c2 = true, c3 = true, c4 = true;
  double d_sigma_left = 0.0;  // u'(sigma_i-)
  double d_tau_right = 0.0;   // u'(tau_i+)
  double minus_sup = 0.0;     // sup over I-_i of |u|
};

struct SolveReport {
  double mu = 0.0;
  double residual_inf = 0.0;
  std::vector<IntervalFlags> intervals;
  bool c1 = true, c2 = true, c3 = true, c4 = true;
  bool positivity = true;
  bool dichotomy = true;
  bool tie_flag = false;
  double min_value = 0.0;
  double slope_sup = 0.0;
  bool certified = false;
  std::vector<std::string> failures;
  std::vector<std::pair<double, int>> continuation_path;  // (mu, Newton iterations)
};

nlohmann::json to_json(const SolveReport& r);

class CertificationFailure : public Error {
 public:
  CertificationFailure(const std::string& what, SolveReport report)
      : Error(ErrorClass::certification, "CertificationFailure", what), report_(std::move(report)) {}
  const SolveReport& report() const noexcept { return report_; }

 private:
  SolveReport report_;
};

struct Solution {
  GridFunction u;
  double mu = 0.0;
  SymbolWindow window;
  SolveReport report;
};

struct SolveOptions {
  int cells_per_interval = 1000;
  double mu0 = 10.0;
  double growth = 2.0;
  int max_refinements = 8;
  double newton_tol = 1e-9;
  int max_newton = 60;
  /// Throw CertificationFailure when the final solution is not certified.
  bool require_certificate = true;
};

/// Ground bump on [0, tau] discretized with `cells` cells (matching the
/// positivity intervals of a window grid).
BumpProfile window_bump(const WeightSpec& w, int cells, const LocalOptions& opts = {});

/// The bump pasted on I+_i for L_i = 1 (translated by iT), zero elsewhere.
GridFunction initial_guess(const WeightSpec& w, const SymbolWindow& L, const BumpProfile& bump, const GridPtr& grid);

/// Damped Newton on gradient(u, mu) = 0. Returns the iteration count;
/// throws NewtonFailure.
int newton_solve(GridFunction& u, double mu, double tol, int max_iter);

/// Geometric continuation of a converged u from mu_from to mu_to (ratio
/// <= opts.growth, refined on failure). Returns the (mu, iterations) path.
std::vector<std::pair<double, int>> continue_solution(GridFunction& u, double mu_from, double mu_to,
                                                      const SolveOptions& opts);

/// Conditions (C1)-(C4), positivity and the energy dichotomy.
SolveReport check_membership(const GridFunction& u, double mu, const ConstantPack& consts, const SymbolWindow& L);

Solution solve_multibump(const WeightSpec& w, const SymbolWindow& L, double mu_target, const ConstantPack& consts,
                         const BumpProfile& bump, const SolveOptions& opts = {});

/// mu schedule mu0 g^j, j >= 0, up to and including the first value >= mu_max.
std::vector<double> geometric_schedule(double mu0, double g, double mu_max);

struct MuStarBracket {
  double mu_fail = 0.0;  // largest scheduled value that failed below mu_pass (0 if none)
  double mu_pass = 0.0;
  std::vector<std::vector<bool>> certified;  // [probe][schedule index]
  std::vector<double> schedule;
};

/// Smallest scheduled mu certifying every probe; throws ScheduleExhausted.
MuStarBracket estimate_mu_star(const WeightSpec& w, const std::vector<SymbolWindow>& probes,
                               const std::vector<double>& schedule, const ConstantPack& consts,
                               const BumpProfile& bump, const SolveOptions& opts = {});

struct Subharmonic {
  Solution solution;
  int minimal_period = 0;  // in units of T
};

/// Solves on one mT cell for a periodic code with period m.
Subharmonic subharmonic(const WeightSpec& w, const SymbolWindow& L, double mu, const ConstantPack& consts,
                        const BumpProfile& bump, const SolveOptions& opts = {});

/// Smallest divisor d of m with ||u(. + dT) - u|| <= tol ||u|| on an m-period cell.
int minimal_period(const GridFunction& u, int m, double rel_tol = 1e-6);

}  // namespace multibump
