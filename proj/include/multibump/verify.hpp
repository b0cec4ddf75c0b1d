#pragma once

#include "multibump/solver.hpp"

#include <json.hpp>

#include <vector>

namespace multibump {

struct NehariResiduals {
  double weak_inf = 0.0;       // (i): max |weak residual| over rows of V+
  double local_abs = 0.0;      // (ii): max over i in L, absolute
  double local_rel = 0.0;      //       relative to int over I+_i of u'^2
  double global_abs = 0.0;     // (iii)
  double global_rel = 0.0;
  double cutoff_rel = 0.0;     // (iv): max over i, relative to int (eta_i u)'^2
  std::vector<double> local_per_interval;
  std::vector<double> cutoff_per_interval;
};

NehariResiduals nehari_identities(const GridFunction& u, double mu, const SymbolWindow& L);
NehariResiduals nehari_identities(const Solution& sol);

/// sum over window periods of the cut-off eta_i, so that supports wrapping
/// around a periodic window are accounted for.
double window_cutoff(const Grid& g, int i, double t);
double window_cutoff_derivative(const Grid& g, int i, double t);

/// (int_{T-delta}^T int_{T-delta}^t a-)^{-1/3}, maximized with the mirror
/// integral at tau so the bound covers both ends.
double decay_constant(const WeightSpec& w, double delta);

struct DecaySample {
  double mu = 0.0;
  double interior_max = 0.0;  // max over negativity intervals of |u| on [tau_i + delta, sigma_{i+1} - delta]
  double boundary_max = 0.0;  // max(|u(tau_i)|, |u(sigma_{i+1})|) at the maximizing interval
  double bound = 0.0;         // C_delta (boundary_max / mu)^{1/3}
  bool bound_holds = false;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double half_width = 0.0;  // 95% confidence half-width of the slope
};

LinearFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

DecaySample decay_sample(const GridFunction& u, double mu, double delta);

struct LimitDistance {
  double sup = 0.0;
  double holder = 0.0;     // sup + [u - limit]_alpha
  double lipschitz = 0.0;  // sup + [u - limit]_1
  double holder_seminorm = 0.0;
  double lipschitz_seminorm = 0.0;
  std::vector<int> index;
  std::vector<int> code;
  std::vector<double> w2_plus;   // W^{2,inf} distance on I+_i to the limit (P2 / P3)
  std::vector<double> p1_minus;  // ||u||_inf(I-_i) + int over I-_i of u'^2 (P1)
};

/// Distance of u to the pasted limit profile built from `bump` (same mesh).
LimitDistance limit_distance(const GridFunction& u, double mu, const BumpProfile& bump, const SymbolWindow& L,
                             double alpha = 0.5, bool use_serial_kernel = false);

struct OracleCheck {
  double max_rel = 0.0;  // max over nodes of |u_fem - u_oracle| / ||u||_inf
  int intervals = 0;
};

/// Re-solves every nodal interval by shooting from the FEM boundary values and
/// compares the trajectories at the nodes.
OracleCheck oracle_residual(const GridFunction& u, double mu, double tol = 1e-12);

/// Multiple-shooting re-solve of a Dirichlet block seeded by u at every
/// `stride`-th node, compared with u at all nodes (absolute sup gap in max_rel
/// scaled by ||u||_inf).
OracleCheck block_oracle_residual(const GridFunction& u, double mu, std::size_t stride = 50, double tol = 1e-12);

/// Kendall rank correlation between x and y.
double kendall_tau(const std::vector<double>& x, const std::vector<double>& y);

struct SweepPoint {
  double mu = 0.0;
  bool certified = false;
  SolveReport report;
  DecaySample decay;
  LimitDistance distance;
  NehariResiduals identities;
};

struct AsymptoticReport {
  std::vector<SweepPoint> points;
  LinearFit decay_fit;
  double delta = 0.0;
  double c_delta = 0.0;
  double alpha = 0.5;
  bool bounds_hold = false;
};

struct SweepOptions {
  SolveOptions solve;
  double delta = 0.25;
  double alpha = 0.5;
};

/// Continuation along increasing mu_list; each point is certified and audited.
/// Throws InsufficientSweep when the list spans under two decades.
AsymptoticReport asymptotic_sweep(const WeightSpec& w, const SymbolWindow& L, const std::vector<double>& mu_list,
                                  const ConstantPack& consts, const BumpProfile& bump, const SweepOptions& opts = {});

/// Fitted decay exponent over the sweep.
double decay_rate(const AsymptoticReport& rep);

nlohmann::json to_json(const NehariResiduals& r);
nlohmann::json to_json(const AsymptoticReport& r);

}  // namespace multibump
