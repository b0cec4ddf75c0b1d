#pragma once

#include "multibump/localfield.hpp"
#include "multibump/weight.hpp"

#include <json.hpp>

#include <optional>

namespace multibump {

struct ConstantPack {
  double r = 0.0;
  double zeta = 0.0;
  double K = 0.0;
  double rho = 0.0;       // Cauchy-Schwarz bound of the sup
  double rho_bump = 0.0;  // the sup evaluated on the ground bump (a lower bound)
  int k = 1;
  double c = 0.0;
  double c_zeta = 0.0;
  double t_bar = 0.0;     // pinned zero realizing c_zeta
  int zeta_halvings = 0;
};

/// (32 ||a+|| tau^3)^{-1/2}.
double compute_r(const WeightSpec& w);

struct ZetaChoice {
  double zeta = 0.0;
  double c = 0.0;
  double c_zeta = 0.0;
  double t_bar = 0.0;
  int halvings = 0;
  double margin = 0.0;  // 1 - 2||a+||(c + c_zeta) zeta^3
};

/// Halve zeta from min((T - tau)/4, tau/4) until 2||a+||(c + c_zeta) zeta^3 <= 0.9.
/// `c` is the ground level computed with the same options.
ZetaChoice choose_zeta(const WeightSpec& w, double c, const LocalOptions& opts = {});

/// 16 [2K/(T - tau) + bound of the two integral terms] with the
/// Cauchy-Schwarz estimates over {|u(0)|, |u(tau)| <= 1, int u'^2 <= 2(c + c_zeta)}.
double bound_rho(const WeightSpec& w, double c, double c_zeta, double K);
/// The same expression with u a ground bump, where the integrals reduce to the
/// endpoint slopes: 16 [2K/(T - tau) + |u'(0+)| + |u'(tau-)|].
double bump_rho(const WeightSpec& w, const BumpProfile& bump, double K);

struct ConstantOptions {
  LocalOptions local;
  std::optional<double> K;  // default 2 max bump
  int k = 1;
};

struct LocalData {
  ConstantPack pack;
  BumpProfile bump;
  double lambda1 = 0.0;
};

LocalData compute_constants(const WeightSpec& w, const ConstantOptions& opts = {});

nlohmann::json to_json(const ConstantPack& p);

}  // namespace multibump
