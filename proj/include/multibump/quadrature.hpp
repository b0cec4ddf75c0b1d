#pragma once

#include <array>

namespace multibump::quadrature {

/// Five-point Gauss-Legendre rule on [0, 1]; exact for degree 9.
struct GaussLegendre5 {
  static constexpr int size = 5;
  static constexpr std::array<double, 5> nodes = {
      0.046910077030668003601, 0.23076534494715845448, 0.5,
      0.76923465505284154552, 0.95308992296933199640};
  static constexpr std::array<double, 5> weights = {
      0.11846344252809454376, 0.23931433524968323402, 0.28444444444444444444,
      0.23931433524968323402, 0.11846344252809454376};
};

/// Integrate f over [a, b] with `panels` equal Gauss-Legendre panels.
template <class F>
double integrate(F&& f, double a, double b, int panels = 1) {
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double left = a + p * h;
    for (int q = 0; q < GaussLegendre5::size; ++q)
      sum += GaussLegendre5::weights[q] * f(left + GaussLegendre5::nodes[q] * h);
  }
  return sum * h;
}

}  // namespace multibump::quadrature
