#pragma once

#include "multibump/assembly.hpp"

#include <span>
#include <vector>

// Hot loops of the discretization in two flavours: `serial` is the plain
// reference, `parallel` the OpenMP version used by default. Both must agree
// to rounding; the unit tests and the benchmark compare them.
namespace multibump::kernels {

struct HolderResult {
  double value = 0.0;
  std::size_t i = 0, j = 0;  // maximizing pair
};

namespace serial {
double action(const Grid& g, std::span<const double> u, double mu);
void gradient(const Grid& g, std::span<const double> u, double mu, std::span<double> out);
void hessian_apply(const Grid& g, std::span<const double> u, double mu, std::span<const double> v,
                   std::span<double> out);
/// sup |e_i - e_j| / |t_i - t_j|^alpha over pairs with |t_i - t_j| >= min_gap.
HolderResult holder_seminorm(std::span<const double> t, std::span<const double> e, double alpha, double min_gap);
}  // namespace serial

namespace parallel {
double action(const Grid& g, std::span<const double> u, double mu);
void gradient(const Grid& g, std::span<const double> u, double mu, std::span<double> out);
void hessian_apply(const Grid& g, std::span<const double> u, double mu, std::span<const double> v,
                   std::span<double> out);
HolderResult holder_seminorm(std::span<const double> t, std::span<const double> e, double alpha, double min_gap);
}  // namespace parallel

}  // namespace multibump::kernels
