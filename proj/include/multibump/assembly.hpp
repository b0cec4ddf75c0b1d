#pragma once

#include "multibump/weight.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <vector>

namespace multibump {

/// Nodal times nu_j: nu_{2i} = sigma_i, nu_{2i+1} = tau_i.
double nodal_time(const WeightSpec& w, int j);

/// One positivity or negativity interval of a grid.
struct NodalInterval {
  bool plus;            // I+_i = [sigma_i, tau_i] or I-_i = [tau_i, sigma_{i+1}]
  int index;            // i
  std::size_t first;    // first node
  std::size_t last;     // last node
};

/// P1 mesh over [nu_{j0}, nu_{j1}], uniform inside each nodal interval, with
/// a precomputed Gauss table for the weight (cells are split at every weight
/// breakpoint).
class Grid {
 public:
  /// end_grading p > 1 clusters the first and last nodal intervals toward the
  /// grid ends, t = a + (b - a) s^p (Dirichlet grids only).
  static std::shared_ptr<const Grid> build(const WeightSpec& w, int j_begin, int j_end, int cells_per_interval,
                                           bool periodic, double end_grading = 1.0);
  /// Dirichlet grid on an arbitrary [t0, t1] inside one period, recorded as
  /// a single interval I+_0 when it lies in [0, tau] (local problems).
  static std::shared_ptr<const Grid> build_span(const WeightSpec& w, double t0, double t1, int cells);

  const WeightSpec& weight() const noexcept { return *weight_; }
  bool periodic() const noexcept { return periodic_; }
  int cells_per_interval() const noexcept { return m_; }
  std::size_t cells() const noexcept { return nodes_.size() - 1; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  double t(std::size_t k) const { return nodes_[k]; }
  double h(std::size_t c) const { return nodes_[c + 1] - nodes_[c]; }
  double min_cell() const noexcept { return min_cell_; }
  double t_begin() const { return nodes_.front(); }
  double t_end() const { return nodes_.back(); }

  const std::vector<NodalInterval>& intervals() const noexcept { return intervals_; }
  /// Interval I+_i or I-_i; throws IndexOutOfWindow.
  const NodalInterval& interval(int i, bool plus) const;
  bool has_interval(int i, bool plus) const;
  /// Node at sigma_i / tau_i, throws IndexOutOfWindow.
  std::size_t sigma_node(int i) const;
  std::size_t tau_node(int i) const;

  /// Quadrature points of cell c are q_begin(c) .. q_begin(c + 1).
  std::size_t q_begin(std::size_t c) const { return q_offset_[c]; }
  const std::vector<double>& q_xi() const noexcept { return q_xi_; }  // local coordinate in [0, 1]
  const std::vector<double>& q_w() const noexcept { return q_w_; }    // weight including the cell length
  const std::vector<double>& q_ap() const noexcept { return q_ap_; }  // a+ at the point
  const std::vector<double>& q_am() const noexcept { return q_am_; }  // a- at the point

 private:
  std::shared_ptr<const WeightSpec> weight_;
  bool periodic_ = false;
  int m_ = 0;
  double min_cell_ = 0.0;
  std::vector<double> nodes_;
  std::vector<NodalInterval> intervals_;
  std::vector<std::size_t> q_offset_;
  std::vector<double> q_xi_, q_w_, q_ap_, q_am_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Periodic grid on I_N = [sigma_{-N}, sigma_{N+1}].
GridPtr make_grid(const WeightSpec& w, int N, int cells_per_interval);
/// Periodic grid on [sigma_{-N}, sigma_N], 2N periods (even codes).
GridPtr make_even_grid(const WeightSpec& w, int N, int cells_per_interval);

/// Nodal values of a continuous P1 function; on periodic grids the last
/// value duplicates the first.
struct GridFunction {
  GridPtr grid;
  std::vector<double> values;

  GridFunction() = default;
  explicit GridFunction(GridPtr g) : grid(std::move(g)), values(grid->node_count(), 0.0) {}
  GridFunction(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {}

  static GridFunction sample(GridPtr g, const std::function<double(double)>& f);

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }
  /// Linear interpolation; t is clamped to the grid range.
  double at(double t) const;
  double max_abs() const;
  /// Re-impose the periodic identification (last value := first).
  void fold();
};

enum class Side { left, right };

double action(const GridFunction& u, double mu);
/// Weak residual int u' phi_k' - int a_mu u^3 phi_k per node; periodic grids
/// fold the two endpoint rows together.
GridFunction gradient(const GridFunction& u, double mu);
/// J''(u)[v, phi_k] per node.
GridFunction hessian_apply(const GridFunction& u, double mu, const GridFunction& v);
/// int over I+_i or I-_i of u'^2.
double interval_energy(const GridFunction& u, int i, bool plus);
/// int over nodes [n0, n1] of a+ u^4 (mu = 0) or a_mu u^4.
double quartic_integral(const GridFunction& u, double mu, std::size_t n0, std::size_t n1);
double stiffness_integral(const GridFunction& u, std::size_t n0, std::size_t n1);

/// One-sided derivative at node k recovered from the weak form on the cell
/// adjacent on `side`: exact for solutions of the discrete equation.
double one_sided_derivative(const GridFunction& u, double mu, std::size_t k, Side side);

/// Jacobian K - 3 M(a_mu u^2) over the free nodes. On periodic grids the free
/// nodes are 0..n-1; otherwise the interior nodes 1..n-1 (dof d = node d + 1).
Eigen::SparseMatrix<double> jacobian(const GridFunction& u, double mu);
/// Stiffness matrix plus the given diagonal-free mass weight: K + M(c), c per quadrature point.
Eigen::SparseMatrix<double> weighted_operator(const GridPtr& g, double stiff,
                                              const std::vector<double>& qp_coeff);

/// Free-node restriction and extension (Dirichlet endpoints are kept from `like`).
Eigen::VectorXd to_dofs(const GridFunction& f);
GridFunction from_dofs(const Eigen::VectorXd& x, const GridFunction& like);
std::size_t dof_count(const Grid& g);

/// Values of u interpolated at quadrature points of the grid.
std::vector<double> at_quadrature(const GridFunction& u);

/// The cut-off eta_i: 1 on I+_i, cosine ramps on the quarter-intervals
/// [sigma_i - (T - tau)/4, sigma_i] and [tau_i, tau_i + (T - tau)/4], 0 outside.
double cutoff(const WeightSpec& w, int i, double t);
double cutoff_derivative(const WeightSpec& w, int i, double t);

}  // namespace multibump
