#pragma once

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace multibump {

enum class PieceKind { poly, samples, sine };

/// One piece of the weight on [t0, t1] inside the base period [0, T].
///   poly:    data are ascending coefficients in (t - t0)
///   samples: data are values at equally spaced points t0..t1, interpolated linearly
///   sine:    data = {A, omega, phase}, a(t) = A sin(omega t + phase) in absolute time
struct WeightPiece {
  double t0 = 0.0;
  double t1 = 0.0;
  PieceKind kind = PieceKind::poly;
  std::vector<double> data;

  double eval(double t) const;
};

struct WeightDescription {
  double period = 0.0;
  double tau = 0.0;
  std::vector<WeightPiece> pieces;
};

WeightDescription weight_description_from_json(const nlohmann::json& j);
nlohmann::json to_json(const WeightDescription& d);
WeightDescription load_weight_description(const std::string& path);

namespace weights {
/// a(t) = sin t, T = 2 pi.
WeightDescription sine(double tau = 3.14159265358979323846);
/// a = +plus on [0, tau], -minus on [tau, T].
WeightDescription step(double tau = 1.0, double period = 2.0, double plus = 1.0, double minus = 1.0);
}  // namespace weights

/// Validated T-periodic weight with a single sign change at tau.
///
/// All queries take absolute times and reduce them modulo T. Internally the
/// description is cut at every piece boundary, at tau, and at every sample
/// knot, so a+ and a- are smooth on each resulting sub-piece.
class WeightSpec {
 public:
  /// Sub-piece of the base period on which a is smooth and one-signed.
  struct Segment {
    double t0, t1;
    std::size_t piece;
  };

  static WeightSpec build(WeightDescription description,
                          std::span<const double> validation_deltas = {});

  double period() const noexcept { return period_; }
  double tau() const noexcept { return tau_; }
  double sup_a_plus() const noexcept { return sup_a_plus_; }
  const WeightDescription& description() const noexcept { return description_; }

  double sigma(int i) const noexcept { return i * period_; }
  double tau_i(int i) const noexcept { return tau_ + i * period_; }

  double a(double t) const;
  double a_plus(double t) const;
  double a_minus(double t) const;
  /// a_mu(t) = a+(t) - mu a-(t).
  double eval(double mu, double t) const;

  /// Smooth continuation of a on segment `seg` of the period containing
  /// `period_index`; used to take one-sided limits at breakpoints.
  double a_on_segment(std::size_t seg, double t_local) const;
  double eval_on_segment(double mu, std::size_t seg, double t_local) const;

  std::span<const Segment> segments() const noexcept { return segments_; }
  /// Segment index containing base-period time s in [0, T); ties go right.
  std::size_t segment_of(double s) const;
  /// All breakpoints of a in [t0, t1], including both ends.
  std::vector<double> breakpoints_in(double t0, double t1) const;

  /// Integral of a- over [t0, t1] (absolute times, any length).
  double integrate_minus(double t0, double t1) const;
  double integrate_plus(double t0, double t1) const;

  /// The weight s * a.
  WeightSpec scaled(double s) const;

 private:
  WeightDescription description_;
  double period_ = 0.0;
  double tau_ = 0.0;
  double sup_a_plus_ = 0.0;
  std::vector<Segment> segments_;
};

/// Default validation deltas (T - tau) / 2^j, j = 2..8.
std::vector<double> default_validation_deltas(double period, double tau);

}  // namespace multibump
