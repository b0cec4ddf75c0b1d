#include "multibump/weight.hpp"

#include "multibump/errors.hpp"
#include "multibump/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace multibump {

namespace {

constexpr double kSignTolerance = 1e-12;

PieceKind kind_from_string(const std::string& s) {
  if (s == "poly") return PieceKind::poly;
  if (s == "samples") return PieceKind::samples;
  if (s == "sine") return PieceKind::sine;
  throw InputError("unknown weight piece kind '" + s + "'");
}

const char* kind_to_string(PieceKind k) {
  switch (k) {
    case PieceKind::poly: return "poly";
    case PieceKind::samples: return "samples";
    case PieceKind::sine: return "sine";
  }
  return "poly";
}

double floor_mod(double t, double period) { return t - period * std::floor(t / period); }

}  // namespace

double WeightPiece::eval(double t) const {
  switch (kind) {
    case PieceKind::poly: {
      const double s = t - t0;
      double acc = 0.0;
      for (auto it = data.rbegin(); it != data.rend(); ++it) acc = acc * s + *it;
      return acc;
    }
    case PieceKind::samples: {
      const auto n = data.size();
      const double x = (t - t0) / (t1 - t0) * static_cast<double>(n - 1);
      const auto k = static_cast<std::size_t>(std::clamp(std::floor(x), 0.0, static_cast<double>(n - 2)));
      const double f = x - static_cast<double>(k);
      return data[k] * (1.0 - f) + data[k + 1] * f;
    }
    case PieceKind::sine:
      return data[0] * std::sin(data[1] * t + data[2]);
  }
  return 0.0;
}

WeightDescription weight_description_from_json(const nlohmann::json& j) {
  WeightDescription d;
  try {
    d.period = j.at("T").get<double>();
    d.tau = j.at("tau").get<double>();
    for (const auto& p : j.at("pieces")) {
      WeightPiece piece;
      piece.t0 = p.at("t0").get<double>();
      piece.t1 = p.at("t1").get<double>();
      piece.kind = kind_from_string(p.at("kind").get<std::string>());
      piece.data = p.at("data").get<std::vector<double>>();
      d.pieces.push_back(std::move(piece));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed weight description: ") + e.what());
  }
  return d;
}

nlohmann::json to_json(const WeightDescription& d) {
  nlohmann::json pieces = nlohmann::json::array();
  for (const auto& p : d.pieces)
    pieces.push_back({{"t0", p.t0}, {"t1", p.t1}, {"kind", kind_to_string(p.kind)}, {"data", p.data}});
  return {{"T", d.period}, {"tau", d.tau}, {"pieces", pieces}};
}

WeightDescription load_weight_description(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open weight file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("weight file '" + path + "' is not valid JSON: " + e.what());
  }
  return weight_description_from_json(j);
}

namespace weights {

WeightDescription sine(double tau) {
  WeightDescription d;
  d.period = 2.0 * std::numbers::pi;
  d.tau = tau;
  d.pieces.push_back({0.0, d.period, PieceKind::sine, {1.0, 1.0, 0.0}});
  return d;
}

WeightDescription step(double tau, double period, double plus, double minus) {
  WeightDescription d;
  d.period = period;
  d.tau = tau;
  d.pieces.push_back({0.0, tau, PieceKind::poly, {plus}});
  d.pieces.push_back({tau, period, PieceKind::poly, {-minus}});
  return d;
}

}  // namespace weights

std::vector<double> default_validation_deltas(double period, double tau) {
  std::vector<double> deltas;
  for (int j = 2; j <= 8; ++j) deltas.push_back((period - tau) / std::ldexp(1.0, j));
  return deltas;
}

WeightSpec WeightSpec::build(WeightDescription description, std::span<const double> validation_deltas) {
  const double T = description.period;
  const double tau = description.tau;
  if (!(T > 0.0) || !(tau > 0.0) || !(tau < T))
    throw InputError("weight requires T > tau > 0");
  if (description.pieces.empty()) throw InputError("weight has no pieces");

  auto& pieces = description.pieces;
  std::sort(pieces.begin(), pieces.end(), [](const auto& a, const auto& b) { return a.t0 < b.t0; });
  const double cover_tol = 1e-12 * T;
  if (std::abs(pieces.front().t0) > cover_tol || std::abs(pieces.back().t1 - T) > cover_tol)
    throw InputError("weight pieces must cover [0, T]");
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    auto& p = pieces[k];
    if (!(p.t1 > p.t0)) throw InputError("weight piece with empty interval");
    if (k > 0 && std::abs(p.t0 - pieces[k - 1].t1) > cover_tol)
      throw InputError("weight pieces leave a gap or overlap");
    if (p.kind == PieceKind::poly && p.data.empty()) throw InputError("poly piece without coefficients");
    if (p.kind == PieceKind::samples && p.data.size() < 2) throw InputError("samples piece needs >= 2 values");
    if (p.kind == PieceKind::sine && p.data.size() != 3) throw InputError("sine piece needs {A, omega, phase}");
    for (double v : p.data)
      if (!std::isfinite(v)) throw InputError("non-finite weight data");
  }
  pieces.front().t0 = 0.0;
  pieces.back().t1 = T;

  WeightSpec w;
  w.period_ = T;
  w.tau_ = tau;

  // Cut at piece ends, tau, and sample knots.
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const auto& p = pieces[k];
    std::vector<double> cuts{p.t0, p.t1};
    if (tau > p.t0 && tau < p.t1) cuts.push_back(tau);
    if (p.kind == PieceKind::samples) {
      const auto n = p.data.size();
      for (std::size_t s = 1; s + 1 < n; ++s)
        cuts.push_back(p.t0 + (p.t1 - p.t0) * static_cast<double>(s) / static_cast<double>(n - 1));
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [&](double a, double b) { return b - a <= cover_tol; }),
               cuts.end());
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) w.segments_.push_back({cuts[c], cuts[c + 1], k});
  }
  w.description_ = std::move(description);

  // Sign structure (assumption A), sampled on every segment.
  double scale = 0.0;
  for (const auto& seg : w.segments_)
    for (int q = 0; q <= 64; ++q)
      scale = std::max(scale, std::abs(w.a_on_segment(&seg - w.segments_.data(), seg.t0 + (seg.t1 - seg.t0) * q / 64.0)));
  if (!(scale > 0.0)) throw SignStructureViolation("weight vanishes identically");
  const double tol = kSignTolerance * scale;
  for (std::size_t s = 0; s < w.segments_.size(); ++s) {
    const auto& seg = w.segments_[s];
    const bool positive_side = seg.t1 <= tau + cover_tol;
    constexpr int samples = 256;
    for (int q = 0; q <= samples; ++q) {
      const double t = seg.t0 + (seg.t1 - seg.t0) * q / static_cast<double>(samples);
      const double v = w.a_on_segment(s, t);
      if (positive_side && v < -tol)
        throw SignStructureViolation("a < 0 at t = " + std::to_string(t) + " inside [0, tau]");
      if (!positive_side && v > tol)
        throw SignStructureViolation("a > 0 at t = " + std::to_string(t) + " inside [tau, T]");
    }
  }
  if (!(w.integrate_plus(0.0, tau) > 0.0)) throw SignStructureViolation("a+ vanishes identically on [0, tau]");
  if (!(w.integrate_minus(tau, T) > 0.0)) throw SignStructureViolation("a- vanishes identically on [tau, T]");

  std::vector<double> deltas(validation_deltas.begin(), validation_deltas.end());
  if (deltas.empty()) deltas = default_validation_deltas(T, tau);
  for (double delta : deltas) {
    if (!(delta > 0.0) || delta > T - tau) throw InputError("validation delta outside (0, T - tau]");
    if (!(w.integrate_minus(tau, tau + delta) > 0.0))
      throw EdgeMassViolation("no negative mass on [tau, tau + " + std::to_string(delta) + "]");
    if (!(w.integrate_minus(T - delta, T) > 0.0))
      throw EdgeMassViolation("no negative mass on [T - " + std::to_string(delta) + ", T]");
  }

  // ||a+||_inf: dense sampling then golden-section refinement around the best sample.
  double best = 0.0;
  for (std::size_t s = 0; s < w.segments_.size(); ++s) {
    const auto& seg = w.segments_[s];
    if (seg.t1 > tau + cover_tol) continue;
    constexpr int samples = 512;
    const double h = (seg.t1 - seg.t0) / samples;
    int arg = 0;
    double local = -1.0;
    for (int q = 0; q <= samples; ++q) {
      const double v = w.a_on_segment(s, seg.t0 + q * h);
      if (v > local) local = v, arg = q;
    }
    double lo = seg.t0 + std::max(arg - 1, 0) * h;
    double hi = seg.t0 + std::min(arg + 1, samples) * h;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 80 && hi - lo > 1e-15 * T; ++it) {
      const double m1 = hi - g * (hi - lo);
      const double m2 = lo + g * (hi - lo);
      if (w.a_on_segment(s, m1) < w.a_on_segment(s, m2)) lo = m1; else hi = m2;
    }
    local = std::max(local, w.a_on_segment(s, 0.5 * (lo + hi)));
    best = std::max(best, local);
  }
  w.sup_a_plus_ = best;
  return w;
}

std::size_t WeightSpec::segment_of(double s) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), s,
                             [](double v, const Segment& seg) { return v < seg.t1; });
  if (it == segments_.end()) return segments_.size() - 1;
  return static_cast<std::size_t>(it - segments_.begin());
}

double WeightSpec::a_on_segment(std::size_t seg, double t_local) const {
  return description_.pieces[segments_[seg].piece].eval(t_local);
}

double WeightSpec::eval_on_segment(double mu, std::size_t seg, double t_local) const {
  const double v = a_on_segment(seg, t_local);
  return v >= 0.0 ? v : mu * v;
}

double WeightSpec::a(double t) const {
  const double s = floor_mod(t, period_);
  return a_on_segment(segment_of(s), s);
}

double WeightSpec::a_plus(double t) const { return std::max(0.0, a(t)); }
double WeightSpec::a_minus(double t) const { return std::max(0.0, -a(t)); }

double WeightSpec::eval(double mu, double t) const {
  const double v = a(t);
  return v >= 0.0 ? v : mu * v;
}

std::vector<double> WeightSpec::breakpoints_in(double t0, double t1) const {
  std::vector<double> out{t0};
  const auto first = static_cast<long>(std::floor(t0 / period_)) - 1;
  const auto last = static_cast<long>(std::ceil(t1 / period_)) + 1;
  for (long k = first; k <= last; ++k)
    for (const auto& seg : segments_) {
      const double b = seg.t0 + static_cast<double>(k) * period_;
      if (b > t0 && b < t1) out.push_back(b);
    }
  out.push_back(t1);
  std::sort(out.begin(), out.end());
  const double tol = 1e-13 * period_;
  out.erase(std::unique(out.begin(), out.end(), [&](double a, double b) { return b - a <= tol; }), out.end());
  if (out.back() != t1) out.back() = t1;
  return out;
}

namespace {

template <class F>
double integrate_parts(const WeightSpec& w, double t0, double t1, F&& part) {
  if (t1 <= t0) return 0.0;
  const auto bps = w.breakpoints_in(t0, t1);
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < bps.size(); ++k) {
    const double a = bps[k], b = bps[k + 1];
    const double mid = 0.5 * (a + b);
    const double shift = w.period() * std::floor(mid / w.period());
    const std::size_t seg = w.segment_of(mid - shift);
    sum += quadrature::integrate([&](double t) { return part(w.a_on_segment(seg, t - shift)); }, a, b, 4);
  }
  return sum;
}

}  // namespace

double WeightSpec::integrate_minus(double t0, double t1) const {
  return integrate_parts(*this, t0, t1, [](double v) { return std::max(0.0, -v); });
}

double WeightSpec::integrate_plus(double t0, double t1) const {
  return integrate_parts(*this, t0, t1, [](double v) { return std::max(0.0, v); });
}

WeightSpec WeightSpec::scaled(double s) const {
  if (!(s > 0.0)) throw InputError("weight scale must be positive");
  WeightDescription d = description_;
  for (auto& p : d.pieces) {
    if (p.kind == PieceKind::sine) p.data[0] *= s;
    else for (double& v : p.data) v *= s;
  }
  return build(std::move(d));
}

}  // namespace multibump
