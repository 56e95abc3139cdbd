#pragma once

// Shooting family G_a on (0,1], its a -> infinity limit K, the half-aperture
// theta_a produced by each member, and the critical half-angle computed by
// a closed form, a rational quadrature and the K profile.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "wedgewar/errors.hpp"

namespace wedgewar {

// Shooting parameter value that selects the limit profile K.
inline constexpr double kLimitA = std::numeric_limits<double>::infinity();

struct OdeConfig {
  double rel_tol = 1e-12;
  double abs_tol = 1e-14;
  double y_min = 1e-6;  // lower integration cutoff; power-law tail below
  std::size_t max_steps = 200000;

  void validate() const {
    if (!(y_min > 0.0 && y_min < 1.0))
      throw DomainError("OdeConfig: y_min must lie in (0,1)");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
      throw DomainError("OdeConfig: tolerances must be positive");
    if (max_steps < 1) throw DomainError("OdeConfig: max_steps must be >= 1");
  }

  // Same configuration with both tolerances divided by `factor`.
  OdeConfig tightened(double factor) const {
    OdeConfig out = *this;
    out.rel_tol /= factor;
    out.abs_tol /= factor;
    return out;
  }
};

namespace detail {

inline void require_exponent(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    std::ostringstream os;
    os << "exponent p must be a finite real > 1, got " << p;
    throw DomainError(os.str());
  }
}

inline void require_shooting(double a) {
  if (!(a > 0.0)) {
    std::ostringstream os;
    os << "shooting parameter a must be > 0 (or infinite), got " << a;
    throw DomainError(os.str());
  }
}

inline double inverse_or_zero(double a) { return std::isinf(a) ? 0.0 : 1.0 / a; }

// d/dt of g = y^2 G along t = -log y. Written without the -2g + 2g
// cancellation that the direct substitution produces near y = 0.
inline double scaled_rhs(double inv_a, double p, double y, double g) {
  const double y2 = y * y;
  const double num = 8.0 * p * y2 * y * inv_a + 16.0 * p * y2 * y2 + 2.0 * p * g * y * inv_a +
                     4.0 * (3.0 * p - 4.0) * y2 * g;
  return num / (4.0 * y2 + (p - 1.0) * g);
}

}  // namespace detail

// Right-hand side F_a(y, w) of G' = -F_a(y, G). a = kLimitA gives F_infinity.
inline double eval_slope(double a, double y, double w, double p) {
  detail::require_exponent(p);
  detail::require_shooting(a);
  if (!(y > 0.0)) throw DomainError("eval_slope: y must be > 0");
  if (!(w >= 0.0)) throw DomainError("eval_slope: w must be >= 0");
  const double inv_a = detail::inverse_or_zero(a);
  const double num = 8.0 * p * (inv_a + 2.0 * y) +
                     (2.0 * p * inv_a + 4.0 * (3.0 * p - 2.0) * y + 2.0 * (p - 1.0) * y * w) * w;
  return num / (y * y * (4.0 + (p - 1.0) * w));
}

namespace detail {

// Node spacing in t = -log y: 1/512 away from y = 1, graded down near y = 1
// to resolve two scales there. Small a gives a layer of width ~ a / (2p);
// large p bends G where (p-1) G ~ 4, i.e. at 1 - y ~ 4 / ((p-1) G'(1)).
inline std::vector<double> graded_t_grid(double a, double p, double t_max) {
  constexpr double kCoarse = 1.0 / 512.0;
  constexpr double kPerLayer = 256.0;
  const double slope_one = eval_slope(a, 1.0, 0.0, p);
  const double layer = std::min({1.0, a / (2.0 * p), 4.0 / ((p - 1.0) * slope_one)});
  std::vector<double> t{0.0};
  while (t.back() < t_max) {
    const double step = std::min(kCoarse, (layer + t.back()) / kPerLayer);
    t.push_back(t.back() + step);
  }
  t.back() = t_max;
  if (t.size() > 2 && t[t.size() - 1] - t[t.size() - 2] < 0.25 * kCoarse) t.erase(t.end() - 2);
  return t;
}

}  // namespace detail

// Solution of G' = -F_a(y, G), G(1) = 0, sampled on [y_min, 1].
//
// Internally the profile stores g(t) = y^2 G(y) on a graded grid in
// t = -log y together with dg/dt, and interpolates with cubic Hermite
// polynomials. g tends to a finite constant as y -> 0, which is what makes
// the G ~ c / y^2 blow-up harmless.
class GProfile {
 public:
  struct Sample {
    double y;
    double G;
  };

  double a() const { return a_; }
  double p() const { return p_; }
  bool is_limit() const { return std::isinf(a_); }
  double y_min() const { return std::exp(-t_max_); }
  const OdeConfig& config() const { return cfg_; }
  int interp_order() const { return 3; }
  std::size_t ode_steps() const { return ode_steps_; }

  // Samples ordered by increasing y; the last one is (1, 0).
  std::vector<Sample> samples() const {
    std::vector<Sample> out;
    out.reserve(g_.size());
    for (std::size_t i = g_.size(); i-- > 0;) {
      const double y = i + 1 == g_.size() ? y_min() : std::exp(-t_[i]);
      out.push_back({y, i == 0 ? 0.0 : g_[i] / (y * y)});
    }
    return out;
  }

  // y^2 G(y). Below y_min g is continued linearly in y.
  double scaled(double y) const {
    if (!(y > 0.0) || y > 1.0) {
      if (y == 0.0) return tail_coefficient();
      throw DomainError("GProfile: y must lie in (0,1]");
    }
    return scaled_at_t(-std::log(y));
  }

  double G(double y) const {
    if (!(y > 0.0) || y > 1.0) throw DomainError("GProfile: y must lie in (0,1]");
    if (y == 1.0) return 0.0;
    return scaled(y) / (y * y);
  }

  // g(t) with t = -log y, the variable the profile is stored in.
  double scaled_at_t(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= t_max_) return g_.back() - dg_.back() * std::expm1(t_max_ - t);
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
    if (i + 1 >= t_.size()) i = t_.size() - 2;
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * g_[i] + h10 * h * dg_[i] + h01 * g_[i + 1] + h11 * h * dg_[i + 1];
  }

  // lim_{y->0} y^2 G(y), extrapolated linearly in y from y_min.
  double tail_coefficient() const { return g_.back() + dg_.back(); }

  // -G'(1) = F_a(1, 0).
  double slope_at_one() const { return eval_slope(a_, 1.0, 0.0, p_); }

  double t_max() const { return t_max_; }

 private:
  friend GProfile solve_G(double a, double p, const OdeConfig& cfg);

  double a_ = 1.0;
  double p_ = 2.0;
  double t_max_ = 0.0;
  std::vector<double> t_;
  std::vector<double> g_;
  std::vector<double> dg_;
  OdeConfig cfg_;
  std::size_t ode_steps_ = 0;
};

// Integrates the G_a problem backward from y = 1 (G = 0) to y_min with an
// adaptive Dormand-Prince pair, in the variable t = -log y.
inline GProfile solve_G(double a, double p, const OdeConfig& cfg = {}) {
  detail::require_exponent(p);
  detail::require_shooting(a);
  cfg.validate();

  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 1>;

  const double inv_a = detail::inverse_or_zero(a);
  auto rhs = [inv_a, p](const State& x, State& dxdt, double t) {
    dxdt[0] = detail::scaled_rhs(inv_a, p, std::exp(-t), x[0]);
  };

  GProfile out;
  out.a_ = a;
  out.p_ = p;
  out.cfg_ = cfg;
  out.t_max_ = -std::log(cfg.y_min);
  out.t_ = detail::graded_t_grid(a, p, out.t_max_);
  const std::size_t n = out.t_.size();
  out.g_.assign(n, 0.0);
  out.dg_.assign(n, 0.0);

  auto stepper = ode::make_dense_output(cfg.abs_tol, cfg.rel_tol, ode::runge_kutta_dopri5<State>());
  stepper.initialize(State{0.0}, 0.0, std::min(1e-4, out.t_[1]));

  State node{};
  State slope{};
  rhs(State{0.0}, slope, 0.0);
  out.dg_[0] = slope[0];

  std::size_t next = 1;
  std::size_t steps = 0;
  while (next < n) {
    if (++steps > cfg.max_steps) {
      std::ostringstream os;
      os << "solve_G(a=" << a << ", p=" << p << "): exceeded " << cfg.max_steps
         << " steps before reaching y_min";
      throw NonConvergenceError(os.str());
    }
    stepper.do_step(rhs);
    while (next < n) {
      const double t = out.t_[next];
      if (t > stepper.current_time()) break;
      stepper.calc_state(t, node);
      if (!std::isfinite(node[0])) throw NonConvergenceError("solve_G: solution left the finite range");
      out.g_[next] = node[0];
      rhs(node, slope, t);
      out.dg_[next] = slope[0];
      ++next;
    }
  }
  out.ode_steps_ = steps;

  // G(y) = g e^{2t} must increase strictly with t.
  for (std::size_t i = 1; i < n; ++i) {
    const double prev = out.g_[i - 1] * std::exp(2.0 * out.t_[i - 1]);
    const double cur = out.g_[i] * std::exp(2.0 * out.t_[i]);
    if (!(cur > prev)) throw NonConvergenceError("solve_G: computed profile is not strictly monotone");
  }
  return out;
}

// log K(y_min) / (-log y_min). Tends to 2, but only like 2 + log c / (-log y).
inline double asymptotic_exponent_check(const GProfile& profile) {
  if (!profile.is_limit()) throw DomainError("asymptotic_exponent_check: profile must be the K limit");
  if (profile.y_min() > 1e-3 * (1.0 + 1e-12))
    throw DomainError("asymptotic_exponent_check: requires y_min <= 1e-3");
  const double y = profile.y_min();
  return std::log(profile.G(y)) / -std::log(y);
}

// Local log-log slope -d log G / d log y = y F_a(y, G(y)) / G(y), exact from the ODE.
inline double local_log_slope(const GProfile& profile, double y) {
  const double G = profile.G(y);
  if (!(G > 0.0)) throw DomainError("local_log_slope: G vanishes at y");
  return y * eval_slope(profile.a(), y, G, profile.p()) / G;
}

namespace detail {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

// Adaptive Gauss-Kronrod; the error estimate is the disagreement between
// the 31- and 61-point rules.
template <class F>
QuadratureResult gauss_kronrod(F f, double lo, double hi, double rel_tol) {
  namespace q = boost::math::quadrature;
  const double coarse = q::gauss_kronrod<double, 31>::integrate(f, lo, hi, 20, rel_tol);
  const double fine = q::gauss_kronrod<double, 61>::integrate(f, lo, hi, 20, rel_tol);
  return {fine, std::abs(fine - coarse)};
}

// int_0^1 du / (u sqrt(G(u))).
//   [1-delta, 1]: G ~ F_a(1,0) (1-u), closed analytically
//   [u_s, 1-delta]: u = 1 - v^2 removes the square-root singularity
//   [y_min, u_s]: integrate dt / sqrt(G) in t = -log u
//   [0, y_min]: power-law tail G = c / u^2 gives y_min / sqrt(c)
inline QuadratureResult half_aperture_integral(const GProfile& prof, double rel_tol) {
  constexpr double kDelta = 1e-10;
  constexpr double kTSplit = 0.5;
  QuadratureResult total;

  const double s1 = prof.slope_at_one();
  total.value += 2.0 * std::sqrt(kDelta / s1);

  const double v_lo = std::sqrt(kDelta);
  const double v_hi = std::sqrt(-std::expm1(-kTSplit));
  auto near_one = [&prof](double v) {
    const double v2 = v * v;
    // u sqrt(G) = sqrt(g) with g = u^2 G; |du| = 2 v dv
    return 2.0 * v / std::sqrt(prof.scaled_at_t(-std::log1p(-v2)));
  };
  auto piece = gauss_kronrod(near_one, v_lo, v_hi, rel_tol);
  total.value += piece.value;
  total.error += piece.error;

  auto body = [&prof](double t) { return 1.0 / std::sqrt(prof.scaled_at_t(t) * std::exp(2.0 * t)); };
  const double t_max = prof.t_max();
  const double cuts[] = {kTSplit, 2.0, 5.0, 9.0, t_max};
  for (std::size_t i = 0; i + 1 < std::size(cuts); ++i) {
    const double lo = std::min(cuts[i], t_max);
    const double hi = std::min(cuts[i + 1], t_max);
    if (hi <= lo) continue;
    piece = gauss_kronrod(body, lo, hi, rel_tol);
    total.value += piece.value;
    total.error += piece.error;
  }

  total.value += prof.y_min() / std::sqrt(prof.tail_coefficient());
  return total;
}

inline void check_quadrature(const QuadratureResult& r, double tol, const char* what) {
  if (!std::isfinite(r.value) || r.error > tol) {
    std::ostringstream os;
    os << what << ": quadrature error estimate " << r.error << " exceeds " << tol;
    throw AccuracyError(os.str());
  }
}

}  // namespace detail

// Half-aperture int_0^1 du / (u sqrt(G_a(u))) for an already solved profile.
inline double theta_a(const GProfile& profile) {
  const double tol = std::max(1e-13, 10.0 * profile.config().rel_tol);
  const auto r = detail::half_aperture_integral(profile, tol);
  detail::check_quadrature(r, std::max(1e-9, 1e3 * tol), "theta_a");
  return r.value;
}

inline double theta_a(double a, double p, const OdeConfig& cfg = {}) {
  if (std::isinf(a)) throw DomainError("theta_a: a must be finite (use k_route_half_angle for the limit)");
  return theta_a(solve_G(a, p, cfg));
}

// Critical half-angle (pi/2) [1 - (1/2) sqrt(2(p-1)/p)].
inline double critical_half_angle_closed(double p) {
  detail::require_exponent(p);
  return 0.5 * std::numbers::pi * (1.0 - 0.5 * std::sqrt(2.0 * (p - 1.0) / p));
}

// Integrand 1/2 of the rational form of lim theta_a (after y = K(u), y = z^2).
inline double rational_integrand(double z, double p) {
  const double z2 = z * z;
  return (4.0 + (p - 1.0) * z2) / (2.0 * (p - 1.0) * z2 * z2 + 4.0 * (3.0 * p - 2.0) * z2 + 16.0 * p);
}

// 2 int_0^inf rational_integrand dz, adaptive on [0, 1e3] and a three-term
// asymptotic series for the tail.
inline double critical_half_angle_quadrature(double p, double tol = 1e-12) {
  detail::require_exponent(p);
  constexpr double kCutoff = 1e3;
  auto f = [p](double z) { return rational_integrand(z, p); };
  detail::QuadratureResult sum;
  const double cuts[] = {0.0, 0.5, 2.0, 10.0, 100.0, kCutoff};
  for (std::size_t i = 0; i + 1 < std::size(cuts); ++i) {
    const auto piece = detail::gauss_kronrod(f, cuts[i], cuts[i + 1], std::max(1e-3 * tol, 1e-14));
    sum.value += piece.value;
    sum.error += piece.error;
  }
  // rational_integrand = (s/2)(1 + c1 s + c2 s^2 + ...), s = 1/z^2
  const double b = 4.0 / (p - 1.0);
  const double c = 2.0 * (3.0 * p - 2.0) / (p - 1.0);
  const double d = 8.0 * p / (p - 1.0);
  const double c1 = b - c;
  const double c2 = c * c - d - b * c;
  const double Z = kCutoff;
  const double tail = 0.5 * (1.0 / Z + c1 / (3.0 * std::pow(Z, 3)) + c2 / (5.0 * std::pow(Z, 5)));
  // first neglected term is O(Z^-7) times a coefficient of size c^3
  const double tail_err = std::abs(c * c * c + d * c) / (7.0 * std::pow(Z, 7));
  sum.error += tail_err;
  sum.value += tail;
  detail::check_quadrature(sum, tol / 2.0, "critical_half_angle_quadrature");
  return 2.0 * sum.value;
}

// lim_{a -> infinity} theta_a computed from the K profile.
inline double k_route_half_angle(double p, const OdeConfig& cfg = {}) {
  return theta_a(solve_G(kLimitA, p, cfg));
}

struct CriticalAngleResult {
  double p = 0.0;
  double half_angle_closed = 0.0;
  double half_angle_quadrature = 0.0;
  double discrepancy = 0.0;
  double tolerance = 0.0;

  bool within_tolerance() const { return discrepancy <= tolerance; }
  double full_angle() const { return 2.0 * half_angle_closed; }
};

inline CriticalAngleResult critical_angle(double p, double tol = 1e-10) {
  CriticalAngleResult r;
  r.p = p;
  r.half_angle_closed = critical_half_angle_closed(p);
  r.half_angle_quadrature = critical_half_angle_quadrature(p, std::min(tol, 1e-12));
  r.discrepancy = std::abs(r.half_angle_closed - r.half_angle_quadrature);
  r.tolerance = tol;
  return r;
}

}  // namespace wedgewar
