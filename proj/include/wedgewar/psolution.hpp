#pragma once

// u(x) = r^2 f(theta) on a wedge symmetric about the positive x axis, with
// exact gradient and Hessian, plus finite-difference checks of the game
// p-Laplacian.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "wedgewar/errors.hpp"
#include "wedgewar/profile.hpp"
#include "wedgewar/wedge_ode.hpp"

namespace wedgewar {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

// Gradients smaller than this make the infinity Laplacian undefined.
inline constexpr double kCriticalGradient = 1e-8;

// phi(x) = (x - c)^T A (x - c) + (xi, x - c)
struct QuadraticForm {
  Mat2 A = Mat2::Zero();
  Vec2 xi = Vec2::UnitX();
  Vec2 center = Vec2::Zero();

  void validate() const {
    if (!A.isApprox(A.transpose(), 1e-14) && (A - A.transpose()).norm() > 1e-14)
      throw DomainError("QuadraticForm: A must be symmetric");
    if (!(xi.norm() > 0.0)) throw DomainError("QuadraticForm: xi must be nonzero");
  }

  double operator()(const Vec2& x) const {
    const Vec2 d = x - center;
    return d.dot(A * d) + xi.dot(d);
  }
};

inline double conjugate_exponent(double p) {
  detail::require_exponent(p);
  return p / (p - 1.0);
}

// Exact game p-Laplacian of a quadratic form at its center.
inline double deltap_quadratic(const QuadraticForm& qf, double p) {
  const double q = conjugate_exponent(p);
  const double n2 = qf.xi.squaredNorm();
  if (!(n2 > 0.0)) throw CriticalPointError("deltap_quadratic: xi = 0, infinity Laplacian undefined");
  return (2.0 / p) * qf.A.trace() + (1.0 / q - 1.0 / p) * 2.0 * qf.xi.dot(qf.A * qf.xi) / n2;
}

// (1/p) Delta + (1/q - 1/p) Delta_inf from a gradient and Hessian.
inline double game_p_laplacian(const Vec2& grad, const Mat2& hess, double p) {
  const double q = conjugate_exponent(p);
  const double n2 = grad.squaredNorm();
  if (!(std::sqrt(n2) >= kCriticalGradient))
    throw CriticalPointError("game p-Laplacian: gradient vanishes, infinity Laplacian undefined");
  return hess.trace() / p + (1.0 / q - 1.0 / p) * grad.dot(hess * grad) / n2;
}

// Central differences of a scalar field; O(h^2).
template <class Field>
double game_p_laplacian_fd(const Field& field, const Vec2& x, double h, double p) {
  if (!(h > 0.0)) throw DomainError("game_p_laplacian_fd: h must be > 0");
  const Vec2 ex{h, 0.0};
  const Vec2 ey{0.0, h};
  const double f0 = field(x);
  const double fxp = field(Vec2(x + ex)), fxm = field(Vec2(x - ex));
  const double fyp = field(Vec2(x + ey)), fym = field(Vec2(x - ey));
  const double fpp = field(Vec2(x + ex + ey)), fpm = field(Vec2(x + ex - ey));
  const double fmp = field(Vec2(x - ex + ey)), fmm = field(Vec2(x - ex - ey));
  const Vec2 grad{(fxp - fxm) / (2.0 * h), (fyp - fym) / (2.0 * h)};
  Mat2 hess;
  hess(0, 0) = (fxp - 2.0 * f0 + fxm) / (h * h);
  hess(1, 1) = (fyp - 2.0 * f0 + fym) / (h * h);
  hess(0, 1) = hess(1, 0) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
  return game_p_laplacian(grad, hess, p);
}

struct UValue {
  double u;
  Vec2 grad;
  Mat2 hess;
};

// Bounds sampled over the translated wedge used by the exit-time argument.
struct DerivativeBounds {
  double sup_hessian = 0.0;             // sup ||D^2 u||_F
  double sup_third = 0.0;               // sup |D^3 u[d,d,d]| over unit d, |x| >= alpha + 1
  double sup_r_third = 0.0;             // sup r |D^3 u[d,d,d]|
  double inf_gradient = 0.0;            // inf |grad u|
  double sup_hessian_over_gradient = 0.0;  // sup ||D^2 u||_F^2 / |grad u|^2
  std::size_t samples = 0;
};

class PSolution {
 public:
  PSolution() = default;

  // u is r^2 f on the profile's own wedge; the game domain is the wedge of
  // half-angle wedge_half_angle with vertex at `translation`.
  PSolution(AngularProfile profile, double wedge_half_angle, Vec2 translation)
      : profile_(std::move(profile)), half_angle_(wedge_half_angle), translation_(std::move(translation)) {
    if (!(half_angle_ > 0.0) || half_angle_ > profile_.theta_a() * (1.0 + 1e-12))
      throw DomainError("PSolution: wedge half-angle must lie in (0, theta_a]");
  }

  // Solution on W_eta itself.
  static PSolution exact(double eta, double p, std::size_t n_nodes = 1024, double tol = 1e-11) {
    AngularProfile prof = profile_for_half_angle(0.5 * eta, p, n_nodes, tol);
    const double half = prof.theta_a();
    return PSolution(std::move(prof), half, Vec2::Zero());
  }

  // u from the enlarged wedge W_eta1, eta1 = eta + enlargement (critical - eta),
  // and the game wedge W_eta shifted by 2 (alpha + 1) along the axis.
  static PSolution for_game(double eta, double p, double alpha, double enlargement = 0.05,
                            std::size_t n_nodes = 1024, double tol = 1e-11) {
    const double critical = 2.0 * critical_half_angle_closed(p);
    if (!(eta > 0.0) || eta >= critical) {
      std::ostringstream os;
      os << "PSolution::for_game: eta=" << eta << " must lie in (0, " << critical << ")";
      throw OutOfRangeError(os.str(), 0.5 * critical);
    }
    if (!(enlargement > 0.0 && enlargement < 1.0)) throw DomainError("PSolution::for_game: enlargement must lie in (0,1)");
    if (!(alpha > 0.0)) throw DomainError("PSolution::for_game: alpha must be > 0");
    const double eta1 = eta + enlargement * (critical - eta);
    return PSolution(profile_for_half_angle(0.5 * eta1, p, n_nodes, tol), 0.5 * eta, Vec2(2.0 * (alpha + 1.0), 0.0));
  }

  const AngularProfile& profile() const { return profile_; }
  double p() const { return profile_.p(); }
  double wedge_half_angle() const { return half_angle_; }
  const Vec2& translation() const { return translation_; }

  bool in_solution_wedge(const Vec2& x) const {
    return x.norm() == 0.0 || std::abs(std::atan2(x.y(), x.x())) <= profile_.theta_a() * (1.0 + 1e-12);
  }

  double u(const Vec2& x) const {
    const double r = x.norm();
    if (r == 0.0) return 0.0;
    const double th = std::atan2(x.y(), x.x());
    check_angle(th, x);
    return r * r * profile_.eval(th).f;
  }

  UValue eval_u(const Vec2& x) const {
    const double r = x.norm();
    if (r == 0.0) throw DomainError("eval_u: gradient and Hessian undefined at the vertex");
    const double th = std::atan2(x.y(), x.x());
    check_angle(th, x);
    const auto v = profile_.eval(th);
    const double c = std::cos(th), s = std::sin(th);
    Mat2 R;
    R << c, -s, s, c;
    const Vec2 grad = R * Vec2(2.0 * r * v.f, r * v.fp);
    Mat2 local;
    local << 2.0 * v.f, v.fp, v.fp, v.fpp + 2.0 * v.f;
    return {r * r * v.f, grad, R * local * R.transpose()};
  }

  // Directional third derivative by central differences of the exact Hessian.
  double third_directional(const Vec2& x, const Vec2& d) const {
    const double h = 1e-4 * x.norm();
    const Mat2 hp = eval_u(x + h * d).hess;
    const Mat2 hm = eval_u(x - h * d).hess;
    return d.dot((hp - hm) * d) / (2.0 * h);
  }

  // Suprema and infima by sampling: the game wedge on a polar grid about its
  // vertex out to `reach`, third derivatives over the unshifted wedge with
  // |x| >= alpha + 1 where the Taylor balls live.
  DerivativeBounds derivative_bounds(double alpha, double reach = 1e3, int n_radial = 96, int n_angular = 97,
                                     int n_dirs = 48) const {
    DerivativeBounds b;
    b.inf_gradient = std::numeric_limits<double>::infinity();
    const double half = half_angle_;
    auto angle = [&](int j) { return -half + 2.0 * half * j / (n_angular - 1); };

    for (int i = 0; i < n_radial; ++i) {
      // distance from the game-wedge vertex: 0 and then geometric up to reach
      const double d = i == 0 ? 0.0 : 1e-3 * std::pow(reach / 1e-3, static_cast<double>(i - 1) / (n_radial - 2));
      for (int j = 0; j < n_angular; ++j) {
        const double phi = angle(j);
        const Vec2 x = translation_ + d * Vec2(std::cos(phi), std::sin(phi));
        if (x.norm() == 0.0) continue;
        const UValue uv = eval_u(x);
        const double g = uv.grad.norm();
        const double hn = uv.hess.norm();
        b.sup_hessian = std::max(b.sup_hessian, hn);
        b.inf_gradient = std::min(b.inf_gradient, g);
        b.sup_hessian_over_gradient = std::max(b.sup_hessian_over_gradient, hn * hn / (g * g));
        ++b.samples;
      }
    }

    const double r0 = alpha + 1.0;
    for (double r : {r0, 1.5 * r0, 3.0 * r0}) {
      for (int j = 0; j < n_angular; ++j) {
        const double th = angle(j);
        const Vec2 x = r * Vec2(std::cos(th), std::sin(th));
        for (int k = 0; k < n_dirs; ++k) {
          const double a = std::numbers::pi * k / n_dirs;
          const double t3 = std::abs(third_directional(x, Vec2(std::cos(a), std::sin(a))));
          b.sup_third = std::max(b.sup_third, t3);
          b.sup_r_third = std::max(b.sup_r_third, r * t3);
        }
        ++b.samples;
      }
    }
    return b;
  }

 private:
  void check_angle(double th, const Vec2& x) const {
    if (std::abs(th) > profile_.theta_a() * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "PSolution: point (" << x.x() << ", " << x.y() << ") lies outside the wedge of half-angle "
         << profile_.theta_a();
      throw DomainError(os.str());
    }
  }

  AngularProfile profile_;
  double half_angle_ = 0.0;
  Vec2 translation_ = Vec2::Zero();
};

}  // namespace wedgewar
