#pragma once

// Tug-of-war with noise: parameters and canonical noise, domains, strategies,
// the one-step rule, and the psi identities for quadratic test functions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>

#include <boost/math/tools/minima.hpp>

#include "wedgewar/errors.hpp"
#include "wedgewar/psolution.hpp"
#include "wedgewar/rng.hpp"

namespace wedgewar {

struct GameParams {
  double p = 2.0;
  double q = 2.0;
  double beta = 2.0;
  double s = 1.0;
  double alpha = 2.0;
  double eps = 0.1;
  std::uint64_t seed = 0;

  // Two-point noise {+-s e2}: C11 = 0, C22 = s^2, so beta = q and alpha = 1 + s.
  static GameParams canonical(double p, double eps, std::uint64_t seed = 0) {
    if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("GameParams: p must be finite and > 1");
    GameParams g;
    g.p = p;
    g.q = p / (p - 1.0);
    g.beta = g.q;
    g.s = 1.0 / std::sqrt(p - 1.0);
    g.alpha = 1.0 + g.s;
    g.eps = eps;
    g.seed = seed;
    g.validate();
    return g;
  }

  double c11() const { return beta / q - 1.0; }
  double c22() const { return beta / p; }

  void validate() const {
    if (!(p > 1.0)) throw DomainError("GameParams: p must be > 1");
    if (std::abs(1.0 / p + 1.0 / q - 1.0) > 1e-12) throw DomainError("GameParams: 1/p + 1/q must equal 1");
    if (!(beta > 0.0)) throw DomainError("GameParams: beta must be > 0");
    if (!(s > 0.0)) throw DomainError("GameParams: noise scale s must be > 0");
    if (!(eps > 0.0)) throw DomainError("GameParams: eps must be > 0");
    if (!(alpha >= 1.0 + s - 1e-12)) throw DomainError("GameParams: alpha must be at least 1 + s");
    // the noise covariance must reproduce p(mu) = (C11 + C22 + 1) / C22
    if (std::abs(c22() - s * s) > 1e-12 * std::max(1.0, s * s))
      throw DomainError("GameParams: beta/p must equal the transverse noise variance s^2");
    if (std::abs((c11() + c22() + 1.0) / c22() - p) > 1e-9 * p)
      throw DomainError("GameParams: noise covariance is inconsistent with p");
  }
};

class Domain {
 public:
  struct Wedge {
    double eta;  // full aperture, symmetric about +x
    Vec2 vertex;
  };
  struct HalfPlane {
    Vec2 normal;  // unit, pointing inside
    double offset;
  };
  struct ParabolaLike {
    double A;
    double gamma;
  };
  enum class Kind { wedge, half_plane, parabola_like };

  static Domain wedge(double eta, Vec2 vertex = Vec2::Zero()) {
    if (!(eta > 0.0 && eta < 2.0 * std::numbers::pi)) throw DomainError("Domain::wedge: eta must lie in (0, 2 pi)");
    return Domain(Wedge{eta, std::move(vertex)});
  }
  // {x : (normal, x) > offset}
  static Domain half_plane(Vec2 normal = Vec2::UnitX(), double offset = 0.0) {
    const double n = normal.norm();
    if (!(n > 0.0)) throw DomainError("Domain::half_plane: normal must be nonzero");
    return Domain(HalfPlane{normal / n, offset});
  }
  // {(x, y) : x > 0, |y| < A x^gamma}
  static Domain parabola_like(double A, double gamma) {
    if (!(A > 0.0)) throw DomainError("Domain::parabola_like: A must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("Domain::parabola_like: gamma must lie in (0, 1)");
    return Domain(ParabolaLike{A, gamma});
  }

  Kind kind() const { return static_cast<Kind>(shape_.index()); }
  const Wedge& as_wedge() const { return std::get<Wedge>(shape_); }
  const HalfPlane& as_half_plane() const { return std::get<HalfPlane>(shape_); }
  const ParabolaLike& as_parabola() const { return std::get<ParabolaLike>(shape_); }

  std::string describe() const {
    std::ostringstream os;
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Wedge>)
            os << "wedge(eta=" << d.eta << ", vertex=(" << d.vertex.x() << ", " << d.vertex.y() << "))";
          else if constexpr (std::is_same_v<T, HalfPlane>)
            os << "half_plane(normal=(" << d.normal.x() << ", " << d.normal.y() << "), offset=" << d.offset << ")";
          else
            os << "parabola_like(A=" << d.A << ", gamma=" << d.gamma << ")";
        },
        shape_);
    return os.str();
  }

  bool contains(const Vec2& x) const {
    return std::visit(
        [&](const auto& d) -> bool {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Wedge>) {
            const Vec2 r = x - d.vertex;
            if (r.norm() == 0.0) return false;
            return std::abs(std::atan2(r.y(), r.x())) < 0.5 * d.eta;
          } else if constexpr (std::is_same_v<T, HalfPlane>) {
            return d.normal.dot(x) > d.offset;
          } else {
            return x.x() > 0.0 && std::abs(x.y()) < d.A * std::pow(x.x(), d.gamma);
          }
        },
        shape_);
  }

  double dist_to_boundary(const Vec2& x) const { return (x - project_to_boundary(x)).norm(); }

  // Nearest boundary point.
  Vec2 project_to_boundary(const Vec2& x) const {
    return std::visit(
        [&](const auto& d) -> Vec2 {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Wedge>) {
            const Vec2 r = x - d.vertex;
            Vec2 best = d.vertex;
            for (const Vec2& u : rays(d)) {
              const Vec2 cand = d.vertex + std::max(0.0, r.dot(u)) * u;
              if ((cand - x).norm() < (best - x).norm()) best = cand;
            }
            return best;
          } else if constexpr (std::is_same_v<T, HalfPlane>) {
            return x - (d.normal.dot(x) - d.offset) * d.normal;
          } else {
            return parabola_nearest(d, x);
          }
        },
        shape_);
  }

  // Boundary point within `radius` of x maximizing (dir, y); nearest point on ties.
  Vec2 boundary_point_maximizing(const Vec2& x, double radius, const Vec2& dir) const {
    const Vec2 nearest = project_to_boundary(x);
    if ((nearest - x).norm() > radius * (1.0 + 1e-12))
      throw DomainError("boundary_point_maximizing: no boundary point within the radius");
    Vec2 best = nearest;
    double best_val = dir.dot(nearest);
    auto consider = [&](const Vec2& cand) {
      if ((cand - x).norm() > radius * (1.0 + 1e-12)) return;
      const double val = dir.dot(cand);
      if (val > best_val + 1e-15 * (1.0 + std::abs(best_val))) {
        best = cand;
        best_val = val;
      }
    };
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Wedge>) {
            const Vec2 r = x - d.vertex;
            for (const Vec2& u : rays(d)) {
              const double tc = r.dot(u);
              const double rho2 = std::max(0.0, r.squaredNorm() - tc * tc);
              if (rho2 > radius * radius) continue;
              const double half = std::sqrt(radius * radius - rho2);
              const double lo = std::max(0.0, tc - half);
              const double hi = tc + half;
              if (hi < 0.0) continue;
              consider(d.vertex + lo * u);
              consider(d.vertex + hi * u);
            }
          } else if constexpr (std::is_same_v<T, HalfPlane>) {
            const Vec2 t = perp(d.normal);
            const double dist = d.normal.dot(x) - d.offset;
            const double half = std::sqrt(std::max(0.0, radius * radius - dist * dist));
            consider(nearest + half * t);
            consider(nearest - half * t);
          } else {
            // scan both branches over the feasible abscissae
            constexpr int kScan = 2048;
            const double lo = std::max(0.0, x.x() - radius);
            const double hi = x.x() + radius;
            for (int sgn : {1, -1})
              for (int i = 0; i <= kScan; ++i) {
                const double s = lo + (hi - lo) * i / kScan;
                consider(Vec2(s, sgn * d.A * std::pow(s, d.gamma)));
              }
          }
        },
        shape_);
    return best;
  }

  bool on_boundary(const Vec2& y, double tol = 1e-9) const {
    return dist_to_boundary(y) <= tol * (1.0 + y.norm());
  }

 private:
  using Shape = std::variant<Wedge, HalfPlane, ParabolaLike>;
  explicit Domain(Shape s) : shape_(std::move(s)) {}

  static std::array<Vec2, 2> rays(const Wedge& d) {
    const double h = 0.5 * d.eta;
    return {Vec2(std::cos(h), std::sin(h)), Vec2(std::cos(h), -std::sin(h))};
  }

  static Vec2 parabola_nearest(const ParabolaLike& d, const Vec2& x) {
    // same-side branch (the origin is shared); coarse scan then Brent
    const double sgn = x.y() < 0.0 ? -1.0 : 1.0;
    const double ya = std::abs(x.y());
    auto curve = [&](double s) { return Vec2(s, d.A * std::pow(s, d.gamma)); };
    auto dist2 = [&](double s) { return (curve(s) - Vec2(x.x(), ya)).squaredNorm(); };
    double bound = Vec2(x.x(), ya).norm();
    if (x.x() > 0.0) bound = std::min(bound, std::abs(ya - d.A * std::pow(x.x(), d.gamma)));
    const double lo = std::max(0.0, x.x() - bound);
    const double hi = std::max(lo, x.x() + bound);
    constexpr int kScan = 256;
    int best_i = 0;
    double best = dist2(lo);
    for (int i = 1; i <= kScan; ++i) {
      const double v = dist2(lo + (hi - lo) * i / kScan);
      if (v < best) {
        best = v;
        best_i = i;
      }
    }
    const double h = (hi - lo) / kScan;
    const double a = std::max(lo, lo + (best_i - 1) * h);
    const double b = std::min(hi, lo + (best_i + 1) * h);
    double s = lo + best_i * h;
    if (b > a) {
      const auto r = boost::math::tools::brent_find_minima(dist2, a, b, 52);
      if (r.second < best) s = r.first;
    }
    const Vec2 c = curve(s);
    return {c.x(), sgn * c.y()};
  }

  Shape shape_;
};

enum class Player : int { none = 0, one = 1, two = 2 };

struct GameState {
  Vec2 position = Vec2::Zero();
  std::uint64_t step = 0;
  bool terminal = false;
  std::optional<Vec2> exit_point;
  Player last_mover = Player::none;

  static GameState start(const Vec2& x) {
    GameState s;
    s.position = x;
    return s;
  }
};

struct MoveContext {
  const GameState& state;
  const Domain& domain;
  const GameParams& params;
};

class Strategy {
 public:
  enum class Kind { pull_neg_grad_u, pull_pos_grad_u, pull_axis, null_move, custom };
  using MoveFn = std::function<Vec2(const MoveContext&)>;

  static Strategy pull_neg_grad_u(std::shared_ptr<const PSolution> u) { return gradient(std::move(u), -1.0); }
  static Strategy pull_pos_grad_u(std::shared_ptr<const PSolution> u) { return gradient(std::move(u), 1.0); }

  // Interior: eps * direction. Boundary: exit maximizing (direction, x).
  static Strategy pull_axis(const Vec2& direction, std::string name = "axis") {
    const double n = direction.norm();
    if (!(n > 0.0)) throw DomainError("Strategy::pull_axis: direction must be nonzero");
    const Vec2 d = direction / n;
    Strategy s(Kind::pull_axis, std::move(name));
    s.interior_ = [d](const MoveContext& c) { return Vec2(c.params.eps * d); };
    s.boundary_ = [d](const MoveContext& c) {
      return c.domain.boundary_point_maximizing(c.state.position, c.params.alpha * c.params.eps, d);
    };
    return s;
  }

  static Strategy null_move() {
    Strategy s(Kind::null_move, "null");
    s.interior_ = [](const MoveContext&) { return Vec2(Vec2::Zero()); };
    s.boundary_ = nearest_exit;
    return s;
  }

  // A missing boundary rule exits at the nearest boundary point.
  static Strategy custom(std::string name, MoveFn interior, MoveFn boundary = {}) {
    if (!interior) throw DomainError("Strategy::custom: interior rule is required");
    Strategy s(Kind::custom, std::move(name));
    s.interior_ = std::move(interior);
    s.boundary_ = boundary ? std::move(boundary) : MoveFn(nearest_exit);
    return s;
  }

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  Vec2 interior_move(const MoveContext& c) const { return interior_(c); }
  Vec2 boundary_move(const MoveContext& c) const { return boundary_(c); }

 private:
  Strategy(Kind k, std::string name) : kind_(k), name_(std::move(name)) {}

  static Vec2 nearest_exit(const MoveContext& c) { return c.domain.project_to_boundary(c.state.position); }

  static Strategy gradient(std::shared_ptr<const PSolution> u, double sign) {
    if (!u) throw DomainError("Strategy: a solution is required for gradient pulls");
    Strategy s(sign < 0 ? Kind::pull_neg_grad_u : Kind::pull_pos_grad_u, sign < 0 ? "neg_grad_u" : "pos_grad_u");
    auto unit_grad = [u](const Vec2& x) {
      const Vec2 g = u->eval_u(x).grad;
      const double n = g.norm();
      if (n < kCriticalGradient) throw CriticalPointError("Strategy: grad u vanishes at the current position");
      return Vec2(g / n);
    };
    s.interior_ = [unit_grad, sign](const MoveContext& c) { return Vec2(sign * c.params.eps * unit_grad(c.state.position)); };
    if (sign < 0) {
      s.boundary_ = nearest_exit;
    } else {
      s.boundary_ = [unit_grad](const MoveContext& c) {
        return c.domain.boundary_point_maximizing(c.state.position, c.params.alpha * c.params.eps,
                                                  unit_grad(c.state.position));
      };
    }
    return s;
  }

  Kind kind_;
  std::string name_;
  MoveFn interior_;
  MoveFn boundary_;
};

// z = +-s perp(v); consumes exactly one draw, also for v = 0.
inline Vec2 sample_noise(const Vec2& v, const GameParams& params, CounterRng& rng) {
  const double sign = rng.coin() ? 1.0 : -1.0;
  return sign * params.s * perp(v);
}

inline GameState game_step(const GameState& state, const Strategy& s_one, const Strategy& s_two,
                           const Domain& domain, const GameParams& params, CounterRng& rng) {
  if (state.terminal) throw DomainError("game_step: state is terminal");
  const bool one_wins = rng.coin();
  const Strategy& mover = one_wins ? s_one : s_two;
  const MoveContext ctx{state, domain, params};
  GameState next = state;
  next.last_mover = one_wins ? Player::one : Player::two;
  ++next.step;

  const double reach = params.alpha * params.eps;
  if (domain.dist_to_boundary(state.position) > reach) {
    const Vec2 v = mover.interior_move(ctx);
    if (!(v.norm() <= params.eps * (1.0 + 1e-12))) {
      std::ostringstream os;
      os << "strategy " << mover.name() << " returned |v| = " << v.norm() << " > eps = " << params.eps;
      throw StrategyViolationError(os.str());
    }
    next.position = state.position + v + sample_noise(v, params, rng);
  } else {
    const Vec2 y = mover.boundary_move(ctx);
    if (!((y - state.position).norm() <= reach * (1.0 + 1e-9)) || !domain.on_boundary(y)) {
      std::ostringstream os;
      os << "strategy " << mover.name() << " returned an invalid exit point (" << y.x() << ", " << y.y() << ")";
      throw StrategyViolationError(os.str());
    }
    next.position = y;
    next.exit_point = y;
    next.terminal = true;
  }
  return next;
}

// B = (beta/q - beta/p) A + (beta/p) Tr(A) I
inline Mat2 psi_matrix(const QuadraticForm& qf, const GameParams& params) {
  return (params.beta / params.q - params.beta / params.p) * qf.A +
         (params.beta / params.p) * qf.A.trace() * Mat2::Identity();
}

inline double psi_exact(const QuadraticForm& qf, const Vec2& v, const GameParams& params) {
  return qf.xi.dot(v) + v.dot(psi_matrix(qf, params) * v);
}

// 2 xi^T B xi / |xi|^2
inline double infinity_laplacian_psi(const QuadraticForm& qf, const GameParams& params) {
  const double n2 = qf.xi.squaredNorm();
  if (!(n2 > 0.0)) throw CriticalPointError("infinity_laplacian_psi: xi = 0");
  return 2.0 * qf.xi.dot(psi_matrix(qf, params) * qf.xi) / n2;
}

struct McValue {
  double estimate;
  double stderr_;
};

// Average of phi(center + v + z) over n noise draws.
inline McValue psi_mc(const QuadraticForm& qf, const Vec2& v, const GameParams& params, std::size_t n,
                      CounterRng& rng) {
  if (n < 1000) throw DomainError("psi_mc: need at least 1000 samples");
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double val = qf(qf.center + v + sample_noise(v, params, rng));
    const double delta = val - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (val - mean);
  }
  const double var = m2 / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace wedgewar
