#pragma once

// Angular factor f of u = r^2 f(theta): calibration of the shooting
// parameter to a wedge half-angle, the square-root ODE y' = -sqrt(H_a(y)),
// and a grid representation with quintic Hermite evaluation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "wedgewar/errors.hpp"
#include "wedgewar/wedge_ode.hpp"

namespace wedgewar {

struct HValue {
  double H;
  double dH;
};

// H_a(y) = y^2 G_a(y/a) and its derivative from the closed-form ODE for H_a.
inline HValue eval_H(double a, double y, double p, const GProfile& g_profile) {
  if (g_profile.a() != a || g_profile.p() != p)
    throw DomainError("eval_H: profile was solved for a different (a, p)");
  constexpr double kSlack = 1e-12;
  if (y < -kSlack * a || y > a * (1.0 + kSlack)) {
    std::ostringstream os;
    os << "eval_H: y=" << y << " outside [0, a=" << a << "]";
    throw DomainError(os.str());
  }
  y = std::clamp(y, 0.0, a);
  const double H = a * a * g_profile.scaled(y / a);
  const double dH = -(8.0 * p * y * y * (1.0 + 2.0 * y) + (2.0 * p + 4.0 * (3.0 * p - 4.0) * y) * H) /
                    (4.0 * y * y + (p - 1.0) * H);
  return {H, dH};
}

// Left-hand side of 4y^2[1 + 2y + y''/p] + y'^2[1 + 2(3p-4)y/p + (p-1)y''/p].
inline double residual_51(double y, double yp, double ypp, double p) {
  return 4.0 * y * y * (1.0 + 2.0 * y + ypp / p) +
         yp * yp * (1.0 + 2.0 * (3.0 * p - 4.0) * y / p + (p - 1.0) * ypp / p);
}

struct ProfileMetadata {
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  double y_min = 0.0;
  double handoff_theta = 0.0;
  // |theta at the y-threshold + remaining int dw/sqrt(H) - theta_a|
  double aperture_mismatch = 0.0;
};

class AngularProfile {
 public:
  struct Node {
    double theta;
    double y;
    double yp;
    double ypp;
  };
  struct Value {
    double f;
    double fp;
    double fpp;
  };

  AngularProfile() = default;

  // Takes ownership of a grid on [0, theta_a] that starts at theta = 0.
  AngularProfile(double a, double p, double theta_a, std::vector<Node> grid, ProfileMetadata meta = {})
      : a_(a), p_(p), theta_a_(theta_a), grid_(std::move(grid)), meta_(meta) {
    if (grid_.size() < 2) throw DomainError("AngularProfile: need at least two nodes");
    if (grid_.front().theta != 0.0) throw DomainError("AngularProfile: grid must start at theta = 0");
    for (std::size_t i = 1; i < grid_.size(); ++i) {
      if (!(grid_[i].theta > grid_[i - 1].theta)) throw DomainError("AngularProfile: grid not increasing");
      if (!(grid_[i].y < grid_[i - 1].y)) throw DomainError("AngularProfile: y not strictly decreasing");
    }
  }

  double a() const { return a_; }
  double p() const { return p_; }
  double theta_a() const { return theta_a_; }
  bool even() const { return true; }
  const std::vector<Node>& grid() const { return grid_; }
  const ProfileMetadata& metadata() const { return meta_; }

  // f, f', f'' at theta in [-theta_a, theta_a]; f is even.
  Value eval(double theta) const {
    const double sign = theta < 0.0 ? -1.0 : 1.0;
    const double x = std::abs(theta);
    const double end = grid_.back().theta;
    if (x > end * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "AngularProfile: |theta|=" << x << " exceeds theta_a=" << end;
      throw DomainError(os.str());
    }
    auto it = std::upper_bound(grid_.begin(), grid_.end(), x,
                               [](double v, const Node& n) { return v < n.theta; });
    std::size_t i = it == grid_.begin() ? 0 : static_cast<std::size_t>(it - grid_.begin()) - 1;
    if (i + 1 >= grid_.size()) i = grid_.size() - 2;
    const Node& n0 = grid_[i];
    const Node& n1 = grid_[i + 1];
    const double h = n1.theta - n0.theta;
    const double s = std::clamp((x - n0.theta) / h, 0.0, 1.0);

    const double c0 = n0.y;
    const double c1 = h * n0.yp;
    const double c2 = 0.5 * h * h * n0.ypp;
    const double A = n1.y - c0 - c1 - c2;
    const double B = h * n1.yp - c1 - 2.0 * c2;
    const double C = h * h * n1.ypp - 2.0 * c2;
    const double c3 = 10.0 * A - 4.0 * B + 0.5 * C;
    const double c4 = -15.0 * A + 7.0 * B - C;
    const double c5 = 6.0 * A - 3.0 * B + 0.5 * C;

    const double f = c0 + s * (c1 + s * (c2 + s * (c3 + s * (c4 + s * c5))));
    const double df = c1 + s * (2.0 * c2 + s * (3.0 * c3 + s * (4.0 * c4 + s * 5.0 * c5)));
    const double d2f = 2.0 * c2 + s * (6.0 * c3 + s * (12.0 * c4 + s * 20.0 * c5));
    return {f, sign * df / h, d2f / (h * h)};
  }

  double max_residual() const {
    double worst = 0.0;
    for (const auto& n : grid_) worst = std::max(worst, std::abs(residual_51(n.y, n.yp, n.ypp, p_)));
    return worst;
  }

  void write_csv(std::ostream& os) const {
    os << "theta,y,yp,ypp\n" << std::setprecision(17);
    for (const auto& n : grid_) os << n.theta << ',' << n.y << ',' << n.yp << ',' << n.ypp << '\n';
  }

  void write_metadata(std::ostream& os) const {
    os << std::setprecision(17);
    os << "a = " << a_ << '\n'
       << "p = " << p_ << '\n'
       << "theta_a = " << theta_a_ << '\n'
       << "nodes = " << grid_.size() << '\n'
       << "rel_tol = " << meta_.rel_tol << '\n'
       << "abs_tol = " << meta_.abs_tol << '\n'
       << "y_min = " << meta_.y_min << '\n'
       << "handoff_theta = " << meta_.handoff_theta << '\n'
       << "aperture_mismatch = " << meta_.aperture_mismatch << '\n'
       << "max_residual = " << max_residual() << '\n';
  }

  // Writes `path` and its sidecar `path + ".meta"`.
  void save(const std::string& path) const {
    std::ofstream csv(path);
    std::ofstream meta(metadata_path(path));
    if (!csv || !meta) throw IoError("cannot write profile to " + path);
    write_csv(csv);
    write_metadata(meta);
    if (!csv || !meta) throw IoError("failed while writing " + path);
  }

  static std::string metadata_path(const std::string& csv_path) { return csv_path + ".meta"; }

  static AngularProfile load(const std::string& path) {
    std::ifstream csv(path);
    if (!csv) throw IoError("cannot open profile " + path);
    std::ifstream meta(metadata_path(path));
    if (!meta) throw IoError("cannot open profile metadata " + metadata_path(path));

    std::map<std::string, double> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(meta, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw IoError(malformed(metadata_path(path), line_no, "expected key = value"));
      auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
      };
      try {
        kv[trim(line.substr(0, eq))] = std::stod(trim(line.substr(eq + 1)));
      } catch (const std::exception&) {
        throw IoError(malformed(metadata_path(path), line_no, "value is not a number"));
      }
    }
    for (const char* key : {"a", "p", "theta_a"})
      if (!kv.count(key)) throw IoError(malformed(metadata_path(path), line_no, std::string("missing key ") + key));

    std::vector<Node> nodes;
    line_no = 0;
    if (!std::getline(csv, line) || line.rfind("theta,y,yp,ypp", 0) != 0)
      throw IoError(malformed(path, 1, "header must be theta,y,yp,ypp"));
    ++line_no;
    while (std::getline(csv, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream row(line);
      Node n{};
      char c1 = 0, c2 = 0, c3 = 0;
      if (!(row >> n.theta >> c1 >> n.y >> c2 >> n.yp >> c3 >> n.ypp) || c1 != ',' || c2 != ',' || c3 != ',')
        throw IoError(malformed(path, line_no, "expected four comma-separated numbers"));
      nodes.push_back(n);
    }
    ProfileMetadata md;
    md.rel_tol = kv.count("rel_tol") ? kv["rel_tol"] : 0.0;
    md.abs_tol = kv.count("abs_tol") ? kv["abs_tol"] : 0.0;
    md.y_min = kv.count("y_min") ? kv["y_min"] : 0.0;
    md.handoff_theta = kv.count("handoff_theta") ? kv["handoff_theta"] : 0.0;
    md.aperture_mismatch = kv.count("aperture_mismatch") ? kv["aperture_mismatch"] : 0.0;
    try {
      return AngularProfile(kv["a"], kv["p"], kv["theta_a"], std::move(nodes), md);
    } catch (const DomainError& e) {
      throw IoError(path + ": " + e.what());
    }
  }

 private:
  static std::string malformed(const std::string& path, int line, const std::string& what) {
    std::ostringstream os;
    os << path << ':' << line << ": malformed profile file: " << what;
    return os.str();
  }

  double a_ = 0.0;
  double p_ = 2.0;
  double theta_a_ = 0.0;
  std::vector<Node> grid_;
  ProfileMetadata meta_;
};

// Shooting parameter a with |theta_a - target| <= tol. Bisection in log a on
// a bracket grown geometrically from a = 1; theta_a is increasing in a.
inline double calibrate_a(double target_half_angle, double p, double tol = 1e-10, const OdeConfig& cfg = {}) {
  const double critical = critical_half_angle_closed(p);
  if (!(target_half_angle > 0.0)) throw DomainError("calibrate_a: target half-angle must be > 0");
  if (target_half_angle >= critical) {
    std::ostringstream os;
    os << std::setprecision(10) << "calibrate_a: half-angle " << target_half_angle
       << " is not below the critical half-angle " << critical << " (full angle " << 2.0 * critical << ")";
    throw OutOfRangeError(os.str(), critical);
  }
  if (!(tol > 0.0)) throw DomainError("calibrate_a: tol must be > 0");

  auto theta = [&](double a) { return theta_a(a, p, cfg); };
  constexpr double kGrow = 4.0;
  constexpr double kLimit = 1e15;
  double lo = 1.0;
  double hi = 1.0;
  double th = theta(1.0);
  if (std::abs(th - target_half_angle) <= tol) return 1.0;
  if (th < target_half_angle) {
    while (th < target_half_angle) {
      lo = hi;
      hi *= kGrow;
      if (hi > kLimit) {
        std::ostringstream os;
        os << "calibrate_a: half-angle " << target_half_angle << " too close to the critical half-angle "
           << critical;
        throw OutOfRangeError(os.str(), critical);
      }
      th = theta(hi);
    }
  } else {
    while (th > target_half_angle) {
      hi = lo;
      lo /= kGrow;
      if (lo < 1.0 / kLimit) throw NonConvergenceError("calibrate_a: could not bracket a tiny half-angle");
      th = theta(lo);
    }
  }

  for (int iter = 0; iter < 200; ++iter) {
    const double mid = std::sqrt(lo * hi);
    th = theta(mid);
    if (std::abs(th - target_half_angle) <= tol) return mid;
    (th < target_half_angle ? lo : hi) = mid;
    if (hi / lo - 1.0 < 4.0 * std::numeric_limits<double>::epsilon()) return mid;
  }
  throw NonConvergenceError("calibrate_a: bisection did not converge");
}

namespace detail {

// theta_i = theta_a (1 - cos(pi i / (n-1))) / 2: clustered at both ends.
inline std::vector<double> clustered_grid(double theta_a, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = 0.5 * theta_a * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1)));
  out.front() = 0.0;
  out.back() = theta_a;
  return out;
}

}  // namespace detail

// Builds f = y(theta) on [0, theta_a]: Taylor seed y = a - p(1+2a) theta^2 / 2
// up to the handoff angle, then adaptive integration of y' = -sqrt(H_a(y))
// until y drops below a threshold; the final node is (theta_a, 0).
inline AngularProfile build_profile(double a, double p, std::size_t n_nodes = 1024, const OdeConfig& cfg = {}) {
  if (n_nodes < 16) throw DomainError("build_profile: need at least 16 nodes");
  detail::require_exponent(p);
  if (!(a > 0.0) || std::isinf(a)) throw DomainError("build_profile: a must be finite and > 0");

  const GProfile g = solve_G(a, p, cfg);
  const double theta_end = theta_a(g);
  auto H = [&](double y) { return eval_H(a, std::clamp(y, 0.0, a), p, g); };

  const double curvature = p * (1.0 + 2.0 * a);  // -y''(0)
  // the seed is valid for theta well inside the apex layer, whose width scales like a / p
  const double handoff = 1e-4 * std::min({1.0, a, theta_end});
  const double y_handoff = a - 0.5 * curvature * handoff * handoff;
  {
    const double taylor_slope = curvature * handoff;
    const double ode_slope = std::sqrt(H(y_handoff).H);
    if (!(y_handoff > 0.0) || std::abs(ode_slope - taylor_slope) > 1e-3 * taylor_slope) {
      std::ostringstream os;
      os << "build_profile: Taylor seed slope " << taylor_slope << " disagrees with sqrt(H) = " << ode_slope
         << " at theta = " << handoff;
      throw DegenerateStartError(os.str());
    }
  }

  const std::vector<double> thetas = detail::clustered_grid(theta_end, n_nodes);
  std::vector<AngularProfile::Node> nodes(n_nodes);
  auto make_node = [&](double theta, double y) {
    y = std::max(y, 0.0);
    const HValue h = H(y);
    return AngularProfile::Node{theta, y, -std::sqrt(h.H), 0.5 * h.dH};
  };

  std::size_t next = 0;
  nodes[next++] = {0.0, a, 0.0, -curvature};
  while (next < n_nodes && thetas[next] <= handoff) {
    const double t = thetas[next];
    nodes[next] = make_node(t, a - 0.5 * curvature * t * t);
    ++next;
  }

  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 1>;
  auto rhs = [&](const State& x, State& dxdt, double) { dxdt[0] = -std::sqrt(H(x[0]).H); };
  // the square-root start makes the phase error accumulate; run tighter than the G solve
  const double rel = std::max(1e-2 * cfg.rel_tol, 1e-14);
  auto stepper = ode::make_dense_output(std::max(1e-2 * cfg.abs_tol, 1e-16) * a, rel, ode::runge_kutta_dopri5<State>());
  stepper.initialize(State{y_handoff}, handoff, 1e-2 * handoff);

  const double y_stop = 1e-9 * a;
  double theta_stop = theta_end;
  std::size_t steps = 0;
  State s{};
  for (;;) {
    if (++steps > cfg.max_steps) throw NonConvergenceError("build_profile: too many steps in y' = -sqrt(H)");
    stepper.do_step(rhs);
    const bool crossed = stepper.current_state()[0] <= y_stop;
    if (crossed) {
      double lo = stepper.previous_time();
      double hi = stepper.current_time();
      for (int k = 0; k < 100; ++k) {
        const double mid = 0.5 * (lo + hi);
        stepper.calc_state(mid, s);
        (s[0] > y_stop ? lo : hi) = mid;
      }
      theta_stop = hi;
    }
    const double covered = crossed ? theta_stop : stepper.current_time();
    while (next + 1 < n_nodes && thetas[next] <= covered) {
      stepper.calc_state(thetas[next], s);
      nodes[next] = make_node(thetas[next], s[0]);
      ++next;
    }
    if (crossed) break;
  }
  // below the threshold y is linear to within y_stop^2
  const double slope0 = std::sqrt(H(0.5 * y_stop).H);
  while (next + 1 < n_nodes) {
    nodes[next] = make_node(thetas[next], y_stop - slope0 * (thetas[next] - theta_stop));
    ++next;
  }
  nodes[n_nodes - 1] = make_node(theta_end, 0.0);

  ProfileMetadata meta;
  meta.rel_tol = cfg.rel_tol;
  meta.abs_tol = cfg.abs_tol;
  meta.y_min = cfg.y_min;
  meta.handoff_theta = handoff;
  meta.aperture_mismatch = std::abs(theta_stop + y_stop / slope0 - theta_end);
  return AngularProfile(a, p, theta_end, std::move(nodes), meta);
}

// Calibrates a to the half-angle and builds the profile.
inline AngularProfile profile_for_half_angle(double half_angle, double p, std::size_t n_nodes = 1024,
                                             double tol = 1e-11, const OdeConfig& cfg = {}) {
  return build_profile(calibrate_a(half_angle, p, tol, cfg), p, n_nodes, cfg);
}

}  // namespace wedgewar
