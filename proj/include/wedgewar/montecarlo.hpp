#pragma once

// Monte Carlo exit-time estimates, sweeps over (eps, eta, p, strategies),
// the constant C1 of the supermartingale bound, and one-step martingale
// diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "wedgewar/errors.hpp"
#include "wedgewar/game.hpp"
#include "wedgewar/psolution.hpp"
#include "wedgewar/rng.hpp"

namespace wedgewar {

// max_steps = base * (ref_eps / eps)^exponent
struct HorizonPolicy {
  double base_steps = 1e7;
  double ref_eps = 0.1;
  double exponent = 2.0;

  std::uint64_t steps(double eps) const {
    if (!(eps > 0.0)) throw DomainError("HorizonPolicy: eps must be > 0");
    const double n = std::ceil(base_steps * std::pow(ref_eps / eps, exponent));
    return static_cast<std::uint64_t>(std::clamp(n, 1.0, 9.0e18));
  }
};

struct SimConfig {
  GameParams params;
  Domain domain = Domain::half_plane();
  Strategy player_one = Strategy::null_move();
  Strategy player_two = Strategy::null_move();
  Vec2 start = Vec2::UnitX();
  std::uint64_t n_traj = 1000;
  std::uint64_t max_steps = 10'000'000;
  unsigned threads = 0;  // 0: WEDGEWAR_THREADS or hardware concurrency

  void validate() const {
    params.validate();
    if (!domain.contains(start)) throw DomainError("SimConfig: start must lie strictly inside the domain");
    if (n_traj < 1) throw DomainError("SimConfig: n_traj must be >= 1");
    if (max_steps < 1) throw DomainError("SimConfig: max_steps must be >= 1");
  }
};

struct ExitTimeEstimate {
  double eps = 0.0;
  double mean_tau = 0.0;  // censored trajectories count as max_steps
  double scaled = 0.0;    // eps^2 * mean_tau
  double ci95 = 0.0;      // half-width, in units of tau
  double censored_fraction = 0.0;
  std::uint64_t n_traj = 0;
  std::uint64_t n_censored = 0;
  double mean_tau_uncensored = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t max_steps = 0;

  bool all_censored() const { return n_censored == n_traj; }
  double scaled_ci95() const { return eps * eps * ci95; }
  double relative_ci() const { return mean_tau > 0.0 ? ci95 / mean_tau : 0.0; }
};

namespace detail {

inline unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("WEDGEWAR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, n) on the given number of workers.
template <class Body>
void parallel_for(std::uint64_t n, unsigned workers, const Body& body) {
  workers = static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, workers), std::max<std::uint64_t>(n, 1)));
  if (workers == 1) {
    for (std::uint64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::uint64_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Pairwise sum: the result depends only on the order of the values.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double critical_value_95(std::uint64_t n) {
  if (n < 2) return std::numeric_limits<double>::infinity();
  if (n >= 30) return 1.959963984540054;
  boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::quantile(boost::math::complement(dist, 0.025));
}

}  // namespace detail

struct TrajectoryResult {
  std::uint64_t tau = 0;
  bool censored = false;
  Vec2 exit = Vec2::Zero();
};

inline TrajectoryResult run_trajectory(const SimConfig& cfg, std::uint64_t index) {
  CounterRng rng = stream_for(cfg.params.seed, index);
  GameState st = GameState::start(cfg.start);
  while (!st.terminal && st.step < cfg.max_steps)
    st = game_step(st, cfg.player_one, cfg.player_two, cfg.domain, cfg.params, rng);
  return {st.step, !st.terminal, st.position};
}

// CSV step,x,y,mover,terminal for one trajectory.
inline void dump_trajectory(const SimConfig& cfg, std::uint64_t index, std::ostream& os) {
  CounterRng rng = stream_for(cfg.params.seed, index);
  GameState st = GameState::start(cfg.start);
  os << "step,x,y,mover,terminal\n" << std::setprecision(17);
  auto row = [&] {
    os << st.step << ',' << st.position.x() << ',' << st.position.y() << ',' << static_cast<int>(st.last_mover) << ','
       << (st.terminal ? 1 : 0) << '\n';
  };
  row();
  while (!st.terminal && st.step < cfg.max_steps) {
    st = game_step(st, cfg.player_one, cfg.player_two, cfg.domain, cfg.params, rng);
    row();
  }
}

inline ExitTimeEstimate summarize_exit_times(const std::vector<double>& taus, const std::vector<char>& censored,
                                             double eps, std::uint64_t max_steps) {
  ExitTimeEstimate e;
  e.eps = eps;
  e.max_steps = max_steps;
  e.n_traj = taus.size();
  const std::size_t n = taus.size();
  e.mean_tau = detail::pairwise_sum(taus.data(), n) / static_cast<double>(n);
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = (taus[i] - e.mean_tau) * (taus[i] - e.mean_tau);
  const double var = n > 1 ? detail::pairwise_sum(dev.data(), n) / static_cast<double>(n - 1) : 0.0;
  e.ci95 = n > 1 ? detail::critical_value_95(n) * std::sqrt(var / static_cast<double>(n)) : 0.0;
  e.scaled = eps * eps * e.mean_tau;

  std::vector<double> done;
  for (std::size_t i = 0; i < n; ++i) {
    if (censored[i])
      ++e.n_censored;
    else
      done.push_back(taus[i]);
  }
  e.censored_fraction = static_cast<double>(e.n_censored) / static_cast<double>(n);
  if (!done.empty()) e.mean_tau_uncensored = detail::pairwise_sum(done.data(), done.size()) / static_cast<double>(done.size());
  return e;
}

// Independent trajectories with per-index streams; identical for any worker count.
inline ExitTimeEstimate estimate_exit_time(const SimConfig& cfg) {
  cfg.validate();
  std::vector<double> taus(cfg.n_traj);
  std::vector<char> censored(cfg.n_traj);
  detail::parallel_for(cfg.n_traj, detail::worker_count(cfg.threads), [&](std::uint64_t i) {
    const TrajectoryResult r = run_trajectory(cfg, i);
    taus[i] = static_cast<double>(r.tau);
    censored[i] = r.censored ? 1 : 0;
  });
  return summarize_exit_times(taus, censored, cfg.params.eps, cfg.max_steps);
}

struct C1Estimate {
  double taylor_constant = 0.0;  // C: |R| <= C eps^3 on balls of radius gamma eps
  double hessian_ratio = 0.0;    // sup ||D^2 u||^2 / |grad u|^2
  double c1 = 0.0;
  double safety = 2.0;
  DerivativeBounds bounds;

  // u(x0) / (beta/2 - C1 eps); infinite when the bracket is not positive.
  double bound(double u0, double beta, double eps) const {
    const double den = 0.5 * beta - c1 * eps;
    return den > 0.0 ? u0 / den : std::numeric_limits<double>::infinity();
  }
};

// C1 = C + 18 beta^2 sup ||D^2 u||^2 / |grad u|^2 with sampled suprema times `safety`.
inline C1Estimate estimate_c1(const PSolution& u, const GameParams& params, double safety = 2.0) {
  C1Estimate c;
  c.safety = safety;
  c.bounds = u.derivative_bounds(params.alpha);
  const double gamma = 2.0 * (params.alpha + 1.0);
  c.taylor_constant = safety * c.bounds.sup_third * gamma * gamma * gamma / 6.0;
  c.hessian_ratio = safety * c.bounds.sup_hessian_over_gradient;
  c.c1 = c.taylor_constant + 18.0 * params.beta * params.beta * c.hessian_ratio;
  return c;
}

// ---- sweeps ----

inline const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names{"pos_grad_u", "neg_grad_u", "axis", "neg_axis", "cross_axis", "null"};
  return names;
}

inline Strategy make_strategy(const std::string& name, const std::shared_ptr<const PSolution>& u) {
  if (name == "pos_grad_u" || name == "neg_grad_u") {
    if (!u) throw ConfigError("strategy " + name + " needs a wedge domain with a solution");
    return name == "pos_grad_u" ? Strategy::pull_pos_grad_u(u) : Strategy::pull_neg_grad_u(u);
  }
  if (name == "axis") return Strategy::pull_axis(Vec2::UnitX(), "axis");
  if (name == "neg_axis") return Strategy::pull_axis(-Vec2::UnitX(), "neg_axis");
  if (name == "cross_axis") return Strategy::pull_axis(Vec2::UnitY(), "cross_axis");
  if (name == "null") return Strategy::null_move();
  throw ConfigError("unknown strategy '" + name + "'");
}

struct StrategyPair {
  std::string one;
  std::string two;
};

enum class DomainKind { wedge, half_plane };

struct SweepGrid {
  DomainKind domain = DomainKind::wedge;
  std::vector<double> eps;
  std::vector<double> eta;  // ignored for the half-plane
  std::vector<double> p;
  std::vector<StrategyPair> pairs;
  std::uint64_t n_traj = 1000;
  std::uint64_t seed = 0;
  HorizonPolicy horizon;
  double start_offset = 1.0;  // distance from the vertex (wedge) or boundary (half-plane) along the axis
  double enlargement = 0.05;
  unsigned threads = 0;
};

struct SweepRow {
  double eps;
  double eta;
  double p;
  std::string strategy_one;
  std::string strategy_two;
  std::uint64_t seed;
  ExitTimeEstimate estimate;
  double u0 = std::numeric_limits<double>::quiet_NaN();
  double c1 = std::numeric_limits<double>::quiet_NaN();
};

// Wedge cells use the shifted wedge W_eta + 2(alpha+1) e1 and u from the
// enlarged wedge; half-plane cells use {x1 > 0}.
inline std::vector<SweepRow> sweep(const SweepGrid& grid) {
  const bool wedge = grid.domain == DomainKind::wedge;
  if (grid.eps.empty() || grid.p.empty() || grid.pairs.empty() || (wedge && grid.eta.empty()))
    throw ConfigError("sweep: grid must be nonempty");
  const std::vector<double> etas = wedge ? grid.eta : std::vector<double>{std::numbers::pi};

  std::vector<SweepRow> rows;
  std::uint64_t cell = 0;
  for (double p : grid.p) {
    for (double eta : etas) {
      const GameParams base = GameParams::canonical(p, grid.eps.front());
      std::shared_ptr<const PSolution> u;
      std::optional<C1Estimate> c1;
      Domain domain = Domain::half_plane();
      Vec2 start(grid.start_offset, 0.0);
      if (wedge) {
        u = std::make_shared<const PSolution>(PSolution::for_game(eta, p, base.alpha, grid.enlargement));
        domain = Domain::wedge(eta, u->translation());
        start = u->translation() + Vec2(grid.start_offset, 0.0);
        c1 = estimate_c1(*u, base);
      }
      for (const auto& pair : grid.pairs) {
        for (double eps : grid.eps) {
          const std::uint64_t seed = derive_seed(grid.seed, cell++);
          SimConfig cfg{GameParams::canonical(p, eps, seed), domain, make_strategy(pair.one, u),
                        make_strategy(pair.two, u), start, grid.n_traj, grid.horizon.steps(eps), grid.threads};
          SweepRow row{eps, eta, p, pair.one, pair.two, seed, estimate_exit_time(cfg)};
          if (u) row.u0 = u->u(start);
          if (c1) row.c1 = c1->c1;
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
  os << "eps,eta,p,strategy_I,strategy_II,n_traj,mean_tau,scaled,ci95,censored_fraction,seed\n"
     << std::setprecision(17);
  for (const auto& r : rows) {
    const auto& e = r.estimate;
    os << r.eps << ',' << r.eta << ',' << r.p << ',' << r.strategy_one << ',' << r.strategy_two << ',' << e.n_traj
       << ',' << e.mean_tau << ',' << e.scaled << ',' << e.ci95 << ',' << e.censored_fraction << ',' << r.seed
       << '\n';
  }
}

// ---- one-step diagnostics ----

enum class MartingaleKind {
  super_u,      // M_k = u(x_k) + (beta/2) eps^2 k - C1 k eps^3 should not increase
  sub_pi_one,   // pi_1(x_k) should not decrease
};

struct ProbeResult {
  Vec2 state;
  double mean;
  double stderr_;
  bool violation;
};

struct MartingaleReport {
  MartingaleKind kind;
  std::uint64_t n_probe = 0;
  std::uint64_t violations = 0;
  double z_threshold = 3.0;
  std::vector<ProbeResult> probes;

  double violation_fraction() const {
    return n_probe ? static_cast<double>(violations) / static_cast<double>(n_probe) : 0.0;
  }
  bool passed(double max_fraction = 0.05) const { return violation_fraction() <= max_fraction; }
};

struct MartingaleOptions {
  MartingaleKind kind = MartingaleKind::super_u;
  std::shared_ptr<const PSolution> u;  // required for super_u
  double c1 = 0.0;
  std::uint64_t samples_per_probe = 2000;
  double z_threshold = 3.0;
};

// Probe states are taken from simulated trajectories at positions where the
// interior rule applies; each gets a fresh one-step sample.
inline MartingaleReport martingale_diagnostic(const SimConfig& cfg, std::uint64_t n_probe,
                                              const MartingaleOptions& opt) {
  cfg.validate();
  if (opt.kind == MartingaleKind::super_u && !opt.u) throw DomainError("martingale_diagnostic: u is required");
  if (opt.samples_per_probe < 2) throw DomainError("martingale_diagnostic: need at least two samples per probe");
  const GameParams& prm = cfg.params;
  const double reach = prm.alpha * prm.eps;

  // collect candidate states
  std::vector<Vec2> states;
  const std::uint64_t probe_seed = derive_seed(prm.seed, 0x70726f6265ULL);
  for (std::uint64_t t = 0; states.size() < n_probe && t < 64 * n_probe + 64; ++t) {
    CounterRng rng = stream_for(probe_seed, t);
    GameState st = GameState::start(cfg.start);
    const std::uint64_t stop = 1 + rng() % 4096;
    Vec2 last = cfg.start;
    while (!st.terminal && st.step < std::min(stop, cfg.max_steps)) {
      if (cfg.domain.dist_to_boundary(st.position) > reach) last = st.position;
      st = game_step(st, cfg.player_one, cfg.player_two, cfg.domain, prm, rng);
    }
    if (!st.terminal && cfg.domain.dist_to_boundary(st.position) > reach) last = st.position;
    states.push_back(last);
  }

  MartingaleReport rep;
  rep.kind = opt.kind;
  rep.z_threshold = opt.z_threshold;
  rep.probes.resize(states.size());
  const double drift = 0.5 * prm.beta * prm.eps * prm.eps - opt.c1 * prm.eps * prm.eps * prm.eps;
  detail::parallel_for(states.size(), detail::worker_count(cfg.threads), [&](std::uint64_t i) {
    const Vec2 x = states[i];
    auto value = [&](const Vec2& y) { return opt.kind == MartingaleKind::super_u ? opt.u->u(y) : y.x(); };
    const double base = value(x);
    CounterRng rng = stream_for(derive_seed(probe_seed, 1), i);
    std::vector<double> inc(opt.samples_per_probe);
    for (auto& d : inc) {
      const GameState next =
          game_step(GameState::start(x), cfg.player_one, cfg.player_two, cfg.domain, prm, rng);
      d = value(next.position) - base + (opt.kind == MartingaleKind::super_u ? drift : 0.0);
    }
    const double n = static_cast<double>(inc.size());
    const double mean = detail::pairwise_sum(inc.data(), inc.size()) / n;
    for (auto& d : inc) d = (d - mean) * (d - mean);
    const double se = std::sqrt(detail::pairwise_sum(inc.data(), inc.size()) / (n - 1.0) / n);
    const bool bad = opt.kind == MartingaleKind::super_u ? mean > opt.z_threshold * se
                                                         : mean < -opt.z_threshold * se;
    rep.probes[i] = {x, mean, se, bad};
  });
  rep.n_probe = rep.probes.size();
  for (const auto& pr : rep.probes) rep.violations += pr.violation ? 1 : 0;
  return rep;
}

}  // namespace wedgewar
