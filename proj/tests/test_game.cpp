#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "wedgewar/game.hpp"

using namespace wedgewar;

TEST(Rng, CounterStreamsAreReplayable) {
  CounterRng a(99), b(99);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
  CounterRng c(99, 50);
  CounterRng d(99);
  for (int i = 0; i < 50; ++i) d();
  EXPECT_EQ(c(), d());
  EXPECT_NE(stream_for(1, 0)(), stream_for(1, 1)());
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(Rng, CoinAndUniformAreBalanced) {
  CounterRng r(7);
  int heads = 0;
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) heads += r.coin();
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(heads / double(n), 0.5, 4 * 0.5 / std::sqrt(n));
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
}

TEST(GameParams, Canonical) {
  for (double p : {1.5, 2.0, 3.0, 10.0}) {
    const GameParams g = GameParams::canonical(p, 0.1);
    EXPECT_NEAR(1 / g.p + 1 / g.q, 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(g.beta, g.q);
    EXPECT_NEAR(g.c11(), 0.0, 1e-15);
    EXPECT_NEAR(g.c22(), g.s * g.s, 1e-14);
    EXPECT_NEAR((g.c11() + g.c22() + 1) / g.c22(), p, 1e-12 * p);
    EXPECT_DOUBLE_EQ(g.alpha, 1 + g.s);
  }
  const GameParams two = GameParams::canonical(2.0, 0.1);
  EXPECT_DOUBLE_EQ(two.s, 1.0);
  EXPECT_DOUBLE_EQ(two.alpha, 2.0);
  EXPECT_THROW(GameParams::canonical(1.0, 0.1), DomainError);
  EXPECT_THROW(GameParams::canonical(2.0, 0.0), DomainError);
  GameParams bad = two;
  bad.s = 0.5;
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(Noise, CovarianceMatchesParameters) {
  // z = +-s perp(v): mean zero, variance s^2 |v|^2 across v, none along v
  const GameParams g = GameParams::canonical(3.0, 0.1);
  const Vec2 v(0.06, 0.08);
  CounterRng r(5);
  const int n = 100000;
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Zero();
  for (int i = 0; i < n; ++i) {
    const Vec2 z = sample_noise(v, g, r);
    mean += z;
    cov += z * z.transpose();
  }
  mean /= n;
  cov /= n;
  const Vec2 e = v.normalized(), t = perp(e);
  EXPECT_LT(mean.norm(), 5 * g.s * v.norm() / std::sqrt(n));
  EXPECT_NEAR(e.dot(cov * e), 0.0, 1e-14);
  EXPECT_NEAR(t.dot(cov * t), g.c22() * v.squaredNorm(), 1e-12);
  // one draw per call even when v = 0
  CounterRng r2(5);
  sample_noise(Vec2::Zero(), g, r2);
  EXPECT_EQ(r2.counter(), 1u);
}

TEST(Domain, Wedge) {
  const Domain w = Domain::wedge(std::numbers::pi / 2, Vec2(1, 0));
  EXPECT_EQ(w.kind(), Domain::Kind::wedge);
  EXPECT_TRUE(w.contains(Vec2(2, 0)));
  EXPECT_FALSE(w.contains(Vec2(2, 1.5)));
  EXPECT_FALSE(w.contains(Vec2(1, 0)));
  EXPECT_NEAR(w.dist_to_boundary(Vec2(3, 0)), 2 * std::sin(std::numbers::pi / 4), 1e-15);
  // behind the vertex the nearest boundary point is the vertex
  EXPECT_NEAR((w.project_to_boundary(Vec2(0, 0)) - Vec2(1, 0)).norm(), 0.0, 1e-15);
  const Vec2 y = w.project_to_boundary(Vec2(3, 0.5));
  EXPECT_TRUE(w.on_boundary(y));
  EXPECT_NE(w.describe().find("wedge"), std::string::npos);
}

TEST(Domain, HalfPlane) {
  const Domain h = Domain::half_plane(Vec2::UnitX(), 0.0);
  EXPECT_TRUE(h.contains(Vec2(0.1, -5)));
  EXPECT_FALSE(h.contains(Vec2(0, 1)));
  EXPECT_DOUBLE_EQ(h.dist_to_boundary(Vec2(0.3, 2)), 0.3);
  const Vec2 far = h.boundary_point_maximizing(Vec2(0.3, 0), 0.5, Vec2::UnitY());
  EXPECT_NEAR(far.x(), 0.0, 1e-15);
  EXPECT_NEAR(far.y(), 0.4, 1e-15);
  EXPECT_THROW(h.boundary_point_maximizing(Vec2(1, 0), 0.5, Vec2::UnitY()), DomainError);
}

TEST(Domain, ParabolaLike) {
  const Domain d = Domain::parabola_like(1.0, 0.5);
  EXPECT_TRUE(d.contains(Vec2(4, 1)));
  EXPECT_FALSE(d.contains(Vec2(4, 3)));
  const Vec2 x(4, 0.5);
  const Vec2 y = d.project_to_boundary(x);
  EXPECT_TRUE(d.on_boundary(y, 1e-12));
  // brute force nearest point on the upper branch
  double best = 1e300;
  for (int i = 0; i <= 200000; ++i) {
    const double s = 8.0 * i / 200000;
    best = std::min(best, (Vec2(s, std::sqrt(s)) - x).norm());
  }
  EXPECT_NEAR((y - x).norm(), best, 1e-6);
}

TEST(GameStep, InteriorMoveAddsNoise) {
  const GameParams g = GameParams::canonical(2.0, 0.1, 1);
  const Domain h = Domain::half_plane();
  const Strategy ax = Strategy::pull_axis(Vec2::UnitX());
  CounterRng r(3);
  const GameState s0 = GameState::start(Vec2(5, 0));
  const GameState s1 = game_step(s0, ax, ax, h, g, r);
  EXPECT_FALSE(s1.terminal);
  EXPECT_EQ(s1.step, 1u);
  EXPECT_NEAR(s1.position.x(), 5.1, 1e-15);
  EXPECT_NEAR(std::abs(s1.position.y()), 0.1, 1e-15);
  EXPECT_NE(s1.last_mover, Player::none);
}

TEST(GameStep, NearBoundaryEndsTheGame) {
  const GameParams g = GameParams::canonical(2.0, 0.1, 1);
  const Domain h = Domain::half_plane();
  const Strategy ax = Strategy::pull_axis(Vec2::UnitX());
  CounterRng r(3);
  const GameState s1 = game_step(GameState::start(Vec2(0.15, 0)), ax, ax, h, g, r);
  ASSERT_TRUE(s1.terminal);
  ASSERT_TRUE(s1.exit_point.has_value());
  EXPECT_TRUE(h.on_boundary(*s1.exit_point));
  EXPECT_LE((*s1.exit_point - Vec2(0.15, 0)).norm(), g.alpha * g.eps + 1e-12);
  EXPECT_THROW(game_step(s1, ax, ax, h, g, r), DomainError);
}

TEST(GameStep, StrategyViolations) {
  const GameParams g = GameParams::canonical(2.0, 0.1, 1);
  const Domain h = Domain::half_plane();
  const Strategy greedy = Strategy::custom("greedy", [](const MoveContext&) { return Vec2(1.0, 0.0); });
  const Strategy liar = Strategy::custom(
      "liar", [](const MoveContext&) { return Vec2(Vec2::Zero()); },
      [](const MoveContext& c) { return Vec2(c.state.position + Vec2(0, 5)); });
  CounterRng r(0);
  EXPECT_THROW(game_step(GameState::start(Vec2(5, 0)), greedy, greedy, h, g, r), StrategyViolationError);
  EXPECT_THROW(game_step(GameState::start(Vec2(0.1, 0)), liar, liar, h, g, r), StrategyViolationError);
}

TEST(GameStep, CoinPicksEachPlayerHalfTheTime) {
  const GameParams g = GameParams::canonical(2.0, 0.1, 1);
  const Domain h = Domain::half_plane();
  const Strategy a = Strategy::null_move(), b = Strategy::null_move();
  CounterRng r(11);
  int ones = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) ones += game_step(GameState::start(Vec2(5, 0)), a, b, h, g, r).last_mover == Player::one;
  EXPECT_NEAR(ones / double(n), 0.5, 4 * 0.5 / std::sqrt(n));
}

TEST(Strategies, GradientPulls) {
  auto u = std::make_shared<const PSolution>(PSolution::exact(std::numbers::pi / 3, 2.0));
  const GameParams g = GameParams::canonical(2.0, 0.1);
  const Domain w = Domain::wedge(std::numbers::pi / 3);
  const GameState st = GameState::start(Vec2(2, 0.2));
  const MoveContext c{st, w, g};
  const Vec2 grad = u->eval_u(st.position).grad;
  const Vec2 down = Strategy::pull_neg_grad_u(u).interior_move(c);
  const Vec2 up = Strategy::pull_pos_grad_u(u).interior_move(c);
  EXPECT_NEAR(down.norm(), g.eps, 1e-15);
  EXPECT_NEAR(down.dot(grad.normalized()), -g.eps, 1e-15);
  EXPECT_NEAR((up + down).norm(), 0.0, 1e-15);
  EXPECT_EQ(Strategy::pull_neg_grad_u(u).name(), "neg_grad_u");
  EXPECT_THROW(Strategy::pull_neg_grad_u(nullptr), DomainError);
}

TEST(Psi, ExactMatchesMonteCarlo) {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> N;
  for (double p : {1.5, 2.0, 4.0}) {
    const GameParams g = GameParams::canonical(p, 0.1);
    QuadraticForm qf;
    const double b = N(gen);
    qf.A << N(gen), b, b, N(gen);
    qf.xi = Vec2(N(gen), N(gen));
    const Vec2 v(N(gen) * 0.05, N(gen) * 0.05);
    CounterRng r(static_cast<std::uint64_t>(p * 10));
    const McValue mc = psi_mc(qf, v, g, 100000, r);
    // psi is the noise average of phi(v + z), which for a quadratic form is exact in closed form
    const double direct = qf(v) + g.s * g.s * perp(v).dot(qf.A * perp(v));
    EXPECT_NEAR(mc.estimate, direct, 4 * mc.stderr_ + 1e-14);
    EXPECT_NEAR(psi_exact(qf, v, g), direct, 1e-13);
    EXPECT_NEAR(mc.estimate, psi_exact(qf, v, g), 4 * mc.stderr_ + 1e-14);
    EXPECT_THROW(psi_mc(qf, v, g, 10, r), DomainError);
  }
}

TEST(Psi, InfinityLaplacianIsBetaTimesGamePLaplacian) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> N;
  for (int k = 0; k < 20; ++k) {
    const double p = 1.1 + 9.0 * std::abs(N(gen));
    const GameParams g = GameParams::canonical(p, 0.1);
    QuadraticForm qf;
    const double b = N(gen);
    qf.A << N(gen), b, b, N(gen);
    qf.xi = Vec2(N(gen), N(gen));
    const double lhs = infinity_laplacian_psi(qf, g);
    const double rhs = g.beta * deltap_quadratic(qf, p);
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1 + std::abs(rhs)));
  }
}
