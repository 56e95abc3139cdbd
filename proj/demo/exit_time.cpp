// Exit times from a convex wedge with player II pulling down the gradient of u.
#include <cstdio>
#include <memory>
#include <numbers>

#include "wedgewar/montecarlo.hpp"

int main() {
  using namespace wedgewar;
  const double p = 2.0;
  const double eta = std::numbers::pi / 4;
  const GameParams base = GameParams::canonical(p, 0.1);
  auto u = std::make_shared<const PSolution>(PSolution::for_game(eta, p, base.alpha));
  const Domain wedge = Domain::wedge(eta, u->translation());
  const Vec2 start = u->translation() + Vec2(1.0, 0.0);

  for (double eps : {0.1, 0.05, 0.025}) {
    SimConfig cfg{GameParams::canonical(p, eps, 2024), wedge, Strategy::pull_pos_grad_u(u),
                  Strategy::pull_neg_grad_u(u), start, 2000, HorizonPolicy{}.steps(eps)};
    const ExitTimeEstimate e = estimate_exit_time(cfg);
    std::printf("eps %-6g eps^2 E[tau] = %.4f +- %.4f   (u(x0) = %.4f, censored %.3f)\n", eps, e.scaled,
                e.scaled_ci95(), u->u(start), e.censored_fraction);
  }
}
