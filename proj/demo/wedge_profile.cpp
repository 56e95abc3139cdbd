// Solve Delta_p u = -1 in a wedge and spot-check the result.
#include <cmath>
#include <cstdio>
#include <numbers>

#include "wedgewar/psolution.hpp"

int main() {
  using namespace wedgewar;
  const double p = 3.0;
  const double eta = 0.8;
  const PSolution sol = PSolution::exact(eta, p);
  const auto& prof = sol.profile();
  std::printf("p = %g, eta = %g: a = %.12f, theta_a = %.12f, max residual %.2e\n", p, eta, prof.a(), prof.theta_a(),
              prof.max_residual());

  for (double th : {0.0, 0.1, 0.2, 0.3}) {
    const Vec2 x = 2.0 * Vec2(std::cos(th), std::sin(th));
    const UValue v = sol.eval_u(x);
    const double exact = game_p_laplacian(v.grad, v.hess, p);
    const double fd = game_p_laplacian_fd([&](const Vec2& y) { return sol.u(y); }, x, 1e-4 * x.norm(), p);
    std::printf("theta %.2f  u %.8f  |grad u| %.6f  Delta_p u: %.10f (exact)  %.10f (fd)\n", th, v.u, v.grad.norm(),
                exact, fd);
  }
}
