// Critical half-angle against p, and theta_a along the shooting family.
#include <cmath>
#include <cstdio>

#include "wedgewar/wedge_ode.hpp"

int main() {
  using namespace wedgewar;
  std::printf("%6s %14s %14s %12s\n", "p", "closed", "K route", "full angle");
  for (double p : {1.1, 1.5, 2.0, 3.0, 5.0, 10.0}) {
    const double closed = critical_half_angle_closed(p);
    std::printf("%6.2f %14.10f %14.10f %12.8f\n", p, closed, k_route_half_angle(p), 2.0 * closed);
  }

  std::printf("\ntheta_a for p = 3\n");
  for (double a : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e4}) std::printf("  a = %-8g theta_a = %.10f\n", a, theta_a(a, 3.0));
}
