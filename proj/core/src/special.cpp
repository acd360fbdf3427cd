#include "gzhybrid/special.hpp"

#include <cmath>
#include <stdexcept>

namespace gzhybrid {

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma: x must be positive");
  return std::lgamma(x);
}

// Recurrence up to x >= 8, then the asymptotic Bernoulli series
//   psi(x) ~ ln x - 1/(2x) - sum_n B_{2n} / (2n x^{2n}).
// Truncation error at x = 8 is below 1e-14.
double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: x must be positive");
  double result = 0.0;
  while (x < 8.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // B2/2, B4/4, B6/6, B8/8, B10/10, B12/12
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0))))));
  result += std::log(x) - 0.5 * inv - series;
  return result;
}

}  // namespace gzhybrid
