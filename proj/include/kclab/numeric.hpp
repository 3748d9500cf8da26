#pragma once

#include <cmath>
#include <span>

namespace kclab {

/// |x|^p with a multiply-only path for small integer p.
inline double abs_pow(double x, double p) {
  x = std::abs(x);
  if (p == std::floor(p) && p >= 0.0 && p <= 64.0) {
    auto k = static_cast<unsigned>(p);
    double result = 1.0;
    while (k) {
      if (k & 1u) result *= x;
      x *= x;
      k >>= 1u;
    }
    return result;
  }
  return std::pow(x, p);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  /// Residual-based standard error of the slope (0 with fewer than 3 points).
  double slope_se = 0.0;
};

/// Weighted least squares y ~ intercept + slope * x. Empty weights mean equal
/// weights. Needs at least two distinct x values.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> w = {});

}  // namespace kclab
