#include "kclab/spherical_harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kclab {

void real_sh_basis(std::size_t band_limit, const Vec3& x, std::span<double> out) {
  if (out.size() < sh_count(band_limit)) throw std::invalid_argument("basis buffer too small");
  const int L = static_cast<int>(band_limit);
  const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  const double ct = std::clamp(x[2] / r, -1.0, 1.0);
  const double rho = std::hypot(x[0], x[1]) / r;  // sin(theta)
  // cos(phi), sin(phi); any azimuth at the poles, where only m = 0 survives.
  const double cp = rho > 0.0 ? x[0] / (r * rho) : 1.0;
  const double sp = rho > 0.0 ? x[1] / (r * rho) : 0.0;

  // Normalized associated Legendre values pbar[l][m] = N_lm P_l^m(cos theta),
  // built column by column in m.
  const double sqrt2 = std::numbers::sqrt2;
  double pmm = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  double cm = 1.0, sm = 0.0;  // cos(m phi), sin(m phi)
  for (int m = 0; m <= L; ++m) {
    if (m > 0) {
      pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * rho;
      const double c = cm * cp - sm * sp;
      sm = sm * cp + cm * sp;
      cm = c;
    }
    double p_prev = 0.0;
    double p_cur = pmm;
    for (int l = m; l <= L; ++l) {
      if (l == m + 1) {
        p_prev = p_cur;
        p_cur = std::sqrt(2.0 * m + 3.0) * ct * pmm;
      } else if (l > m + 1) {
        const double ll = l, mm = m;
        const double a = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll - mm * mm));
        const double b = std::sqrt(((ll - 1.0) * (ll - 1.0) - mm * mm) /
                                   (4.0 * (ll - 1.0) * (ll - 1.0) - 1.0));
        const double next = a * (ct * p_cur - b * p_prev);
        p_prev = p_cur;
        p_cur = next;
      }
      if (m == 0) {
        out[sh_index(l, 0)] = p_cur;
      } else {
        out[sh_index(l, m)] = sqrt2 * p_cur * cm;
        out[sh_index(l, -m)] = sqrt2 * p_cur * sm;
      }
    }
  }
}

std::vector<double> real_sh_basis(std::size_t band_limit, const Vec3& x) {
  std::vector<double> out(sh_count(band_limit));
  real_sh_basis(band_limit, x, out);
  return out;
}

double legendre(std::size_t l, double t) {
  if (l == 0) return 1.0;
  double p0 = 1.0, p1 = t;
  for (std::size_t k = 2; k <= l; ++k) {
    const double kk = static_cast<double>(k);
    const double p2 = ((2.0 * kk - 1.0) * t * p1 - (kk - 1.0) * p0) / kk;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

}  // namespace kclab
