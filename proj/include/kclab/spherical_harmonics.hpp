#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace kclab {

using Vec3 = std::array<double, 3>;

/// Flat position of (l, m) in a coefficient vector ordered by l, then m = -l..l.
constexpr std::size_t sh_index(int l, int m) {
  return static_cast<std::size_t>(l * l + l + m);
}

constexpr std::size_t sh_count(std::size_t band_limit) {
  return (band_limit + 1) * (band_limit + 1);
}

/// Orthonormal real spherical harmonics Y_lm(x), l = 0..band_limit, at a unit
/// vector. Writes sh_count(band_limit) entries into `out`.
void real_sh_basis(std::size_t band_limit, const Vec3& x, std::span<double> out);

std::vector<double> real_sh_basis(std::size_t band_limit, const Vec3& x);

/// Legendre polynomial P_l(t) by the three-term recurrence.
double legendre(std::size_t l, double t);

}  // namespace kclab
