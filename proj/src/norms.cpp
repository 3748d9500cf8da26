#include "kclab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "kclab/numeric.hpp"

namespace kclab {

NormSpec::NormSpec(double order) : order_(order) {
  if (!(order >= 0.0) || !std::isfinite(order))
    throw std::invalid_argument("smoothness index must be a finite value >= 0");
  integer_part_ = static_cast<int>(std::floor(order));
  fractional_part_ = order - integer_part_;
}

namespace {

/// Calls fn(flat) for every multi-index k with lo_i <= k_i < hi_i.
template <class Fn>
void for_each_in_range(const Lattice& lat, const std::vector<long>& lo,
                       const std::vector<long>& hi, Fn&& fn) {
  const std::size_t n = lat.dim();
  for (std::size_t i = 0; i < n; ++i)
    if (lo[i] >= hi[i]) return;
  std::vector<long> k = lo;
  while (true) {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < n; ++i) flat += static_cast<std::size_t>(k[i]) * lat.stride(i);
    fn(flat);
    std::size_t i = n;
    while (i-- > 0) {
      if (++k[i] < hi[i]) break;
      k[i] = lo[i];
    }
    if (i == static_cast<std::size_t>(-1)) return;
  }
}

GridField central_difference(const GridField& in, std::size_t axis) {
  const Lattice& lat = in.lattice;
  if (lat.count(axis) < 3) throw std::invalid_argument("finite difference stencil does not fit");
  std::vector<std::size_t> counts = lat.counts();
  counts[axis] -= 2;
  std::vector<double> lower = lat.domain().lower(), upper = lat.domain().upper();
  lower[axis] = lat.coordinate(axis, 1);
  upper[axis] = lat.coordinate(axis, lat.count(axis) - 2);
  Lattice out_lat(BoxDomain(lower, upper), counts);

  const double inv = 1.0 / (2.0 * lat.spacing(axis));
  const std::size_t s = lat.stride(axis);
  std::vector<double> out(out_lat.size());
  std::vector<std::uint8_t> mask;
  if (!in.mask.empty()) mask.resize(out_lat.size());
  for (std::size_t f = 0; f < out_lat.size(); ++f) {
    auto idx = out_lat.multi_index(f);
    idx[axis] += 1;
    const std::size_t c = lat.flat_index(idx);
    out[f] = (in.values[c + s] - in.values[c - s]) * inv;
    if (!mask.empty()) mask[f] = in.mask[c + s] && in.mask[c - s];
  }
  GridField result(out_lat, std::move(out));
  result.mask = std::move(mask);
  result.trim = in.trim;
  result.trim[axis] += 1;
  return result;
}

GridField derivative_data(const GridField& field, const MultiIndex& alpha,
                          DerivativeSource source) {
  if (alpha.order() == 0) {
    GridField out(field.lattice, field.values);
    out.mask = field.mask;
    out.trim = field.trim;
    return out;
  }
  if (source == DerivativeSource::Exact) return field.derivative_field(alpha);
  return finite_difference(field, alpha);
}

double max_abs(const GridField& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    if (f.valid(i)) m = std::max(m, std::abs(f.values[i]));
  return m;
}

/// Largest |f(a) - f(b)| / |a - b|^exponent over the pair design.
double max_difference_quotient(const GridField& f, double exponent, const HolderOptions& opt) {
  const Lattice& lat = f.lattice;
  const std::size_t N = lat.size();
  double best = 0.0;
  auto consider = [&](std::size_t a, std::size_t b) {
    if (a == b || !f.valid(a) || !f.valid(b)) return;
    const double q = std::abs(f.values[a] - f.values[b]) / std::pow(lat.distance(a, b), exponent);
    best = std::max(best, q);
  };

  const double all_pairs = 0.5 * static_cast<double>(N) * static_cast<double>(N - 1);
  if ((lat.dim() == 1 && N <= opt.exhaustive_1d_max) ||
      all_pairs <= static_cast<double>(opt.pair_budget)) {
    if (lat.dim() == 1) {
      // Same-offset pairs share the denominator.
      for (std::size_t k = 1; k < N; ++k) {
        const double denom = std::pow(static_cast<double>(k) * lat.spacing(0), exponent);
        double m = 0.0;
        for (std::size_t a = 0; a + k < N; ++a)
          if (f.valid(a) && f.valid(a + k)) m = std::max(m, std::abs(f.values[a + k] - f.values[a]));
        best = std::max(best, m / denom);
      }
      return best;
    }
    for (std::size_t a = 0; a < N; ++a)
      for (std::size_t b = a + 1; b < N; ++b) consider(a, b);
    return best;
  }

  // Axis-aligned pairs at power-of-two offsets and at the full side length.
  std::size_t used = 0;
  for (std::size_t axis = 0; axis < lat.dim(); ++axis) {
    std::vector<std::size_t> offsets;
    for (std::size_t o = 1; o < lat.count(axis); o *= 2) offsets.push_back(o);
    offsets.push_back(lat.count(axis) - 1);
    for (std::size_t o : offsets) {
      for (std::size_t a = 0; a < N; ++a) {
        const std::size_t k = (a / lat.stride(axis)) % lat.count(axis);
        if (k + o >= lat.count(axis)) continue;
        consider(a, a + o * lat.stride(axis));
        ++used;
      }
    }
  }
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick(0, N - 1);
  for (; used < opt.pair_budget; ++used) consider(pick(rng), pick(rng));
  return best;
}

}  // namespace

GridField finite_difference(const GridField& field, const MultiIndex& alpha) {
  const std::size_t n = field.lattice.dim();
  if (alpha.size() != n) throw std::invalid_argument("multi-index dimension does not match field");
  if (alpha.order() > 2) throw std::invalid_argument("finite differences support |alpha| <= 2");
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] > 0 &&
        field.lattice.count(i) < static_cast<std::size_t>(2 * alpha.order() + 1))
      throw std::invalid_argument("finite difference stencil does not fit on axis " +
                                  std::to_string(i));
  }
  GridField out(field.lattice, field.values);
  out.mask = field.mask;
  out.trim = field.trim;
  for (std::size_t i = 0; i < n; ++i)
    for (int r = 0; r < alpha[i]; ++r) out = central_difference(out, i);
  return out;
}

double holder_norm(const GridField& field, const NormSpec& t, DerivativeSource source,
                   const HolderOptions& options) {
  const std::size_t n = field.lattice.dim();
  double norm = 0.0;
  for (int order = 0; order <= t.integer_part(); ++order) {
    for (const auto& alpha : multi_indices_of_order(n, order)) {
      const GridField data = derivative_data(field, alpha, source);
      norm += max_abs(data);
      if (!t.is_integer()) norm += max_difference_quotient(data, t.fractional_part(), options);
    }
  }
  return norm;
}

std::vector<double> quadrature_weights(const Lattice& lat) {
  std::vector<double> w(lat.size(), 1.0);
  for (std::size_t f = 0; f < lat.size(); ++f) {
    std::size_t rest = f;
    for (std::size_t i = 0; i < lat.dim(); ++i) {
      const std::size_t k = rest / lat.stride(i);
      rest %= lat.stride(i);
      const bool edge = k == 0 || k + 1 == lat.count(i);
      w[f] *= edge ? 0.5 * lat.spacing(i) : lat.spacing(i);
    }
  }
  return w;
}

namespace {

double lp_part(const GridField& f, double p) {
  const auto w = quadrature_weights(f.lattice);
  double sum = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    if (f.valid(i)) sum += w[i] * abs_pow(f.values[i], p);
  return sum;
}

/// Diagonal-free product-rule sum of |g(x)-g(y)|^p / |x-y|^{n + sigma p}.
double gagliardo_part(const GridField& g, double sigma, double p) {
  const Lattice& lat = g.lattice;
  const std::size_t n = lat.dim();
  const auto w = quadrature_weights(lat);
  const double exponent = static_cast<double>(n) + sigma * p;

  // Offsets delta with the first nonzero entry positive; each counted twice.
  std::vector<long> reach(n), delta(n);
  for (std::size_t i = 0; i < n; ++i) {
    reach[i] = static_cast<long>(lat.count(i)) - 1;
    delta[i] = -reach[i];
  }
  double total = 0.0;
  while (true) {
    long first = 0;
    for (std::size_t i = 0; i < n && first == 0; ++i) first = delta[i];
    if (first > 0) {
      double d2 = 0.0;
      std::ptrdiff_t shift = 0;
      std::vector<long> lo(n), hi(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(delta[i]) * lat.spacing(i);
        d2 += d * d;
        shift += static_cast<std::ptrdiff_t>(delta[i]) * static_cast<std::ptrdiff_t>(lat.stride(i));
        lo[i] = std::max(0L, -delta[i]);
        hi[i] = static_cast<long>(lat.count(i)) - std::max(0L, delta[i]);
      }
      const double inv_denom = 1.0 / std::pow(d2, 0.5 * exponent);
      double partial = 0.0;
      for_each_in_range(lat, lo, hi, [&](std::size_t a) {
        const std::size_t b = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(a) + shift);
        if (!g.valid(a) || !g.valid(b)) return;
        partial += w[a] * w[b] * abs_pow(g.values[a] - g.values[b], p);
      });
      total += 2.0 * partial * inv_denom;
    }
    std::size_t i = n;
    while (i-- > 0) {
      if (++delta[i] <= reach[i]) break;
      delta[i] = -reach[i];
    }
    if (i == static_cast<std::size_t>(-1)) break;
  }
  return total;
}

}  // namespace

double sobolev_norm_p(const GridField& field, const NormSpec& s, double p,
                      DerivativeSource source) {
  if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("Sobolev p must lie in (1, inf)");
  const std::size_t n = field.lattice.dim();
  if (s.is_integer()) {
    double sum = 0.0;
    for (int order = 0; order <= s.integer_part(); ++order)
      for (const auto& alpha : multi_indices_of_order(n, order))
        sum += lp_part(derivative_data(field, alpha, source), p);
    return sum;
  }
  double sum = lp_part(field, p);
  for (const auto& alpha : multi_indices_of_order(n, s.integer_part()))
    sum += gagliardo_part(derivative_data(field, alpha, source), s.fractional_part(), p);
  return sum;
}

HolderEstimate holder_exponent_estimate(const std::vector<GridField>& fields, int max_level,
                                        int min_level, int window_level) {
  if (fields.size() < 20)
    throw std::invalid_argument("Hölder exponent estimation needs at least 20 sample fields");
  if (min_level < 0 || max_level <= min_level)
    throw std::invalid_argument("Hölder levels need 0 <= min_level < max_level");
  const Lattice& lat = fields.front().lattice;
  for (const auto& f : fields)
    if (!(f.lattice == lat)) throw std::invalid_argument("sample fields must share one lattice");
  const std::size_t n = lat.dim();
  if (window_level < 0) window_level = min_level;
  if (window_level < min_level) throw std::invalid_argument("window_level must be >= min_level");
  const std::size_t block = std::size_t{1} << std::min(window_level, max_level);

  HolderEstimate est;
  for (int k = min_level; k <= max_level; ++k) {
    const std::size_t cells = std::size_t{1} << k;
    std::vector<std::size_t> offset(n);
    for (std::size_t i = 0; i < n; ++i) {
      if ((lat.count(i) - 1) % cells != 0)
        throw std::invalid_argument("lattice is not dyadic up to level " + std::to_string(k));
      offset[i] = (lat.count(i) - 1) / cells;
    }
    const std::size_t per_axis = std::max<std::size_t>(1, cells / block);
    std::size_t n_windows = 1;
    for (std::size_t i = 0; i < n; ++i) n_windows *= per_axis;

    const std::vector<long> lo(n, 0), hi(n, static_cast<long>(cells));
    const Lattice coarse(lat.domain(), std::vector<std::size_t>(n, cells + 1));
    std::vector<double> maxima;
    maxima.reserve(fields.size() * n_windows);
    std::vector<double> window_max(n_windows);
    std::vector<std::uint8_t> window_seen(n_windows);
    for (const auto& f : fields) {
      std::fill(window_max.begin(), window_max.end(), 0.0);
      std::fill(window_seen.begin(), window_seen.end(), 0);
      // Coarse base indices c in [0, cells)^n.
      for_each_in_range(coarse, lo, hi, [&](std::size_t cflat) {
        const auto c = coarse.multi_index(cflat);
        std::size_t window = 0, base = 0;
        for (std::size_t i = 0; i < n; ++i) {
          window = window * per_axis + c[i] / block;
          base += c[i] * offset[i] * lat.stride(i);
        }
        for (std::size_t axis = 0; axis < n; ++axis) {
          const std::size_t other = base + offset[axis] * lat.stride(axis);
          if (!f.valid(base) || !f.valid(other)) continue;
          window_seen[window] = 1;
          window_max[window] = std::max(window_max[window], std::abs(f.values[other] - f.values[base]));
        }
      });
      for (std::size_t w = 0; w < n_windows; ++w)
        if (window_seen[w]) maxima.push_back(window_max[w]);
    }
    if (maxima.empty()) throw std::invalid_argument("no valid increments at level " + std::to_string(k));
    const auto mid = maxima.begin() + static_cast<std::ptrdiff_t>(maxima.size() / 2);
    std::nth_element(maxima.begin(), mid, maxima.end());
    double median = *mid;
    if (maxima.size() % 2 == 0) {
      const double lower = *std::max_element(maxima.begin(), mid);
      median = 0.5 * (median + lower);
    }
    est.levels.push_back({k, std::ldexp(lat.domain().side(0), -k), median, fields.size(),
                          maxima.size() / fields.size()});
  }

  std::vector<double> x, y;
  for (const auto& l : est.levels) {
    if (l.median_max_increment > 0.0) {
      x.push_back(std::log(l.lag));
      y.push_back(std::log(l.median_max_increment));
    }
  }
  if (x.empty()) {
    est.constant = true;
    est.slope = std::numeric_limits<double>::quiet_NaN();
    return est;
  }
  if (x.size() < 2) throw std::runtime_error("fewer than two levels with nonzero increments");
  const auto fit = linear_fit(x, y);
  est.slope = fit.slope;
  est.standard_error = fit.slope_se;
  return est;
}

void write_holder_levels_csv(std::ostream& out, const HolderEstimate& estimate) {
  out << "level,lag,median_max_increment,n_samples\n";
  char buf[96];
  for (const auto& l : estimate.levels) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%zu\n", l.level, l.lag, l.median_max_increment,
                  l.n_samples);
    out << buf;
  }
}

}  // namespace kclab
