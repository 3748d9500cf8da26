#include "kclab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "kclab/seeding.hpp"

namespace kclab {

BoxDomain::BoxDomain(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty()) throw std::invalid_argument("box domain needs dim >= 1");
  if (lower_.size() != upper_.size())
    throw std::invalid_argument("box bounds have different dimensions");
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!(upper_[i] > lower_[i]) || !std::isfinite(lower_[i]) ||
        !std::isfinite(upper_[i]))
      throw std::invalid_argument("box bounds must satisfy lower < upper on axis " +
                                  std::to_string(i));
  }
}

BoxDomain BoxDomain::unit(std::size_t dim) {
  return BoxDomain(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0));
}

Lattice::Lattice(BoxDomain domain, std::vector<std::size_t> counts)
    : domain_(std::move(domain)), counts_(std::move(counts)) {
  if (counts_.size() != domain_.dim())
    throw std::invalid_argument("lattice counts do not match domain dimension");
  spacing_.resize(counts_.size());
  strides_.resize(counts_.size());
  size_ = 1;
  for (std::size_t i = counts_.size(); i-- > 0;) {
    if (counts_[i] < 2)
      throw std::invalid_argument("lattice needs at least 2 points per axis");
    spacing_[i] = domain_.side(i) / static_cast<double>(counts_[i] - 1);
    strides_[i] = size_;
    size_ *= counts_[i];
  }
}

bool Lattice::uniform() const {
  return std::all_of(counts_.begin(), counts_.end(),
                     [&](std::size_t c) { return c == counts_.front(); });
}

double Lattice::coordinate(std::size_t axis, std::size_t k) const {
  // The last point is pinned to the upper bound so corners are exact.
  if (k + 1 == counts_[axis]) return domain_.upper()[axis];
  return domain_.lower()[axis] + static_cast<double>(k) * spacing_[axis];
}

std::vector<std::size_t> Lattice::multi_index(std::size_t flat) const {
  std::vector<std::size_t> idx(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    idx[i] = flat / strides_[i];
    flat %= strides_[i];
  }
  return idx;
}

std::size_t Lattice::flat_index(std::span<const std::size_t> index) const {
  std::size_t flat = 0;
  for (std::size_t i = 0; i < dim(); ++i) flat += index[i] * strides_[i];
  return flat;
}

std::vector<double> Lattice::point(std::size_t flat) const {
  std::vector<double> x(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    x[i] = coordinate(i, flat / strides_[i]);
    flat %= strides_[i];
  }
  return x;
}

double Lattice::distance(std::size_t a, std::size_t b) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) {
    const double d = coordinate(i, (a / strides_[i]) % counts_[i]) -
                     coordinate(i, (b / strides_[i]) % counts_[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

Lattice make_lattice(const BoxDomain& domain, std::size_t points_per_axis) {
  if (points_per_axis < 2)
    throw std::invalid_argument("points_per_axis must be >= 2");
  return Lattice(domain, std::vector<std::size_t>(domain.dim(), points_per_axis));
}

namespace {

std::vector<std::size_t> level_offsets(const Lattice& lattice, int level) {
  if (level < 0 || level > 60)
    throw std::invalid_argument("dyadic level out of range: " + std::to_string(level));
  const std::size_t div = std::size_t{1} << level;
  std::vector<std::size_t> offsets(lattice.dim());
  for (std::size_t i = 0; i < lattice.dim(); ++i) {
    const std::size_t cells = lattice.count(i) - 1;
    if (cells % div != 0)
      throw std::invalid_argument(
          "level " + std::to_string(level) + " offset is not an integer number of "
          "spacings on axis " + std::to_string(i));
    offsets[i] = cells / div;
  }
  return offsets;
}

}  // namespace

PointPairSet dyadic_pairs(const Lattice& lattice, std::span<const int> levels,
                          std::size_t random_per_level, std::uint64_t seed) {
  PointPairSet out;
  const std::size_t n = lattice.dim();
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const int level = levels[li];
    const auto offsets = level_offsets(lattice, level);
    for (std::size_t axis = 0; axis < n; ++axis) {
      const std::size_t off = offsets[axis];
      for (std::size_t flat = 0; flat < lattice.size(); ++flat) {
        const std::size_t k = (flat / lattice.stride(axis)) % lattice.count(axis);
        if (k + off >= lattice.count(axis)) continue;
        const std::size_t b = flat + off * lattice.stride(axis);
        out.pairs.push_back({flat, b});
        out.lags.push_back(lattice.distance(flat, b));
        out.levels.push_back(level);
      }
    }
    if (n < 2 || random_per_level == 0) continue;

    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(li)));
    std::uniform_int_distribution<int> sign(0, 2);
    for (std::size_t r = 0; r < random_per_level; ++r) {
      // Offset vector with components in {-o, 0, +o}, at least two nonzero.
      std::vector<int> dir(n);
      int nonzero = 0;
      do {
        nonzero = 0;
        for (auto& v : dir) {
          v = sign(rng) - 1;
          nonzero += v != 0;
        }
      } while (nonzero < 2);
      std::vector<std::size_t> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t span_i = dir[i] == 0 ? 0 : offsets[i];
        std::uniform_int_distribution<std::size_t> pos(0, lattice.count(i) - 1 - span_i);
        const std::size_t base = pos(rng);
        a[i] = dir[i] < 0 ? base + span_i : base;
        b[i] = dir[i] > 0 ? base + span_i : base;
      }
      const std::size_t fa = lattice.flat_index(a);
      const std::size_t fb = lattice.flat_index(b);
      out.pairs.push_back({fa, fb});
      out.lags.push_back(lattice.distance(fa, fb));
      out.levels.push_back(level);
    }
  }
  return out;
}

PointPairSet restrict_pairs(const PointPairSet& pairs,
                            std::span<const std::uint8_t> mask) {
  if (mask.empty()) return pairs;
  PointPairSet out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [a, b] = pairs.pairs[i];
    if (mask[a] == 0 || mask[b] == 0) continue;
    out.pairs.push_back(pairs.pairs[i]);
    out.lags.push_back(pairs.lags[i]);
    out.levels.push_back(pairs.levels[i]);
  }
  return out;
}

std::size_t covering_number(const Lattice& lattice, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("covering radius must be > 0");
  const std::size_t n = lattice.dim();
  const double r2 = radius * radius * (1.0 + 1e-12);

  // Ball stencil as signed multi-index offsets.
  std::vector<std::vector<long>> stencil;
  std::vector<long> reach(n);
  for (std::size_t i = 0; i < n; ++i) {
    reach[i] = std::min<long>(static_cast<long>(lattice.count(i)) - 1,
                              static_cast<long>(std::floor(radius / lattice.spacing(i) + 1e-9)));
  }
  std::vector<long> cur(n);
  for (std::size_t i = 0; i < n; ++i) cur[i] = -reach[i];
  while (true) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(cur[i]) * lattice.spacing(i);
      d2 += d * d;
    }
    if (d2 <= r2) stencil.push_back(cur);
    std::size_t i = n;
    while (i-- > 0) {
      if (++cur[i] <= reach[i]) break;
      cur[i] = -reach[i];
    }
    if (i == static_cast<std::size_t>(-1)) break;
  }

  const std::size_t total = lattice.size();
  auto for_each_neighbor = [&](std::size_t flat, auto&& fn) {
    const auto idx = lattice.multi_index(flat);
    for (const auto& off : stencil) {
      std::size_t nb = 0;
      bool inside = true;
      for (std::size_t i = 0; i < n && inside; ++i) {
        const long k = static_cast<long>(idx[i]) + off[i];
        inside = k >= 0 && k < static_cast<long>(lattice.count(i));
        nb += static_cast<std::size_t>(k) * lattice.stride(i);
      }
      if (inside) fn(nb);
    }
  };

  std::vector<std::size_t> gain(total, 0);
  for (std::size_t p = 0; p < total; ++p)
    for_each_neighbor(p, [&](std::size_t) { ++gain[p]; });

  std::vector<std::uint8_t> covered(total, 0);
  std::size_t remaining = total;
  std::size_t balls = 0;
  while (remaining > 0) {
    const std::size_t best = static_cast<std::size_t>(
        std::max_element(gain.begin(), gain.end()) - gain.begin());
    ++balls;
    for_each_neighbor(best, [&](std::size_t q) {
      if (covered[q]) return;
      covered[q] = 1;
      --remaining;
      for_each_neighbor(q, [&](std::size_t c) { --gain[c]; });
    });
  }
  return balls;
}

nlohmann::json to_json(const BoxDomain& domain) {
  return {{"lower", domain.lower()}, {"upper", domain.upper()}};
}

nlohmann::json to_json(const Lattice& lattice) {
  return {{"domain", to_json(lattice.domain())}, {"counts", lattice.counts()}};
}

nlohmann::json to_json(const PointPairSet& pairs) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& p : pairs.pairs) list.push_back({p.a, p.b});
  return {{"pairs", std::move(list)}, {"levels", pairs.levels}, {"lags", pairs.lags}};
}

Lattice lattice_from_json(const nlohmann::json& j) {
  BoxDomain domain(j.at("domain").at("lower").get<std::vector<double>>(),
                   j.at("domain").at("upper").get<std::vector<double>>());
  return Lattice(std::move(domain), j.at("counts").get<std::vector<std::size_t>>());
}

PointPairSet pairs_from_json(const Lattice& lattice, const nlohmann::json& j) {
  PointPairSet out;
  out.levels = j.at("levels").get<std::vector<int>>();
  for (const auto& p : j.at("pairs")) {
    const auto a = p.at(0).get<std::size_t>();
    const auto b = p.at(1).get<std::size_t>();
    if (a >= lattice.size() || b >= lattice.size() || a == b)
      throw std::invalid_argument("pair index out of range");
    out.pairs.push_back({a, b});
    out.lags.push_back(lattice.distance(a, b));
  }
  if (out.levels.size() != out.pairs.size())
    throw std::invalid_argument("pair and level lists differ in length");
  return out;
}

}  // namespace kclab
