#pragma once

// Box domains, regular lattices, dyadic pair designs and covering numbers.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace kclab {

/// Axis-aligned box [lower, upper] in R^n.
class BoxDomain {
 public:
  BoxDomain(std::vector<double> lower, std::vector<double> upper);

  /// The unit cube [0,1]^n.
  static BoxDomain unit(std::size_t dim);

  std::size_t dim() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double side(std::size_t axis) const { return upper_[axis] - lower_[axis]; }

  bool operator==(const BoxDomain&) const = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// Regular lattice over a closed box. Corner points coincide with the box
/// corners. Flat indices are row-major: the last axis varies fastest.
class Lattice {
 public:
  Lattice(BoxDomain domain, std::vector<std::size_t> counts);

  const BoxDomain& domain() const { return domain_; }
  std::size_t dim() const { return counts_.size(); }
  std::size_t count(std::size_t axis) const { return counts_[axis]; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  double spacing(std::size_t axis) const { return spacing_[axis]; }
  const std::vector<double>& spacing() const { return spacing_; }
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }
  std::size_t size() const { return size_; }

  /// True when every axis has the same point count.
  bool uniform() const;

  double coordinate(std::size_t axis, std::size_t k) const;
  std::vector<std::size_t> multi_index(std::size_t flat) const;
  std::size_t flat_index(std::span<const std::size_t> index) const;
  std::vector<double> point(std::size_t flat) const;
  double distance(std::size_t a, std::size_t b) const;

  bool operator==(const Lattice& other) const {
    return domain_ == other.domain_ && counts_ == other.counts_;
  }

 private:
  BoxDomain domain_;
  std::vector<std::size_t> counts_;
  std::vector<double> spacing_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

Lattice make_lattice(const BoxDomain& domain, std::size_t points_per_axis);

struct IndexPair {
  std::size_t a;
  std::size_t b;
};

/// Lattice point pairs with their Euclidean lags. `levels[i]` is the dyadic
/// level that produced pair i.
struct PointPairSet {
  std::vector<IndexPair> pairs;
  std::vector<double> lags;
  std::vector<int> levels;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

/// All axis-aligned pairs at offset 2^-k * side for each level k, plus
/// `random_per_level` diagonal pairs at the same offset (n >= 2 only), drawn
/// deterministically from `seed`.
PointPairSet dyadic_pairs(const Lattice& lattice, std::span<const int> levels,
                          std::size_t random_per_level = 0,
                          std::uint64_t seed = 0);

/// Drops pairs with an endpoint where mask == 0.
PointPairSet restrict_pairs(const PointPairSet& pairs,
                            std::span<const std::uint8_t> mask);

/// Greedy set cover of the lattice points by closed Euclidean balls of the
/// given radius centred at lattice points. Upper bound for the covering number.
std::size_t covering_number(const Lattice& lattice, double radius);

nlohmann::json to_json(const BoxDomain& domain);
nlohmann::json to_json(const Lattice& lattice);
nlohmann::json to_json(const PointPairSet& pairs);
Lattice lattice_from_json(const nlohmann::json& j);
PointPairSet pairs_from_json(const Lattice& lattice, const nlohmann::json& j);

}  // namespace kclab
