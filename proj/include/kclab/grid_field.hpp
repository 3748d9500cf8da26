#pragma once

// Sampled field values on a lattice, with optional exact derivatives.

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "kclab/grid.hpp"

namespace kclab {

/// Multi-index alpha in N_0^n.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries);

  static MultiIndex zero(std::size_t n) { return MultiIndex(std::vector<int>(n, 0)); }
  static MultiIndex unit(std::size_t n, std::size_t axis);

  std::size_t size() const { return entries_.size(); }
  int operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<int>& entries() const { return entries_; }
  int order() const { return order_; }
  std::string str() const;

  auto operator<=>(const MultiIndex& other) const { return entries_ <=> other.entries_; }
  bool operator==(const MultiIndex& other) const { return entries_ == other.entries_; }

 private:
  std::vector<int> entries_;
  int order_ = 0;
};

/// All multi-indices of dimension n with |alpha| == order, lexicographically
/// descending in the first entry.
std::vector<MultiIndex> multi_indices_of_order(std::size_t n, int order);

struct GridField {
  GridField(Lattice lattice, std::vector<double> values);

  Lattice lattice;
  std::vector<double> values;
  /// Exact derivative companions for |alpha| >= 1, same shape as values.
  std::map<MultiIndex, std::vector<double>> derivatives;
  int d_avail = 0;
  /// Empty when every point is valid; otherwise 1 marks a valid point.
  std::vector<std::uint8_t> mask;
  /// Points removed on each side of each axis relative to the lattice this
  /// field was derived from (finite differences shrink the lattice).
  std::vector<std::size_t> trim;

  bool valid(std::size_t i) const { return mask.empty() || mask[i] != 0; }
  std::size_t valid_count() const;

  bool has_derivative(const MultiIndex& alpha) const;
  /// Values for alpha = 0, the stored companion otherwise. Throws
  /// std::out_of_range when the order is not available.
  const std::vector<double>& derivative(const MultiIndex& alpha) const;
  void set_derivative(const MultiIndex& alpha, std::vector<double> data);

  /// The field d^alpha X on the same lattice and mask, without companions.
  GridField derivative_field(const MultiIndex& alpha) const;

  /// Restriction to the nested lattice using every `stride`-th point.
  GridField restrict(std::size_t stride) const;
};

/// Text layout: header lines (dim, lower, upper, m, d_avail), then row-major
/// values, then one block per derivative companion and the mask if present.
void write_grid_field_csv(std::ostream& out, const GridField& field);
GridField read_grid_field_csv(std::istream& in);

}  // namespace kclab
