#pragma once

// Discrete Hölder and fractional Sobolev norms, finite differences, and an
// empirical Hölder-exponent estimator.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "kclab/grid_field.hpp"

namespace kclab {

/// Smoothness index t (or s) split as t = floor(t) + frac(t).
class NormSpec {
 public:
  explicit NormSpec(double order);

  double order() const { return order_; }
  int integer_part() const { return integer_part_; }
  double fractional_part() const { return fractional_part_; }
  bool is_integer() const { return fractional_part_ == 0.0; }

 private:
  double order_;
  int integer_part_;
  double fractional_part_;
};

enum class DerivativeSource { Exact, FiniteDifference };

/// Central differences, applied alpha_i times along axis i. The output
/// lattice loses alpha_i points on each side of axis i; `trim` records it.
/// Supports |alpha| <= 2.
GridField finite_difference(const GridField& field, const MultiIndex& alpha);

struct HolderOptions {
  /// Pair budget once exhaustive enumeration would exceed it.
  std::size_t pair_budget = 1'000'000;
  /// 1-D lattices up to this size always use all pairs.
  std::size_t exhaustive_1d_max = 513;
  std::uint64_t seed = 0x5eed;
};

/// Lattice version of the C-bar^t norm: the sum of max |d^alpha f| over
/// |alpha| <= floor(t), plus for fractional t the sum over the same alpha of
/// the largest difference quotient |d^alpha f(x) - d^alpha f(y)| / |x-y|^frac(t)
/// over lattice pairs. A lower bound for the supremum norm.
double holder_norm(const GridField& field, const NormSpec& t, DerivativeSource source,
                   const HolderOptions& options = {});

/// p-th power of the W^s_p norm. Integer s: sum over |alpha| <= s of the
/// L^p norms. Fractional s: L^p norm of u plus, for |alpha| = floor(s), the
/// diagonal-free double sum of |d^alpha u(x) - d^alpha u(y)|^p / |x-y|^{n+frac(s)p}
/// with product weights. Weights are the lattice cell volumes (halved per
/// boundary axis).
double sobolev_norm_p(const GridField& field, const NormSpec& s, double p,
                      DerivativeSource source);

/// Quadrature weight of each lattice point (cell volume clipped to the box).
std::vector<double> quadrature_weights(const Lattice& lattice);

struct HolderLevel {
  int level = 0;
  double lag = 0.0;
  double median_max_increment = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_windows = 0;
};

struct HolderEstimate {
  double slope = 0.0;
  double standard_error = 0.0;
  bool constant = false;
  std::vector<HolderLevel> levels;
};

/// Log-log slope of the typical largest increment against the dyadic lag.
///
/// At level k (lag 2^-k times the box side) the increments between
/// neighbouring points of the 2^-k sub-lattice are grouped into windows of
/// B = 2^min_level increments per axis. The statistic for the level is the
/// median over all (sample, window) pairs of the window's largest absolute
/// increment. At k = min_level the single window is the whole domain. Fixing
/// the window size in cells keeps the statistic scale-consistent: for a
/// self-similar field of index H each level's median scales exactly as lag^H.
///
/// `window_level` overrides the window size to 2^window_level increments per
/// axis; a window never exceeds the domain, so window_level >= max_level
/// takes the whole-domain maximum at every level. That variant suits smooth
/// or non-stationary fields, where the typical maximum over a shrinking
/// window falls faster than the lag.
///
/// Masked points are skipped; windows with no valid increment do not count.
/// When every median is zero the result is flagged `constant`.
HolderEstimate holder_exponent_estimate(const std::vector<GridField>& fields, int max_level,
                                        int min_level = 2, int window_level = -1);

/// CSV columns: level, lag, median_max_increment, n_samples.
void write_holder_levels_csv(std::ostream& out, const HolderEstimate& estimate);

}  // namespace kclab
