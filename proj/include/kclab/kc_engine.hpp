#pragma once

// Moment-condition estimation, regularity prediction and verification.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kclab/field_spec.hpp"
#include "kclab/grid_field.hpp"
#include "kclab/norms.hpp"

namespace kclab {

/// Monte Carlo and lattice settings shared by the pipelines.
struct McConfig {
  std::size_t n_replicates = 2000;
  std::uint64_t master_seed = 20131101;
  unsigned threads = 1;
  std::size_t points_per_axis = 4097;
  int min_level = 2;
  int max_level = 8;
  std::size_t holder_samples = 200;
  int holder_min_level = 2;
  int holder_max_level = 9;
  /// Window size for the Hölder estimator; -1 means holder_min_level.
  int holder_window_level = -1;
  std::size_t random_pairs_per_level = 0;
  double tolerance = 0.12;
  /// Check the moment condition for every |alpha| <= d instead of |alpha| = d.
  bool strict = false;
};

nlohmann::json to_json(const McConfig& mc);

/// Produces one realization for a replicate seed.
using ReplicateSource = std::function<GridField(std::uint64_t seed)>;

struct StructurePoint {
  double lag = 0.0;
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t n_pairs = 0;
};

/// Monte Carlo estimates of h -> E|d^alpha X(x) - d^alpha X(y)|^p.
struct StructureFunctionData {
  double p = 2.0;
  MultiIndex alpha;
  std::vector<StructurePoint> points;  ///< strictly increasing lags
  std::size_t n_replicates = 0;
  /// Per-replicate pair averages, [replicate][lag group]. Used for jackknife
  /// errors of derived quantities; may be empty.
  std::vector<std::vector<double>> replicate_means;
};

/// Structure functions for every (alpha, p) combination from one pass over
/// the replicates. Result is indexed [alpha][p].
std::vector<std::vector<StructureFunctionData>> estimate_structure_functions(
    const ReplicateSource& source, const PointPairSet& pairs,
    std::span<const MultiIndex> alphas, std::span<const double> ps, std::size_t n_replicates,
    std::uint64_t master_seed, unsigned threads = 1);

StructureFunctionData estimate_structure_function(const FieldSpec& spec, const Lattice& lattice,
                                                  const PointPairSet& pairs,
                                                  const MultiIndex& alpha, double p,
                                                  std::size_t n_replicates,
                                                  std::uint64_t master_seed, unsigned threads = 1);

/// Fit of log E|dX|^p = intercept + theta * log h.
struct MomentFit {
  std::optional<double> theta_hat;
  std::optional<double> epsilon_hat;  ///< theta_hat - n
  std::optional<double> theta_se;     ///< jackknife over replicates when available
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
  bool degenerate = false;
};

/// Estimates at or below this value count as exact zeros.
inline constexpr double kDegenerateThreshold = 1e-300;

MomentFit fit_moment_exponent(const StructureFunctionData& data, int n);

/// Delete-one-replicate slopes of the fit in fit_moment_exponent (weights held
/// fixed), one per replicate; NaN where a leave-one-out mean is not positive.
/// Empty when the data carry no replicate means or the fit is degenerate.
std::vector<double> jackknife_slopes(const StructureFunctionData& data);

/// Slopes of two structure functions on the same lags, fitted with shared
/// weights (the pooled relative variance per lag), and the jackknife standard
/// error of their difference. Both must come from the same replicates, so the
/// delete-one slopes pair up. Shared weights make the two fits the same
/// estimator: with separate weights, a curved log-log relation alone moves
/// the slopes apart. Empty when the usable lags differ or fewer than 3 remain.
struct SlopeComparison {
  double slope_a = 0.0;
  double slope_b = 0.0;
  std::optional<double> difference_se;
};
std::optional<SlopeComparison> compare_slopes(const StructureFunctionData& a,
                                              const StructureFunctionData& b);

/// Jackknife standard error from delete-one values (NaN entries skipped).
std::optional<double> jackknife_standard_error(std::span<const double> loo);

/// d + min(eps/p, 1 - n/p). eps > p is clamped to p (such a moment bound
/// forces a constant field) and a note is written to `warning`.
double predict_t_max(int d, double p, double epsilon, int n, std::string* warning = nullptr);

struct SobolevEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Monte Carlo mean of sobolev_norm_p over replicates (exact derivatives).
SobolevEstimate expected_sobolev_norm(const FieldSpec& spec, const Lattice& lattice,
                                      const NormSpec& s, double p, std::size_t n_replicates,
                                      std::uint64_t master_seed, unsigned threads = 1);

struct SobolevSweepRow {
  std::size_t m = 0;
  double mean = 0.0;
  double standard_error = 0.0;
};

struct SobolevSweep {
  std::vector<SobolevSweepRow> rows;
  /// Ratio of the last two successive differences of the means. Behaves like
  /// 2^-gamma when the quadrature error scales as h^gamma; at or above 1 the
  /// sums are not converging.
  std::optional<double> growth_ratio;
  bool divergent = false;
};

/// expected_sobolev_norm at several nested resolutions with common random
/// numbers: each replicate is sampled once on the finest lattice and
/// restricted to the coarser ones. `ms` must be increasing and nested.
SobolevSweep sobolev_resolution_sweep(const FieldSpec& spec, const BoxDomain& domain,
                                      std::span<const std::size_t> ms, const NormSpec& s,
                                      double p, std::size_t n_replicates,
                                      std::uint64_t master_seed, unsigned threads = 1);

struct PerPResult {
  double p = 0.0;
  std::optional<double> epsilon_hat;  ///< raw estimate
  std::optional<double> epsilon_se;
  std::optional<double> epsilon_used;  ///< clamped into (0, p]
  std::optional<double> theta_hat;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::optional<double> t_max;
  bool clamped = false;
  MultiIndex alpha;  ///< multi-index giving the smallest epsilon
  std::string note;
};

struct RegularityReport {
  FieldSpec spec;
  int d = 0;
  int n = 1;
  std::vector<double> p_grid;
  std::vector<PerPResult> per_p;
  std::optional<double> t_star;
  std::optional<double> empirical_t;
  std::optional<double> empirical_se;
  bool degenerate = false;
  std::string verdict;  ///< "pass", "fail", "constant" or "inconclusive"
  double tolerance = 0.12;
  McConfig mc;
  nlohmann::json lattice;
  HolderEstimate holder;
  /// Lattice the Hölder estimate ran on (a fully valid sub-box when masked).
  nlohmann::json holder_lattice;
  std::vector<StructureFunctionData> structure;
};

/// End-to-end check on the box [0, T] (Brownian motion) or [0,1]^n.
RegularityReport run_verification(const FieldSpec& spec, int d, std::span<const double> p_grid,
                                  const McConfig& mc);

/// Same pipeline for an arbitrary replicate source on `lattice`; `mask`
/// (possibly empty) restricts pairs to valid points. With a mask the Hölder
/// estimate runs on the largest centred dyadic sub-box of valid points, and
/// the Hölder levels refer to that sub-box.
RegularityReport run_verification(const FieldSpec& spec, const ReplicateSource& source,
                                  const Lattice& lattice, std::span<const std::uint8_t> mask,
                                  int d, std::span<const double> p_grid, const McConfig& mc);

nlohmann::json to_json(const RegularityReport& report);

/// CSV columns: p, alpha, lag, estimate, se.
void write_structure_csv(std::ostream& out, std::span<const StructureFunctionData> data);

}  // namespace kclab
