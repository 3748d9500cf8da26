#pragma once

// The sphere S^2 with a two-chart stereographic atlas, a smooth partition of
// unity, pullbacks to chart coordinates and patching.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kclab/kc_engine.hpp"
#include "kclab/samplers.hpp"

namespace kclab {

using Vec2 = std::array<double, 2>;

/// Stereographic projection from one pole, restricted to the complement of a
/// closed polar cap around that pole so that the image is the open disk of
/// radius cot(cap_angle / 2).
class Chart {
 public:
  enum class Pole { North, South };

  Chart(Pole pole, double cap_angle);

  /// "north" covers the northern hemisphere (projects from the south pole).
  const std::string& id() const { return id_; }
  Pole pole() const { return pole_; }
  double cap_angle() const { return cap_angle_; }
  double image_radius() const { return image_radius_; }

  bool in_domain(const Vec3& x) const;
  bool in_image(const Vec2& u) const;
  Vec2 forward(const Vec3& x) const;
  /// Defined on all of R^2; only points of the image disk belong to the chart.
  Vec3 inverse(const Vec2& u) const;
  /// The bounding box [-R, R]^2 of the image disk.
  BoxDomain image_box() const;

 private:
  Pole pole_;
  double cap_angle_;
  double cos_cap_;
  double image_radius_;
  std::string id_;
};

class Atlas {
 public:
  explicit Atlas(std::vector<Chart> charts);

  const std::vector<Chart>& charts() const { return charts_; }
  const Chart& chart(std::size_t i) const { return charts_.at(i); }
  std::size_t size() const { return charts_.size(); }

  /// Indices of the charts whose domain contains x.
  std::vector<std::size_t> charts_containing(const Vec3& x) const;
  /// phi_i o phi_j^{-1} at u in phi_j(U_i cap U_j). Throws std::domain_error
  /// outside the overlap.
  Vec2 transition(std::size_t i, std::size_t j, const Vec2& u) const;
  /// Central finite-difference Jacobian of the transition map, row-major.
  std::array<double, 4> transition_jacobian(std::size_t i, std::size_t j, const Vec2& u,
                                            double step = 1e-6) const;

 private:
  std::vector<Chart> charts_;
};

/// North and south stereographic charts. Each domain excludes the closed cap
/// of angular radius cap_angle around the projection pole; the overlap is the
/// band |z| < cos(cap_angle). Requires cap_angle in (0, pi/2).
Atlas stereographic_atlas(double cap_angle);

/// Smooth step S(t) = f(t) / (f(t) + f(1 - t)) with f(t) = exp(-1/t) for
/// t > 0 and 0 otherwise.
double smooth_step(double t);

/// Partition of unity depending on the z-coordinate only. psi_north rises
/// from 0 at z = -w/2 to 1 at z = w/2; psi_south = 1 - psi_north, computed
/// from the mirrored step.
class BumpPartition {
 public:
  BumpPartition(const Atlas& atlas, double transition_width);

  double transition_width() const { return width_; }
  std::size_t size() const { return north_index_.size(); }
  /// psi_i(x) for chart index i of the atlas.
  double weight(std::size_t i, const Vec3& x) const;
  std::vector<double> weights(const Vec3& x) const;

 private:
  double width_;
  std::vector<bool> north_index_;  // per chart: true for the north chart
};

/// Requires 0 < transition_width < 2 cos(cap_angle).
BumpPartition bump_partition(const Atlas& atlas, double transition_width);

/// A function on a chart image.
using ChartFunction = std::function<double(const Vec2&)>;

/// u -> X(inverse(u)), evaluated analytically.
ChartFunction exact_chart_function(const SphereField& field, const Chart& chart);

/// Bilinear interpolation of the stored lattice values (masked points
/// included). Throws std::domain_error outside the lattice box.
ChartFunction grid_chart_function(GridField field);

/// Values of X o inverse on every point of `lattice`, which must cover the
/// chart's image box; points with |u| >= R are masked.
GridField pullback(const SphereField& field, const Chart& chart, const Lattice& lattice);

/// Mask of `lattice` points inside the image disk of `chart`.
std::vector<std::uint8_t> chart_mask(const Chart& chart, const Lattice& lattice);

class PatchedField {
 public:
  PatchedField(std::vector<ChartFunction> per_chart, BumpPartition partition, Atlas atlas);

  /// Sum over charts containing x with psi_i(x) > 0 of psi_i(x) Y^i(phi_i(x)).
  double evaluate(const Vec3& x) const;
  /// Min and max of Y^i(phi_i(x)) over the active charts.
  std::array<double, 2> active_range(const Vec3& x) const;

  const Atlas& atlas() const { return atlas_; }
  const BumpPartition& partition() const { return partition_; }

 private:
  std::vector<ChartFunction> per_chart_;
  BumpPartition partition_;
  Atlas atlas_;
};

PatchedField patch(std::vector<ChartFunction> per_chart, const BumpPartition& partition,
                   const Atlas& atlas);

/// Replicate source drawing sample_sphere(spec, seed) pulled back to `chart`
/// on `lattice`. Fields for the seeds derive_seed(master, r), r < count, are
/// computed up front in one batch; other seeds are evaluated on demand.
ReplicateSource sphere_chart_source(const FieldSpec& spec, const Chart& chart,
                                    const Lattice& lattice, std::uint64_t master_seed,
                                    std::size_t count, unsigned threads = 1);

struct ChartReport {
  std::string chart_id;
  RegularityReport report;
};

struct ChartwiseReport {
  std::vector<ChartReport> charts;
  /// |t_star(north) - t_star(south)| when both exist.
  std::optional<double> discrepancy;
  /// Per p: eps for each chart refitted with weights shared between the
  /// charts (see compare_slopes). The per-chart reports keep their own fits.
  std::vector<std::optional<std::array<double, 2>>> epsilon_shared;
  /// Per p: jackknife standard error of the shared-weight difference over the
  /// common replicates (both charts see the same sphere realizations).
  std::vector<std::optional<double>> epsilon_joint_se;
  /// Per p: |difference| / epsilon_joint_se.
  std::vector<std::optional<double>> epsilon_z;
  double cap_angle = 0.0;
  double transition_width = 0.0;
};

/// run_verification on the pullback to each chart of the atlas, on the
/// lattice with mc.points_per_axis points per axis over the image box.
ChartwiseReport chartwise_regularity(const FieldSpec& spec, const Atlas& atlas,
                                     double transition_width, int d,
                                     std::span<const double> p_grid, const McConfig& mc);

nlohmann::json to_json(const ChartwiseReport& report);

}  // namespace kclab
