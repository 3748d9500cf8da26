#include "kclab/manifold.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Core>

#include "kclab/seeding.hpp"

namespace kclab {

Chart::Chart(Pole pole, double cap_angle)
    : pole_(pole),
      cap_angle_(cap_angle),
      cos_cap_(std::cos(cap_angle)),
      image_radius_(1.0 / std::tan(cap_angle / 2.0)),
      id_(pole == Pole::North ? "north" : "south") {
  if (!(cap_angle > 0.0 && cap_angle < std::numbers::pi / 2.0))
    throw std::invalid_argument("cap_angle must lie in (0, pi/2)");
}

bool Chart::in_domain(const Vec3& x) const {
  return pole_ == Pole::North ? x[2] > -cos_cap_ : x[2] < cos_cap_;
}

bool Chart::in_image(const Vec2& u) const {
  return u[0] * u[0] + u[1] * u[1] < image_radius_ * image_radius_;
}

Vec2 Chart::forward(const Vec3& x) const {
  const double denom = pole_ == Pole::North ? 1.0 + x[2] : 1.0 - x[2];
  return {x[0] / denom, x[1] / denom};
}

Vec3 Chart::inverse(const Vec2& u) const {
  const double r2 = u[0] * u[0] + u[1] * u[1];
  const double s = 1.0 / (1.0 + r2);
  const double z = (1.0 - r2) * s;
  return {2.0 * u[0] * s, 2.0 * u[1] * s, pole_ == Pole::North ? z : -z};
}

BoxDomain Chart::image_box() const {
  return BoxDomain({-image_radius_, -image_radius_}, {image_radius_, image_radius_});
}

Atlas::Atlas(std::vector<Chart> charts) : charts_(std::move(charts)) {
  if (charts_.empty()) throw std::invalid_argument("atlas needs at least one chart");
}

std::vector<std::size_t> Atlas::charts_containing(const Vec3& x) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < charts_.size(); ++i)
    if (charts_[i].in_domain(x)) out.push_back(i);
  return out;
}

Vec2 Atlas::transition(std::size_t i, std::size_t j, const Vec2& u) const {
  const Chart& cj = chart(j);
  const Chart& ci = chart(i);
  if (!cj.in_image(u)) throw std::domain_error("transition point outside the source chart image");
  const Vec3 x = cj.inverse(u);
  if (!ci.in_domain(x)) throw std::domain_error("transition point outside the chart overlap");
  return ci.forward(x);
}

std::array<double, 4> Atlas::transition_jacobian(std::size_t i, std::size_t j, const Vec2& u,
                                                 double step) const {
  std::array<double, 4> jac{};
  for (std::size_t k = 0; k < 2; ++k) {
    Vec2 up = u, um = u;
    up[k] += step;
    um[k] -= step;
    const Vec2 fp = transition(i, j, up);
    const Vec2 fm = transition(i, j, um);
    jac[0 * 2 + k] = (fp[0] - fm[0]) / (2.0 * step);
    jac[1 * 2 + k] = (fp[1] - fm[1]) / (2.0 * step);
  }
  return jac;
}

Atlas stereographic_atlas(double cap_angle) {
  return Atlas({Chart(Chart::Pole::North, cap_angle), Chart(Chart::Pole::South, cap_angle)});
}

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

BumpPartition::BumpPartition(const Atlas& atlas, double transition_width)
    : width_(transition_width) {
  if (atlas.size() != 2)
    throw std::invalid_argument("bump partition needs the two-chart stereographic atlas");
  const Chart& c0 = atlas.chart(0);
  const Chart& c1 = atlas.chart(1);
  if (c0.pole() == c1.pole()) throw std::invalid_argument("atlas charts must use opposite poles");
  if (!(transition_width > 0.0 && transition_width < 2.0 * std::cos(c0.cap_angle())))
    throw std::invalid_argument("transition_width must lie in (0, 2 cos(cap_angle))");
  north_index_ = {c0.pole() == Chart::Pole::North, c1.pole() == Chart::Pole::North};
}

double BumpPartition::weight(std::size_t i, const Vec3& x) const {
  const double t = (x[2] + width_ / 2.0) / width_;
  return north_index_.at(i) ? smooth_step(t) : smooth_step(1.0 - t);
}

std::vector<double> BumpPartition::weights(const Vec3& x) const {
  return {weight(0, x), weight(1, x)};
}

BumpPartition bump_partition(const Atlas& atlas, double transition_width) {
  return BumpPartition(atlas, transition_width);
}

ChartFunction exact_chart_function(const SphereField& field, const Chart& chart) {
  return [field, chart](const Vec2& u) { return field.evaluate(chart.inverse(u)); };
}

ChartFunction grid_chart_function(GridField field) {
  if (field.lattice.dim() != 2) throw std::invalid_argument("chart functions need a 2-D lattice");
  return [f = std::move(field)](const Vec2& u) {
    const Lattice& lat = f.lattice;
    std::size_t idx[2];
    double frac[2];
    for (std::size_t a = 0; a < 2; ++a) {
      const double lo = lat.domain().lower()[a];
      const double hi = lat.domain().upper()[a];
      if (!(u[a] >= lo && u[a] <= hi)) throw std::domain_error("point outside the lattice box");
      const double s = (u[a] - lo) / lat.spacing(a);
      const std::size_t last = lat.count(a) - 2;
      idx[a] = std::min(static_cast<std::size_t>(s), last);
      frac[a] = s - static_cast<double>(idx[a]);
    }
    const std::size_t s0 = lat.stride(0), s1 = lat.stride(1);
    const std::size_t base = idx[0] * s0 + idx[1] * s1;
    const auto& v = f.values;
    const double lo = v[base] * (1.0 - frac[1]) + v[base + s1] * frac[1];
    const double hi = v[base + s0] * (1.0 - frac[1]) + v[base + s0 + s1] * frac[1];
    return lo * (1.0 - frac[0]) + hi * frac[0];
  };
}

namespace {

void check_chart_lattice(const Chart& chart, const Lattice& lattice) {
  if (lattice.dim() != 2) throw std::invalid_argument("chart lattice must be 2-D");
  const BoxDomain box = chart.image_box();
  for (std::size_t a = 0; a < 2; ++a) {
    const double tol = 1e-12 * chart.image_radius();
    if (std::abs(lattice.domain().lower()[a] - box.lower()[a]) > tol ||
        std::abs(lattice.domain().upper()[a] - box.upper()[a]) > tol)
      throw std::invalid_argument("lattice box does not match the image box of chart " +
                                  chart.id());
  }
}

Vec2 lattice_point(const Lattice& lattice, std::size_t flat) {
  const std::size_t n1 = lattice.count(1);
  return {lattice.coordinate(0, flat / n1), lattice.coordinate(1, flat % n1)};
}

}  // namespace

std::vector<std::uint8_t> chart_mask(const Chart& chart, const Lattice& lattice) {
  check_chart_lattice(chart, lattice);
  std::vector<std::uint8_t> mask(lattice.size());
  for (std::size_t i = 0; i < lattice.size(); ++i)
    mask[i] = chart.in_image(lattice_point(lattice, i)) ? 1 : 0;
  return mask;
}

GridField pullback(const SphereField& field, const Chart& chart, const Lattice& lattice) {
  std::vector<std::uint8_t> mask = chart_mask(chart, lattice);
  std::vector<double> values(lattice.size());
  for (std::size_t i = 0; i < lattice.size(); ++i)
    values[i] = field.evaluate(chart.inverse(lattice_point(lattice, i)));
  GridField out(lattice, std::move(values));
  out.mask = std::move(mask);
  return out;
}

PatchedField::PatchedField(std::vector<ChartFunction> per_chart, BumpPartition partition,
                           Atlas atlas)
    : per_chart_(std::move(per_chart)), partition_(std::move(partition)), atlas_(std::move(atlas)) {
  if (per_chart_.size() != atlas_.size())
    throw std::invalid_argument("patch needs one function per chart");
}

double PatchedField::evaluate(const Vec3& x) const {
  const auto active = atlas_.charts_containing(x);
  if (active.empty()) throw std::domain_error("point is covered by no chart");
  double sum = 0.0;
  for (std::size_t i : active) {
    const double w = partition_.weight(i, x);
    if (w == 0.0) continue;
    sum += w * per_chart_[i](atlas_.chart(i).forward(x));
  }
  return sum;
}

std::array<double, 2> PatchedField::active_range(const Vec3& x) const {
  const auto active = atlas_.charts_containing(x);
  if (active.empty()) throw std::domain_error("point is covered by no chart");
  std::array<double, 2> range{INFINITY, -INFINITY};
  for (std::size_t i : active) {
    if (partition_.weight(i, x) == 0.0) continue;
    const double y = per_chart_[i](atlas_.chart(i).forward(x));
    range[0] = std::min(range[0], y);
    range[1] = std::max(range[1], y);
  }
  return range;
}

PatchedField patch(std::vector<ChartFunction> per_chart, const BumpPartition& partition,
                   const Atlas& atlas) {
  return PatchedField(std::move(per_chart), partition, atlas);
}

ReplicateSource sphere_chart_source(const FieldSpec& spec, const Chart& chart,
                                    const Lattice& lattice, std::uint64_t master_seed,
                                    std::size_t count, unsigned threads) {
  const auto* s = std::get_if<SphereIsotropic>(&spec.kind);
  if (!s) throw std::invalid_argument("sphere chart source needs a SphereIsotropic spec");
  spec.validate();
  auto mask = std::make_shared<const std::vector<std::uint8_t>>(chart_mask(chart, lattice));
  const std::size_t L = s->band_limit();
  const std::size_t K = sh_count(L);
  const std::size_t P = lattice.size();

  // Coefficients of every batched replicate, K x count.
  Eigen::MatrixXd coeffs(K, count);
  auto index = std::make_shared<std::unordered_map<std::uint64_t, std::size_t>>();
  for (std::size_t r = 0; r < count; ++r) {
    const std::uint64_t seed = derive_seed(master_seed, r);
    const SphereField f = sample_sphere(spec, seed);
    coeffs.col(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const Eigen::VectorXd>(f.coefficients().data(), static_cast<Eigen::Index>(K));
    index->emplace(seed, r);
  }

  // values(point, replicate) = sum_k Y_k(point) a_k, in fixed point blocks.
  auto values = std::make_shared<Eigen::MatrixXd>(P, count);
  constexpr std::size_t kBlock = 1024;
  const std::size_t n_blocks = (P + kBlock - 1) / kBlock;
  parallel_for(n_blocks, threads, [&](std::size_t b) {
    const std::size_t begin = b * kBlock;
    const std::size_t rows = std::min(kBlock, P - begin);
    Eigen::MatrixXd basis(rows, K);
    std::vector<double> row(K);
    for (std::size_t i = 0; i < rows; ++i) {
      real_sh_basis(L, chart.inverse(lattice_point(lattice, begin + i)), row);
      for (std::size_t k = 0; k < K; ++k) basis(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
    }
    values->middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(rows)).noalias() =
        basis * coeffs;
  });

  return [spec, chart, lattice, mask, index, values](std::uint64_t seed) {
    const auto it = index->find(seed);
    GridField out = [&] {
      if (it == index->end()) return pullback(sample_sphere(spec, seed), chart, lattice);
      const double* col = values->col(static_cast<Eigen::Index>(it->second)).data();
      return GridField(lattice, std::vector<double>(col, col + lattice.size()));
    }();
    out.mask = *mask;
    return out;
  };
}

ChartwiseReport chartwise_regularity(const FieldSpec& spec, const Atlas& atlas,
                                     double transition_width, int d,
                                     std::span<const double> p_grid, const McConfig& mc) {
  if (!std::holds_alternative<SphereIsotropic>(spec.kind))
    throw std::invalid_argument("chartwise regularity needs a SphereIsotropic spec");
  if (d != 0) throw std::invalid_argument("sphere fields provide no derivative companions; d must be 0");
  // Validates the width against the atlas.
  const BumpPartition partition(atlas, transition_width);

  ChartwiseReport out;
  out.cap_angle = atlas.chart(0).cap_angle();
  out.transition_width = partition.transition_width();
  const std::size_t count = std::max(mc.n_replicates, mc.holder_samples);
  for (const Chart& chart : atlas.charts()) {
    const Lattice lattice = make_lattice(chart.image_box(), mc.points_per_axis);
    const ReplicateSource source =
        sphere_chart_source(spec, chart, lattice, mc.master_seed, count, mc.threads);
    const std::vector<std::uint8_t> mask = chart_mask(chart, lattice);
    out.charts.push_back({chart.id(), run_verification(spec, source, lattice, mask, d, p_grid, mc)});
  }
  if (out.charts.size() == 2) {
    const auto& a = out.charts[0].report;
    const auto& b = out.charts[1].report;
    if (a.t_star && b.t_star) out.discrepancy = std::abs(*a.t_star - *b.t_star);
    const auto find = [](const RegularityReport& rep, const PerPResult& row)
        -> const StructureFunctionData* {
      for (const auto& sf : rep.structure)
        if (sf.p == row.p && sf.alpha == row.alpha) return &sf;
      return nullptr;
    };
    for (std::size_t q = 0; q < a.per_p.size(); ++q) {
      const auto& ra = a.per_p[q];
      const auto& rb = b.per_p[q];
      std::optional<double> se, z;
      std::optional<std::array<double, 2>> shared;
      const StructureFunctionData* sa = find(a, ra);
      const StructureFunctionData* sb = find(b, rb);
      if (ra.epsilon_hat && rb.epsilon_hat && sa && sb) {
        if (const auto c = compare_slopes(*sa, *sb)) {
          const double shift = ra.epsilon_hat.value() - ra.theta_hat.value();
          shared = std::array<double, 2>{c->slope_a + shift, c->slope_b + shift};
          se = c->difference_se;
          if (se) {
            const double diff = std::abs(c->slope_a - c->slope_b);
            z = *se > 0.0 ? diff / *se : (diff == 0.0 ? 0.0 : INFINITY);
          }
        }
      }
      out.epsilon_shared.push_back(shared);
      out.epsilon_joint_se.push_back(se);
      out.epsilon_z.push_back(z);
    }
  }
  return out;
}

nlohmann::json to_json(const ChartwiseReport& r) {
  nlohmann::json charts = nlohmann::json::array();
  for (const auto& c : r.charts) {
    nlohmann::json j = to_json(c.report);
    j["chart_id"] = c.chart_id;
    charts.push_back(std::move(j));
  }
  const auto list = [](const std::vector<std::optional<double>>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& x : v) out.push_back(x ? nlohmann::json(*x) : nlohmann::json(nullptr));
    return out;
  };
  nlohmann::json shared = nlohmann::json::array();
  for (const auto& e : r.epsilon_shared)
    shared.push_back(e ? nlohmann::json{(*e)[0], (*e)[1]} : nlohmann::json(nullptr));
  return {{"atlas", {{"kind", "stereographic"}, {"cap_angle", r.cap_angle}}},
          {"transition_width", r.transition_width},
          {"scope", "regularity checked on the two fixed charts only"},
          {"charts", std::move(charts)},
          {"t_star_discrepancy",
           r.discrepancy ? nlohmann::json(*r.discrepancy) : nlohmann::json(nullptr)},
          {"epsilon_shared_weights", shared},
          {"epsilon_joint_se", list(r.epsilon_joint_se)},
          {"epsilon_z", list(r.epsilon_z)}};
}

}  // namespace kclab
