#include "kclab/kc_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "kclab/numeric.hpp"
#include "kclab/samplers.hpp"
#include "kclab/seeding.hpp"

namespace kclab {

nlohmann::json to_json(const McConfig& mc) {
  return {{"n_replicates", mc.n_replicates},
          {"master_seed", mc.master_seed},
          {"points_per_axis", mc.points_per_axis},
          {"min_level", mc.min_level},
          {"max_level", mc.max_level},
          {"holder_samples", mc.holder_samples},
          {"holder_min_level", mc.holder_min_level},
          {"holder_max_level", mc.holder_max_level},
          {"holder_window_level", mc.holder_window_level},
          {"random_pairs_per_level", mc.random_pairs_per_level},
          {"tolerance", mc.tolerance},
          {"strict", mc.strict}};
}

namespace {

/// Lag groups: sorted distinct lags (relative tolerance 1e-9) and the group of
/// each pair.
struct LagGroups {
  std::vector<double> lags;
  std::vector<std::size_t> group_of_pair;
  std::vector<std::size_t> group_size;
};

LagGroups group_by_lag(const PointPairSet& pairs) {
  LagGroups g;
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pairs.lags[a] < pairs.lags[b]; });
  g.group_of_pair.resize(pairs.size());
  for (std::size_t idx : order) {
    const double lag = pairs.lags[idx];
    if (!(lag > 0.0)) throw std::invalid_argument("pair lags must be positive");
    if (g.lags.empty() || lag > g.lags.back() * (1.0 + 1e-9)) {
      g.lags.push_back(lag);
      g.group_size.push_back(0);
    }
    g.group_of_pair[idx] = g.lags.size() - 1;
    ++g.group_size.back();
  }
  return g;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<std::vector<StructureFunctionData>> estimate_structure_functions(
    const ReplicateSource& source, const PointPairSet& pairs,
    std::span<const MultiIndex> alphas, std::span<const double> ps, std::size_t n_replicates,
    std::uint64_t master_seed, unsigned threads) {
  if (pairs.empty()) throw std::invalid_argument("structure function needs a nonempty pair set");
  if (n_replicates < 2) throw std::invalid_argument("structure function needs >= 2 replicates");
  for (double p : ps)
    if (!(p >= 1.0)) throw std::invalid_argument("moment order p must be >= 1");
  const LagGroups groups = group_by_lag(pairs);
  const std::size_t G = groups.lags.size();
  const std::size_t A = alphas.size(), P = ps.size();

  // per_rep[r][(a * P + q) * G + g]
  std::vector<std::vector<double>> per_rep(n_replicates);
  parallel_for(n_replicates, threads, [&](std::size_t r) {
    const GridField field = source(derive_seed(master_seed, r));
    std::vector<double> acc(A * P * G, 0.0);
    for (std::size_t a = 0; a < A; ++a) {
      const auto& data = field.derivative(alphas[a]);
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double diff = data[pairs.pairs[i].b] - data[pairs.pairs[i].a];
        const std::size_t g = groups.group_of_pair[i];
        for (std::size_t q = 0; q < P; ++q) acc[(a * P + q) * G + g] += abs_pow(diff, ps[q]);
      }
    }
    for (std::size_t a = 0; a < A; ++a)
      for (std::size_t q = 0; q < P; ++q)
        for (std::size_t g = 0; g < G; ++g)
          acc[(a * P + q) * G + g] /= static_cast<double>(groups.group_size[g]);
    per_rep[r] = std::move(acc);
  });

  std::vector<std::vector<StructureFunctionData>> out(A, std::vector<StructureFunctionData>(P));
  const double nr = static_cast<double>(n_replicates);
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t q = 0; q < P; ++q) {
      auto& sf = out[a][q];
      sf.p = ps[q];
      sf.alpha = alphas[a];
      sf.n_replicates = n_replicates;
      sf.replicate_means.assign(n_replicates, std::vector<double>(G));
      for (std::size_t r = 0; r < n_replicates; ++r)
        for (std::size_t g = 0; g < G; ++g)
          sf.replicate_means[r][g] = per_rep[r][(a * P + q) * G + g];
      for (std::size_t g = 0; g < G; ++g) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n_replicates; ++r) sum += sf.replicate_means[r][g];
        const double mean = sum / nr;
        double ss = 0.0;
        for (std::size_t r = 0; r < n_replicates; ++r) {
          const double d = sf.replicate_means[r][g] - mean;
          ss += d * d;
        }
        // Delete-one jackknife of a mean reduces to sd / sqrt(n).
        const double se = std::sqrt(ss / (nr - 1.0) / nr);
        sf.points.push_back({groups.lags[g], mean, se, groups.group_size[g]});
      }
    }
  }
  return out;
}

StructureFunctionData estimate_structure_function(const FieldSpec& spec, const Lattice& lattice,
                                                  const PointPairSet& pairs,
                                                  const MultiIndex& alpha, double p,
                                                  std::size_t n_replicates,
                                                  std::uint64_t master_seed, unsigned threads) {
  if (n_replicates < 100) throw std::invalid_argument("structure function needs >= 100 replicates");
  if (alpha.order() > spec.derivative_order())
    throw std::invalid_argument("derivative order " + std::to_string(alpha.order()) +
                                " unavailable for " + spec.name());
  const LatticeSampler sampler(spec, lattice);
  const MultiIndex alphas[] = {alpha};
  const double ps[] = {p};
  auto all = estimate_structure_functions([&](std::uint64_t s) { return sampler.draw(s); }, pairs,
                                          alphas, ps, n_replicates, master_seed, threads);
  return std::move(all[0][0]);
}

namespace {

struct UsablePoints {
  std::vector<std::size_t> index;
  std::vector<double> x, y, w;
};

UsablePoints usable_points(const StructureFunctionData& data) {
  UsablePoints u;
  bool equal_weights = false;
  for (std::size_t g = 0; g < data.points.size(); ++g) {
    const auto& pt = data.points[g];
    if (!(pt.estimate > kDegenerateThreshold) || !(pt.lag > 0.0)) continue;
    u.index.push_back(g);
    u.x.push_back(std::log(pt.lag));
    u.y.push_back(std::log(pt.estimate));
    const double rel = pt.standard_error / pt.estimate;
    if (!(rel > 0.0) || !std::isfinite(rel)) equal_weights = true;
    u.w.push_back(1.0 / (rel * rel));
  }
  if (equal_weights) std::fill(u.w.begin(), u.w.end(), 1.0);
  return u;
}

std::vector<double> loo_slopes(const StructureFunctionData& data, const UsablePoints& u) {
  const std::size_t R = data.replicate_means.size();
  if (R < 2 || u.x.size() < 3) return {};
  std::vector<double> total(u.index.size(), 0.0);
  for (const auto& row : data.replicate_means)
    for (std::size_t k = 0; k < u.index.size(); ++k) total[k] += row[u.index[k]];
  std::vector<double> slopes(R, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> y(u.index.size());
  for (std::size_t r = 0; r < R; ++r) {
    const auto& row = data.replicate_means[r];
    bool ok = true;
    for (std::size_t k = 0; k < u.index.size() && ok; ++k) {
      const double loo = (total[k] - row[u.index[k]]) / static_cast<double>(R - 1);
      ok = loo > 0.0;
      if (ok) y[k] = std::log(loo);
    }
    if (ok) slopes[r] = linear_fit(u.x, y, u.w).slope;
  }
  return slopes;
}

}  // namespace

std::vector<double> jackknife_slopes(const StructureFunctionData& data) {
  return loo_slopes(data, usable_points(data));
}

std::optional<SlopeComparison> compare_slopes(const StructureFunctionData& a,
                                              const StructureFunctionData& b) {
  UsablePoints ua = usable_points(a);
  UsablePoints ub = usable_points(b);
  if (ua.index != ub.index || ua.x.size() < 3) return std::nullopt;
  for (std::size_t k = 0; k < ua.x.size(); ++k)
    if (ua.x[k] != ub.x[k]) return std::nullopt;
  // Pooled relative variance per lag.
  for (std::size_t k = 0; k < ua.w.size(); ++k) {
    const double w = 2.0 / (1.0 / ua.w[k] + 1.0 / ub.w[k]);
    ua.w[k] = w;
    ub.w[k] = w;
  }
  SlopeComparison c;
  c.slope_a = linear_fit(ua.x, ua.y, ua.w).slope;
  c.slope_b = linear_fit(ub.x, ub.y, ub.w).slope;
  std::vector<double> la = loo_slopes(a, ua);
  const std::vector<double> lb = loo_slopes(b, ub);
  if (!la.empty() && la.size() == lb.size()) {
    for (std::size_t r = 0; r < la.size(); ++r) la[r] -= lb[r];
    c.difference_se = jackknife_standard_error(la);
  }
  return c;
}

std::optional<double> jackknife_standard_error(std::span<const double> loo) {
  std::vector<double> v;
  for (double x : loo)
    if (!std::isnan(x)) v.push_back(x);
  if (v.size() < 2) return std::nullopt;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double k = static_cast<double>(v.size());
  return std::sqrt((k - 1.0) / k * ss);
}

MomentFit fit_moment_exponent(const StructureFunctionData& data, int n) {
  MomentFit fit;
  const bool all_zero = std::all_of(data.points.begin(), data.points.end(), [](const auto& pt) {
    return !(pt.estimate > kDegenerateThreshold);
  });
  if (!data.points.empty() && all_zero) {
    fit.degenerate = true;
    return fit;
  }
  const UsablePoints u = usable_points(data);
  if (u.x.size() < 3)
    throw std::invalid_argument("moment exponent fit needs at least 3 usable lag points");

  const LinearFit lf = linear_fit(u.x, u.y, u.w);
  fit.theta_hat = lf.slope;
  fit.epsilon_hat = lf.slope - static_cast<double>(n);
  fit.intercept = lf.intercept;
  fit.r_squared = lf.r_squared;
  fit.n_points = u.x.size();
  fit.theta_se = lf.slope_se;

  if (const auto se = jackknife_standard_error(jackknife_slopes(data))) fit.theta_se = se;
  return fit;
}

double predict_t_max(int d, double p, double epsilon, int n, std::string* warning) {
  if (!(p > 1.0)) throw std::invalid_argument("t_max needs p > 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("t_max needs epsilon > 0");
  if (d < 0 || n < 1) throw std::invalid_argument("t_max needs d >= 0 and n >= 1");
  if (epsilon > p) {
    if (warning)
      *warning = "epsilon above p: such a moment bound forces a constant field; clamped to p";
    epsilon = p;
  }
  return static_cast<double>(d) + std::min(epsilon / p, 1.0 - static_cast<double>(n) / p);
}

SobolevEstimate expected_sobolev_norm(const FieldSpec& spec, const Lattice& lattice,
                                      const NormSpec& s, double p, std::size_t n_replicates,
                                      std::uint64_t master_seed, unsigned threads) {
  if (n_replicates < 2) throw std::invalid_argument("expected Sobolev norm needs >= 2 replicates");
  const LatticeSampler sampler(spec, lattice);
  std::vector<double> values(n_replicates);
  parallel_for(n_replicates, threads, [&](std::size_t r) {
    values[r] = sobolev_norm_p(sampler.draw(derive_seed(master_seed, r)), s, p,
                               DerivativeSource::Exact);
  });
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double nr = static_cast<double>(n_replicates);
  return {mean, std::sqrt(ss / (nr - 1.0) / nr)};
}

SobolevSweep sobolev_resolution_sweep(const FieldSpec& spec, const BoxDomain& domain,
                                      std::span<const std::size_t> ms, const NormSpec& s,
                                      double p, std::size_t n_replicates,
                                      std::uint64_t master_seed, unsigned threads) {
  if (ms.empty()) throw std::invalid_argument("resolution sweep needs at least one m");
  if (n_replicates < 2) throw std::invalid_argument("resolution sweep needs >= 2 replicates");
  for (std::size_t i = 1; i < ms.size(); ++i)
    if (ms[i] <= ms[i - 1]) throw std::invalid_argument("sweep resolutions must increase");
  const std::size_t finest = ms.back();
  for (std::size_t m : ms)
    if (m < 2 || (finest - 1) % (m - 1) != 0)
      throw std::invalid_argument("sweep resolutions must be nested in the finest lattice");

  const LatticeSampler sampler(spec, make_lattice(domain, finest));
  const std::size_t K = ms.size();
  std::vector<std::vector<double>> values(n_replicates, std::vector<double>(K));
  parallel_for(n_replicates, threads, [&](std::size_t r) {
    const GridField fine = sampler.draw(derive_seed(master_seed, r));
    for (std::size_t k = 0; k < K; ++k) {
      const GridField f = fine.restrict((finest - 1) / (ms[k] - 1));
      values[r][k] = sobolev_norm_p(f, s, p, DerivativeSource::Exact);
    }
  });

  SobolevSweep sweep;
  const double nr = static_cast<double>(n_replicates);
  for (std::size_t k = 0; k < K; ++k) {
    double sum = 0.0;
    for (const auto& row : values) sum += row[k];
    const double mean = sum / nr;
    double ss = 0.0;
    for (const auto& row : values) ss += (row[k] - mean) * (row[k] - mean);
    sweep.rows.push_back({ms[k], mean, std::sqrt(ss / (nr - 1.0) / nr)});
  }
  if (K >= 3) {
    const double prev = sweep.rows[K - 2].mean - sweep.rows[K - 3].mean;
    const double last = sweep.rows[K - 1].mean - sweep.rows[K - 2].mean;
    if (prev > 0.0) {
      sweep.growth_ratio = last / prev;
      sweep.divergent = last > 0.0 && *sweep.growth_ratio >= 1.0;
    }
  }
  return sweep;
}

namespace {

/// Largest centred sub-box of 2^j cells per axis whose points are all valid.
struct SubBox {
  std::vector<std::size_t> start;
  std::size_t cells = 0;
};

std::optional<SubBox> valid_subbox(const Lattice& lattice, std::span<const std::uint8_t> mask) {
  const std::size_t n = lattice.dim();
  std::size_t limit = lattice.count(0) - 1;
  for (std::size_t i = 1; i < n; ++i) limit = std::min(limit, lattice.count(i) - 1);
  std::size_t cells = 1;
  while (cells * 2 <= limit) cells *= 2;
  for (; cells >= 1; cells /= 2) {
    SubBox box{std::vector<std::size_t>(n), cells};
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      const std::size_t spare = lattice.count(i) - 1 - cells;
      ok = spare % 2 == 0;
      box.start[i] = spare / 2;
    }
    if (!ok) continue;
    const Lattice sub(lattice.domain(), std::vector<std::size_t>(n, cells + 1));
    for (std::size_t f = 0; f < sub.size() && ok; ++f) {
      const auto idx = sub.multi_index(f);
      std::size_t flat = 0;
      for (std::size_t i = 0; i < n; ++i) flat += (box.start[i] + idx[i]) * lattice.stride(i);
      ok = mask[flat] != 0;
    }
    if (ok) return box;
  }
  return std::nullopt;
}

Lattice subbox_lattice(const Lattice& lattice, const SubBox& box) {
  std::vector<double> lo, hi;
  for (std::size_t i = 0; i < lattice.dim(); ++i) {
    lo.push_back(lattice.coordinate(i, box.start[i]));
    hi.push_back(lattice.coordinate(i, box.start[i] + box.cells));
  }
  return Lattice(BoxDomain(lo, hi), std::vector<std::size_t>(lattice.dim(), box.cells + 1));
}

GridField extract_subbox(const GridField& field, const Lattice& sub, const SubBox& box) {
  std::vector<double> values(sub.size());
  for (std::size_t f = 0; f < sub.size(); ++f) {
    const auto idx = sub.multi_index(f);
    std::size_t flat = 0;
    for (std::size_t i = 0; i < sub.dim(); ++i)
      flat += (box.start[i] + idx[i]) * field.lattice.stride(i);
    values[f] = field.values[flat];
  }
  return GridField(sub, std::move(values));
}

BoxDomain verification_domain(const FieldSpec& spec) {
  if (const auto* bm = std::get_if<BrownianMotion>(&spec.kind))
    return BoxDomain({0.0}, {bm->horizon});
  return BoxDomain::unit(spec.dim);
}

}  // namespace

RegularityReport run_verification(const FieldSpec& spec, int d, std::span<const double> p_grid,
                                  const McConfig& mc) {
  spec.validate();
  const Lattice lattice = make_lattice(verification_domain(spec), mc.points_per_axis);
  auto sampler = std::make_shared<LatticeSampler>(spec, lattice);
  return run_verification(
      spec, [sampler](std::uint64_t s) { return sampler->draw(s); }, lattice, {}, d, p_grid, mc);
}

RegularityReport run_verification(const FieldSpec& spec, const ReplicateSource& source,
                                  const Lattice& lattice, std::span<const std::uint8_t> mask,
                                  int d, std::span<const double> p_grid, const McConfig& mc) {
  if (d < 0) throw std::invalid_argument("derivative order d must be >= 0");
  if (p_grid.empty()) throw std::invalid_argument("p grid must not be empty");
  for (double p : p_grid)
    if (!(p > 1.0)) throw std::invalid_argument("every p in the grid must exceed 1");
  if (d > spec.derivative_order())
    throw std::invalid_argument("derivative order " + std::to_string(d) + " unavailable for " +
                                spec.name());
  if (mc.n_replicates < 100) throw std::invalid_argument("n_replicates must be >= 100");
  if (mc.min_level > mc.max_level) throw std::invalid_argument("min_level exceeds max_level");

  RegularityReport rep;
  rep.spec = spec;
  rep.d = d;
  rep.n = static_cast<int>(lattice.dim());
  rep.p_grid.assign(p_grid.begin(), p_grid.end());
  rep.tolerance = mc.tolerance;
  rep.mc = mc;
  rep.lattice = to_json(lattice);

  std::vector<int> levels;
  for (int k = mc.min_level; k <= mc.max_level; ++k) levels.push_back(k);
  const PointPairSet pairs = restrict_pairs(
      dyadic_pairs(lattice, levels, mc.random_pairs_per_level, derive_seed(mc.master_seed, ~0ULL)),
      mask);

  std::vector<MultiIndex> alphas;
  for (int order = mc.strict ? 0 : d; order <= d; ++order)
    for (auto& a : multi_indices_of_order(lattice.dim(), order)) alphas.push_back(std::move(a));

  auto sfs = estimate_structure_functions(source, pairs, alphas, p_grid, mc.n_replicates,
                                          mc.master_seed, mc.threads);

  bool all_degenerate = true;
  for (std::size_t q = 0; q < p_grid.size(); ++q) {
    PerPResult row;
    row.p = p_grid[q];
    bool any_fit = false;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const MomentFit fit = fit_moment_exponent(sfs[a][q], rep.n);
      if (fit.degenerate) continue;
      all_degenerate = false;
      if (!any_fit || *fit.epsilon_hat < *row.epsilon_hat) {
        any_fit = true;
        row.epsilon_hat = fit.epsilon_hat;
        row.epsilon_se = fit.theta_se;
        row.theta_hat = fit.theta_hat;
        row.intercept = fit.intercept;
        row.r_squared = fit.r_squared;
        row.alpha = alphas[a];
      }
    }
    if (!any_fit) {
      row.note = "constant field: all increments vanish";
    } else if (!(*row.epsilon_hat > 0.0)) {
      row.note = "epsilon_hat <= 0: moment condition not established at this p";
    } else {
      std::string warning;
      row.t_max = predict_t_max(d, row.p, *row.epsilon_hat, rep.n, &warning);
      row.clamped = !warning.empty();
      row.epsilon_used = std::min(*row.epsilon_hat, row.p);
      row.note = warning;
    }
    rep.per_p.push_back(std::move(row));
  }
  for (auto& per_alpha : sfs)
    for (auto& sf : per_alpha) rep.structure.push_back(std::move(sf));
  rep.degenerate = all_degenerate;

  for (const auto& row : rep.per_p)
    if (row.t_max && (!rep.t_star || *row.t_max > *rep.t_star)) rep.t_star = row.t_max;

  // Empirical regularity of the order-d derivatives.
  std::optional<SubBox> box;
  std::optional<Lattice> holder_lattice;
  if (!mask.empty()) {
    box = valid_subbox(lattice, mask);
    if (!box || box->cells < (std::size_t{1} << mc.holder_max_level))
      throw std::invalid_argument(
          "masked lattice: the largest fully valid centred sub-box has " +
          std::to_string(box ? box->cells : 0) + " cells per axis, fewer than 2^holder_max_level");
    holder_lattice = subbox_lattice(lattice, *box);
  }
  rep.holder_lattice = to_json(holder_lattice ? *holder_lattice : lattice);
  std::vector<GridField> fields;
  for (const auto& alpha : multi_indices_of_order(lattice.dim(), d)) {
    std::vector<std::optional<GridField>> slots(mc.holder_samples);
    parallel_for(mc.holder_samples, mc.threads, [&](std::size_t r) {
      GridField f = source(derive_seed(mc.master_seed, r)).derivative_field(alpha);
      if (box) f = extract_subbox(f, *holder_lattice, *box);
      slots[r] = std::move(f);
    });
    fields.clear();
    for (auto& s : slots) fields.push_back(std::move(*s));
    HolderEstimate est = holder_exponent_estimate(fields, mc.holder_max_level, mc.holder_min_level,
                                                  mc.holder_window_level);
    if (est.constant) {
      if (!rep.holder.levels.empty() && !rep.holder.constant) continue;
      rep.holder = std::move(est);
      continue;
    }
    if (rep.holder.levels.empty() || rep.holder.constant || est.slope < rep.holder.slope)
      rep.holder = std::move(est);
  }
  if (!rep.holder.constant) {
    rep.empirical_t = d + rep.holder.slope;
    rep.empirical_se = rep.holder.standard_error;
  }

  if (rep.degenerate)
    rep.verdict = "constant";
  else if (!rep.t_star || !rep.empirical_t)
    rep.verdict = "inconclusive";
  else
    rep.verdict = std::abs(*rep.empirical_t - *rep.t_star) <= mc.tolerance ? "pass" : "fail";
  return rep;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const RegularityReport& r) {
  nlohmann::json per_p = nlohmann::json::array();
  for (const auto& row : r.per_p) {
    per_p.push_back({{"p", row.p},
                     {"epsilon_hat", opt(row.epsilon_hat)},
                     {"epsilon_se", opt(row.epsilon_se)},
                     {"epsilon_used", opt(row.epsilon_used)},
                     {"theta_hat", opt(row.theta_hat)},
                     {"intercept", row.theta_hat ? nlohmann::json(row.intercept) : nlohmann::json(nullptr)},
                     {"r_squared", row.theta_hat ? nlohmann::json(row.r_squared) : nlohmann::json(nullptr)},
                     {"alpha", row.alpha.entries()},
                     {"t_max", opt(row.t_max)},
                     {"clamped", row.clamped},
                     {"note", row.note}});
  }
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : r.holder.levels)
    levels.push_back({{"level", l.level},
                      {"lag", l.lag},
                      {"median_max_increment", l.median_max_increment},
                      {"n_samples", l.n_samples},
                      {"n_windows", l.n_windows}});
  return {{"spec", to_json(r.spec)},
          {"d", r.d},
          {"n", r.n},
          {"p_grid", r.p_grid},
          {"moment_check", r.mc.strict ? "all |alpha| <= d" : "|alpha| = d"},
          {"per_p", std::move(per_p)},
          {"t_star", opt(r.t_star)},
          {"empirical_t", opt(r.empirical_t)},
          {"empirical_se", opt(r.empirical_se)},
          {"degenerate", r.degenerate},
          {"verdict", r.verdict},
          {"tolerance", r.tolerance},
          {"lattice", r.lattice},
          {"holder_levels", std::move(levels)},
          {"holder_lattice", r.holder_lattice},
          {"mc_config", to_json(r.mc)},
          {"seeds", {{"master_seed", r.mc.master_seed}, {"derivation", "splitmix64(master, index)"}}}};
}

void write_structure_csv(std::ostream& out, std::span<const StructureFunctionData> data) {
  out << "p,alpha,lag,estimate,se\n";
  char buf[128];
  for (const auto& sf : data) {
    std::string alpha;
    for (std::size_t i = 0; i < sf.alpha.size(); ++i) {
      if (i) alpha += ' ';
      alpha += std::to_string(sf.alpha[i]);
    }
    for (const auto& pt : sf.points) {
      std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g,%.17g,%.17g\n", sf.p, alpha.c_str(), pt.lag,
                    pt.estimate, pt.standard_error);
      out << buf;
    }
  }
}

}  // namespace kclab
