#include "kclab/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <fftw3.h>

namespace kclab {

namespace {

constexpr std::size_t kMaxCholeskyPoints = 6000;
constexpr std::size_t kMaxBandLimit = 64;

std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

void fill_normals(std::mt19937_64& rng, std::span<double> out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : out) v = normal(rng);
}

void require_nonnegative_origin(const Lattice& lattice, const char* what) {
  for (double lo : lattice.domain().lower())
    if (lo < 0.0) throw std::invalid_argument(std::string(what) + " is indexed by [0, inf)");
}

/// Brownian motion started at 0 at time 0, observed on the lattice.
std::vector<double> brownian_path(const Lattice& lattice, std::mt19937_64& rng) {
  const std::size_t m = lattice.count(0);
  std::vector<double> z(m);
  fill_normals(rng, z);
  std::vector<double> x(m);
  x[0] = std::sqrt(lattice.domain().lower()[0]) * z[0];
  const double sd = std::sqrt(lattice.spacing(0));
  for (std::size_t k = 1; k < m; ++k) x[k] = x[k - 1] + sd * z[k];
  return x;
}

}  // namespace

Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& cov, double* used_jitter) {
  const Eigen::Index n = cov.rows();
  if (cov.cols() != n) throw std::invalid_argument("covariance must be square");
  if (used_jitter) *used_jitter = 0.0;
  if (n == 0 || cov.cwiseAbs().maxCoeff() == 0.0) return Eigen::MatrixXd::Zero(n, n);

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const double scale = cov.diagonal().cwiseAbs().mean();
  for (double jitter = 1e-12; jitter <= 1e-8 * 1.0001; jitter *= 10.0) {
    Eigen::MatrixXd shifted = cov;
    shifted.diagonal().array() += jitter * scale;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      if (used_jitter) *used_jitter = jitter;
      return llt.matrixL();
    }
  }
  throw CholeskyError("covariance is not positive semidefinite: Cholesky failed with jitter up to 1e-8");
}

struct LatticeSampler::Impl {
  enum class Route { Brownian, FbmCirculant, Cholesky, Integrated, Sheet };
  Route route = Route::Brownian;

  // Cholesky route.
  Eigen::MatrixXd factor;

  // Circulant embedding route: sqrt(lambda / M) and the FFT plan of size M.
  std::vector<double> circulant_scale;
  fftw_plan plan = nullptr;
  double hurst = 0.5;

  ~Impl() {
    if (plan) {
      std::lock_guard lock(fftw_plan_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

namespace {

/// sqrt of the circulant eigenvalues over M for fractional Gaussian noise of
/// length n. Returns empty when the embedding is not nonnegative definite.
std::vector<double> fgn_circulant_scale(std::size_t n, double hurst) {
  const std::size_t M = 2 * n;
  const double two_h = 2.0 * hurst;
  auto gamma = [&](double k) {
    return 0.5 * (std::pow(std::abs(k + 1.0), two_h) - 2.0 * std::pow(std::abs(k), two_h) +
                  std::pow(std::abs(k - 1.0), two_h));
  };
  fftw_complex* buf = fftw_alloc_complex(M);
  for (std::size_t j = 0; j < M; ++j) {
    const double k = static_cast<double>(j <= n ? j : M - j);
    buf[j][0] = gamma(k);
    buf[j][1] = 0.0;
  }
  fftw_plan p;
  {
    std::lock_guard lock(fftw_plan_mutex());
    p = fftw_plan_dft_1d(static_cast<int>(M), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(p);
  std::vector<double> scale(M);
  double max_lambda = 0.0;
  for (std::size_t j = 0; j < M; ++j) max_lambda = std::max(max_lambda, buf[j][0]);
  bool ok = true;
  for (std::size_t j = 0; j < M; ++j) {
    double lambda = buf[j][0];
    if (lambda < 0.0) {
      if (lambda < -1e-10 * max_lambda) ok = false;
      lambda = 0.0;
    }
    scale[j] = std::sqrt(lambda / static_cast<double>(M));
  }
  {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(p);
  }
  fftw_free(buf);
  if (!ok) scale.clear();
  return scale;
}

Eigen::MatrixXd lattice_covariance(const Lattice& lattice,
                                   const auto& cov_fn) {
  if (lattice.size() > kMaxCholeskyPoints)
    throw std::invalid_argument("lattice too large for a dense covariance factorization");
  const auto n = static_cast<Eigen::Index>(lattice.size());
  Eigen::MatrixXd cov(n, n);
  std::vector<std::vector<double>> pts(lattice.size());
  for (std::size_t i = 0; i < lattice.size(); ++i) pts[i] = lattice.point(i);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      cov(i, j) = cov(j, i) = cov_fn(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
  return cov;
}

}  // namespace

LatticeSampler::LatticeSampler(FieldSpec spec, Lattice lattice)
    : spec_(std::move(spec)), lattice_(std::move(lattice)), impl_(std::make_unique<Impl>()) {
  spec_.validate();
  if (lattice_.dim() != spec_.dim)
    throw std::invalid_argument("lattice dimension " + std::to_string(lattice_.dim()) +
                                " does not match field dimension " + std::to_string(spec_.dim));
  using Route = Impl::Route;
  if (const auto* bm = std::get_if<BrownianMotion>(&spec_.kind)) {
    require_nonnegative_origin(lattice_, "BrownianMotion");
    if (lattice_.domain().upper()[0] > bm->horizon * (1.0 + 1e-12))
      throw std::invalid_argument("lattice extends beyond the Brownian motion horizon");
    impl_->route = Route::Brownian;
  } else if (const auto* fbm = std::get_if<FractionalBM>(&spec_.kind)) {
    require_nonnegative_origin(lattice_, "FractionalBM");
    impl_->hurst = fbm->hurst;
    if (lattice_.domain().lower()[0] == 0.0)
      impl_->circulant_scale = fgn_circulant_scale(lattice_.count(0) - 1, fbm->hurst);
    if (!impl_->circulant_scale.empty()) {
      impl_->route = Route::FbmCirculant;
      const std::size_t M = impl_->circulant_scale.size();
      fftw_complex* buf = fftw_alloc_complex(M);
      {
        std::lock_guard lock(fftw_plan_mutex());
        impl_->plan = fftw_plan_dft_1d(static_cast<int>(M), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
      }
      fftw_free(buf);
    } else {
      impl_->route = Route::Cholesky;
      const CovarianceField cov{"fbm", {{"hurst", fbm->hurst}}};
      impl_->factor = jittered_cholesky(lattice_covariance(
          lattice_, [&](const auto& x, const auto& y) { return covariance_value(cov, x, y); }));
    }
  } else if (std::holds_alternative<IntegratedBM>(spec_.kind)) {
    if (lattice_.domain().lower()[0] != 0.0)
      throw std::invalid_argument("IntegratedBM lattices must start at 0");
    impl_->route = Route::Integrated;
  } else if (std::holds_alternative<BrownianSheet>(spec_.kind)) {
    require_nonnegative_origin(lattice_, "BrownianSheet");
    impl_->route = Route::Sheet;
  } else if (const auto* cf = std::get_if<CovarianceField>(&spec_.kind)) {
    impl_->route = Route::Cholesky;
    impl_->factor = jittered_cholesky(lattice_covariance(
        lattice_, [&](const auto& x, const auto& y) { return covariance_value(*cf, x, y); }));
  } else {
    throw std::invalid_argument("sphere fields are sampled with sample_sphere, not on a lattice");
  }
}

LatticeSampler::~LatticeSampler() = default;
LatticeSampler::LatticeSampler(LatticeSampler&&) noexcept = default;
LatticeSampler& LatticeSampler::operator=(LatticeSampler&&) noexcept = default;

bool LatticeSampler::uses_circulant_embedding() const {
  return impl_->route == Impl::Route::FbmCirculant;
}

GridField LatticeSampler::draw(std::uint64_t seed) const {
  using Route = Impl::Route;
  std::mt19937_64 rng(seed);
  const Lattice& lat = lattice_;

  switch (impl_->route) {
    case Route::Brownian:
      return GridField(lat, brownian_path(lat, rng));

    case Route::Integrated: {
      auto b = brownian_path(lat, rng);
      const double h = lat.spacing(0);
      std::vector<double> y(b.size(), 0.0);
      for (std::size_t k = 1; k < b.size(); ++k) y[k] = y[k - 1] + 0.5 * h * (b[k - 1] + b[k]);
      GridField f(lat, std::move(y));
      f.set_derivative(MultiIndex::unit(1, 0), std::move(b));
      f.d_avail = 1;
      return f;
    }

    case Route::FbmCirculant: {
      const std::size_t M = impl_->circulant_scale.size();
      const std::size_t n = M / 2;
      fftw_complex* buf = fftw_alloc_complex(M);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (std::size_t j = 0; j < M; ++j) {
        buf[j][0] = impl_->circulant_scale[j] * normal(rng);
        buf[j][1] = impl_->circulant_scale[j] * normal(rng);
      }
      fftw_execute_dft(impl_->plan, buf, buf);
      const double scale = std::pow(lat.spacing(0), impl_->hurst);
      std::vector<double> x(n + 1, 0.0);
      for (std::size_t k = 0; k < n; ++k) x[k + 1] = x[k] + scale * buf[k][0];
      fftw_free(buf);
      return GridField(lat, std::move(x));
    }

    case Route::Sheet: {
      // Cell widths along each axis: [0, lower] followed by the lattice cells.
      const std::size_t m0 = lat.count(0), m1 = lat.count(1);
      auto widths = [&](std::size_t axis) {
        std::vector<double> w(lat.count(axis));
        w[0] = lat.domain().lower()[axis];
        for (std::size_t k = 1; k < w.size(); ++k)
          w[k] = lat.coordinate(axis, k) - lat.coordinate(axis, k - 1);
        return w;
      };
      const auto w0 = widths(0), w1 = widths(1);
      std::vector<double> z(m0 * m1);
      fill_normals(rng, z);
      std::vector<double> x(m0 * m1);
      for (std::size_t i = 0; i < m0; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m1; ++j) {
          row += std::sqrt(w0[i] * w1[j]) * z[i * m1 + j];
          x[i * m1 + j] = row + (i > 0 ? x[(i - 1) * m1 + j] : 0.0);
        }
      }
      return GridField(lat, std::move(x));
    }

    case Route::Cholesky: {
      Eigen::VectorXd z(static_cast<Eigen::Index>(lat.size()));
      fill_normals(rng, std::span<double>(z.data(), lat.size()));
      Eigen::VectorXd x = impl_->factor.triangularView<Eigen::Lower>() * z;
      return GridField(lat, std::vector<double>(x.data(), x.data() + x.size()));
    }
  }
  throw std::logic_error("unreachable sampler route");
}

GridField sample(const FieldSpec& spec, const Lattice& lattice, std::uint64_t seed) {
  return LatticeSampler(spec, lattice).draw(seed);
}

SphereField::SphereField(std::size_t band_limit, std::vector<double> coefficients)
    : band_limit_(band_limit), coefficients_(std::move(coefficients)) {
  if (coefficients_.size() != sh_count(band_limit_))
    throw std::invalid_argument("sphere field needs (L+1)^2 coefficients");
}

double SphereField::evaluate(const Vec3& x) const {
  thread_local std::vector<double> basis;
  basis.resize(sh_count(band_limit_));
  real_sh_basis(band_limit_, x, basis);
  double sum = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) sum += coefficients_[i] * basis[i];
  return sum;
}

SphereField sample_sphere(const FieldSpec& spec, std::uint64_t seed) {
  const auto* s = std::get_if<SphereIsotropic>(&spec.kind);
  if (!s) throw std::invalid_argument("sample_sphere needs a SphereIsotropic spec");
  spec.validate();
  const std::size_t L = s->band_limit();
  if (L > kMaxBandLimit) throw std::invalid_argument("band limit above 64 is not supported");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> a(sh_count(L));
  for (int l = 0; l <= static_cast<int>(L); ++l) {
    const double sd = std::sqrt(s->power_spectrum[static_cast<std::size_t>(l)]);
    for (int m = -l; m <= l; ++m) a[sh_index(l, m)] = sd * normal(rng);
  }
  return SphereField(L, std::move(a));
}

void write_sphere_field_csv(std::ostream& out, const SphereField& field) {
  out << "l,m,a_lm\n";
  char buf[32];
  for (int l = 0; l <= static_cast<int>(field.band_limit()); ++l)
    for (int m = -l; m <= l; ++m) {
      std::snprintf(buf, sizeof buf, "%.17g", field.coefficient(l, m));
      out << l << ',' << m << ',' << buf << '\n';
    }
}

double gaussian_abs_moment(double p) {
  if (!(p >= 0.0)) throw std::invalid_argument("moment order must be >= 0");
  return std::exp(0.5 * p * std::numbers::ln2 + std::lgamma(0.5 * (p + 1.0)) -
                  0.5 * std::log(std::numbers::pi));
}

double increment_variance(const FieldSpec& spec, const std::vector<double>& x,
                          const std::vector<double>& y) {
  if (const auto* s = std::get_if<SphereIsotropic>(&spec.kind)) {
    if (x.size() != 3 || y.size() != 3)
      throw std::invalid_argument("sphere increments need unit vectors in R^3");
    const double c = std::clamp(x[0] * y[0] + x[1] * y[1] + x[2] * y[2], -1.0, 1.0);
    double v = 0.0;
    for (std::size_t l = 0; l < s->power_spectrum.size(); ++l)
      v += s->power_spectrum[l] * (2.0 * l + 1.0) / (4.0 * std::numbers::pi) * 2.0 *
           (1.0 - legendre(l, c));
    return v;
  }
  if (x.size() != spec.dim || y.size() != spec.dim)
    throw std::invalid_argument("point dimension does not match field");
  if (std::holds_alternative<BrownianMotion>(spec.kind)) return std::abs(x[0] - y[0]);
  if (const auto* f = std::get_if<FractionalBM>(&spec.kind))
    return std::pow(std::abs(x[0] - y[0]), 2.0 * f->hurst);
  if (std::holds_alternative<IntegratedBM>(spec.kind)) {
    const double s = std::min(x[0], y[0]), t = std::max(x[0], y[0]);
    return t * t * t / 3.0 + s * s * s / 3.0 - s * s * (3.0 * t - s) / 3.0;
  }
  if (std::holds_alternative<BrownianSheet>(spec.kind))
    return x[0] * x[1] + y[0] * y[1] - 2.0 * std::min(x[0], y[0]) * std::min(x[1], y[1]);
  if (const auto* c = std::get_if<CovarianceField>(&spec.kind))
    return covariance_value(*c, x, x) + covariance_value(*c, y, y) - 2.0 * covariance_value(*c, x, y);
  throw std::domain_error("no closed form increment variance for " + spec.name());
}

double exact_increment_moment(const FieldSpec& spec, const std::vector<double>& x,
                              const std::vector<double>& y, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("moment order p must be >= 1");
  const double var = std::max(0.0, increment_variance(spec, x, y));
  return std::pow(var, 0.5 * p) * gaussian_abs_moment(p);
}

}  // namespace kclab
