#pragma once

// Seeded exact samplers for the Gaussian field families.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "kclab/field_spec.hpp"
#include "kclab/grid_field.hpp"
#include "kclab/spherical_harmonics.hpp"

namespace kclab {

/// Failure of the jittered Cholesky factorization (covariance not PSD).
class CholeskyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lower Cholesky factor of `cov` after adding jitter * mean(diag) to the
/// diagonal, with jitter escalating 1e-12, 1e-11, ..., 1e-8. An all-zero
/// matrix factors to zero. Throws CholeskyError when every level fails.
Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& cov, double* used_jitter = nullptr);

/// Sampler for one (spec, lattice) pair. Construction does the expensive
/// setup (Cholesky factors, circulant eigenvalues); draw() is const and safe
/// to call from several threads.
class LatticeSampler {
 public:
  LatticeSampler(FieldSpec spec, Lattice lattice);
  ~LatticeSampler();
  LatticeSampler(LatticeSampler&&) noexcept;
  LatticeSampler& operator=(LatticeSampler&&) noexcept;

  GridField draw(std::uint64_t seed) const;

  const FieldSpec& spec() const { return spec_; }
  const Lattice& lattice() const { return lattice_; }
  /// True when fractional BM uses circulant embedding instead of Cholesky.
  bool uses_circulant_embedding() const;

 private:
  struct Impl;
  FieldSpec spec_;
  Lattice lattice_;
  std::unique_ptr<Impl> impl_;
};

/// One realization; equivalent to LatticeSampler(spec, lattice).draw(seed).
GridField sample(const FieldSpec& spec, const Lattice& lattice, std::uint64_t seed);

/// Band-limited real spherical-harmonic expansion on S^2.
class SphereField {
 public:
  SphereField(std::size_t band_limit, std::vector<double> coefficients);

  std::size_t band_limit() const { return band_limit_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  double coefficient(int l, int m) const { return coefficients_[sh_index(l, m)]; }

  /// Value at a point of R^3 \ {0}, projected radially onto the sphere.
  double evaluate(const Vec3& x) const;

 private:
  std::size_t band_limit_;
  std::vector<double> coefficients_;
};

SphereField sample_sphere(const FieldSpec& spec, std::uint64_t seed);

/// Coefficients as rows "l,m,a_lm" under a header line.
void write_sphere_field_csv(std::ostream& out, const SphereField& field);

/// E|N(0,1)|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi), via lgamma.
double gaussian_abs_moment(double p);

/// Variance of X(x) - X(y) for the spec. Points are lattice coordinates, or
/// unit vectors in R^3 for SphereIsotropic. Throws std::domain_error when the
/// kind has no closed form.
double increment_variance(const FieldSpec& spec, const std::vector<double>& x,
                          const std::vector<double>& y);

/// E|X(x) - X(y)|^p for Gaussian specs with known increment variance.
double exact_increment_moment(const FieldSpec& spec, const std::vector<double>& x,
                              const std::vector<double>& y, double p);

}  // namespace kclab
