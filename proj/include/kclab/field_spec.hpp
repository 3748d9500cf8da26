#pragma once

// Declarative descriptions of the random field families.

#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace kclab {

struct BrownianMotion {
  double horizon = 1.0;
};

struct FractionalBM {
  double hurst = 0.5;
};

/// Y(t) = integral of a Brownian motion from 0 to t. Differentiable once.
struct IntegratedBM {};

/// X(s, t) = W([0,s] x [0,t]) for white noise W on the quarter plane.
struct BrownianSheet {};

/// Centred Gaussian field with a named covariance function.
/// Ids: "brownian" (min), "fbm" (hurst), "exponential" (variance, length),
/// "gaussian" (variance, length), "zero".
struct CovarianceField {
  std::string covariance;
  std::map<std::string, double> params;
};

/// Isotropic field on S^2 with angular power spectrum A_0..A_L.
struct SphereIsotropic {
  std::vector<double> power_spectrum;
  std::size_t band_limit() const { return power_spectrum.empty() ? 0 : power_spectrum.size() - 1; }
};

using FieldKind = std::variant<BrownianMotion, FractionalBM, IntegratedBM,
                               BrownianSheet, CovarianceField, SphereIsotropic>;

struct FieldSpec {
  FieldKind kind;
  std::size_t dim = 1;

  static FieldSpec brownian_motion(double horizon = 1.0);
  static FieldSpec fractional_bm(double hurst);
  static FieldSpec integrated_bm();
  static FieldSpec brownian_sheet();
  static FieldSpec covariance_field(std::string id, std::map<std::string, double> params,
                                    std::size_t dim = 1);
  static FieldSpec sphere_isotropic(std::vector<double> power_spectrum);

  /// Throws std::invalid_argument when the parameters break an invariant.
  void validate() const;

  /// Highest order of exact derivatives the sampler provides.
  int derivative_order() const;

  std::string name() const;
};

/// A_l = (1 + l)^-decay for l = 0..band_limit.
std::vector<double> power_law_spectrum(std::size_t band_limit, double decay);

/// Covariance of a CovarianceField spec between two points.
double covariance_value(const CovarianceField& spec, const std::vector<double>& x,
                        const std::vector<double>& y);

nlohmann::json to_json(const FieldSpec& spec);
FieldSpec field_spec_from_json(const nlohmann::json& j);

}  // namespace kclab
