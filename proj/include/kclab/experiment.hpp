#pragma once

// Flat JSON experiment configs and the batch commands behind the CLI.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kclab/field_spec.hpp"
#include "kclab/kc_engine.hpp"

namespace kclab {

/// Parse or validation error in an experiment config. The message names the
/// offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  /// "domain", "sphere", "sobolev-boundary", "embedding-ratio" or "covering".
  std::string mode = "domain";
  bool mode_given = false;
  FieldSpec spec = FieldSpec::brownian_motion();
  int d = 0;
  std::vector<double> p_grid{4.0, 8.0, 16.0};
  McConfig mc;

  // sphere
  double cap_angle = 1.2;
  double transition_width = 0.4;

  // sobolev-boundary
  std::vector<double> nu_grid{0.3, 0.45, 0.55, 0.7};
  std::vector<std::size_t> m_grid{257, 513, 1025};
  double p = 4.0;

  // embedding-ratio
  double t = 0.0;
  double s = 1.0;
  std::size_t k_max = 8;
  double constant_value = 1.0;

  // covering
  std::vector<std::size_t> covering_dims{1, 2};
  int covering_min_level = 1;
  int covering_max_level = 5;

  /// The config document as read, with overrides applied. Echoed in reports.
  nlohmann::json document;
};

/// Builds a config from a flat JSON object. Unknown keys, wrong types and
/// out-of-range values raise ConfigError.
ExperimentConfig parse_experiment_config(const nlohmann::json& document);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Replaces the master seed (and its echo in the document).
void override_seed(ExperimentConfig& config, std::uint64_t seed);

struct CommandResult {
  int exit_code = 0;
  std::vector<std::filesystem::path> files;
  std::string summary;
};

/// Regularity verification (domain or sphere). Writes report.json and the
/// structure-function CSV(s). Exit code 0 for "pass" or "constant", 2
/// otherwise.
CommandResult cmd_verify(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                         unsigned threads = 1);

/// Expected W^nu_p norms across nu and m with divergence flags. Writes
/// sobolev_boundary.csv (nu, m, estimate, se, divergent) and report.json.
CommandResult cmd_sobolev_boundary(const ExperimentConfig& config,
                                   const std::filesystem::path& out_dir, unsigned threads = 1);

/// Hölder over Sobolev norm ratios for sin(2 pi k x), k = 1..k_max, plus a
/// constant row (k = 0). Writes embedding_ratio.csv (k, holder, sobolev,
/// ratio) and report.json. Exit code 2 when a ratio exceeds ten times the
/// k = 1 ratio.
CommandResult cmd_embedding_ratio(const ExperimentConfig& config,
                                  const std::filesystem::path& out_dir);

/// One realization: sample.csv (GridField layout, or sphere coefficients).
CommandResult cmd_sample(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Greedy covering numbers of the unit cube lattice at radii 2^-k. Writes
/// covering.csv (n, m, level, radius, count) and report.json with the
/// fitted entropy slope per dimension.
CommandResult cmd_covering(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct CoveringRow {
  int level = 0;
  double radius = 0.0;
  std::size_t count = 0;
};

struct CoveringTable {
  std::size_t dim = 1;
  std::size_t m = 0;
  std::vector<CoveringRow> rows;
  double slope = 0.0;  ///< fit of log count against log(1/radius)
};

CoveringTable covering_table(std::size_t dim, std::size_t m, int min_level, int max_level);

/// Row of the embedding-ratio experiment; k = 0 is the constant function.
struct EmbeddingRow {
  std::size_t k = 0;
  double holder = 0.0;
  double sobolev = 0.0;  ///< sobolev_norm_p^(1/p)
  double ratio = 0.0;
};

/// Throws std::invalid_argument when s <= t + 1/p, except s = t + 1/p with
/// non-integer t.
std::vector<EmbeddingRow> embedding_ratios(double t, double s, double p, std::size_t k_max,
                                           std::size_t m, double constant_value);

}  // namespace kclab
