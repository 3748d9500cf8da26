#include "kclab/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "kclab/grid.hpp"
#include "kclab/manifold.hpp"
#include "kclab/norms.hpp"
#include "kclab/numeric.hpp"
#include "kclab/samplers.hpp"

namespace kclab {

namespace {

using Json = nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError("config key '" + key + "': " + what);
}

double get_number(const std::string& key, const Json& v) {
  if (!v.is_number()) bad(key, "expected a number");
  return v.get<double>();
}

double get_positive(const std::string& key, const Json& v) {
  const double x = get_number(key, v);
  if (!(x > 0.0)) bad(key, "expected a positive number");
  return x;
}

std::uint64_t get_unsigned(const std::string& key, const Json& v) {
  // Programmatically built documents store small integers as signed.
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    bad(key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

int get_int(const std::string& key, const Json& v) {
  if (!v.is_number_integer()) bad(key, "expected an integer");
  return v.get<int>();
}

std::string get_string(const std::string& key, const Json& v) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

bool get_bool(const std::string& key, const Json& v) {
  if (!v.is_boolean()) bad(key, "expected true or false");
  return v.get<bool>();
}

std::vector<double> get_numbers(const std::string& key, const Json& v) {
  if (!v.is_array() || v.empty()) bad(key, "expected a nonempty array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(get_number(key, e));
  return out;
}

std::vector<std::size_t> get_counts(const std::string& key, const Json& v) {
  if (!v.is_array() || v.empty()) bad(key, "expected a nonempty array of integers");
  std::vector<std::size_t> out;
  for (const auto& e : v) out.push_back(get_unsigned(key, e));
  return out;
}

/// Field parameters collected before the spec is built.
struct FieldKeys {
  std::string field = "brownian_motion";
  std::map<std::string, Json> params;
};

const std::map<std::string, std::vector<std::string>>& field_params() {
  static const std::map<std::string, std::vector<std::string>> table{
      {"brownian_motion", {"horizon"}},
      {"fractional_bm", {"hurst"}},
      {"integrated_bm", {}},
      {"brownian_sheet", {}},
      {"covariance", {"covariance", "variance", "length", "hurst", "dim"}},
      {"sphere_isotropic", {"band_limit", "spectrum_decay", "power_spectrum"}},
  };
  return table;
}

FieldSpec build_spec(const FieldKeys& keys) {
  const auto& table = field_params();
  const auto it = table.find(keys.field);
  if (it == table.end()) bad("field", "unknown field kind '" + keys.field + "'");
  for (const auto& [key, value] : keys.params)
    if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
      bad(key, "does not apply to field '" + keys.field + "'");
  auto param = [&](const std::string& key) -> const Json* {
    const auto p = keys.params.find(key);
    return p == keys.params.end() ? nullptr : &p->second;
  };

  FieldSpec spec;
  if (keys.field == "brownian_motion") {
    spec = FieldSpec::brownian_motion(param("horizon") ? get_positive("horizon", *param("horizon"))
                                                       : 1.0);
  } else if (keys.field == "fractional_bm") {
    if (!param("hurst")) bad("hurst", "required for field 'fractional_bm'");
    spec = FieldSpec::fractional_bm(get_number("hurst", *param("hurst")));
  } else if (keys.field == "integrated_bm") {
    spec = FieldSpec::integrated_bm();
  } else if (keys.field == "brownian_sheet") {
    spec = FieldSpec::brownian_sheet();
  } else if (keys.field == "covariance") {
    if (!param("covariance")) bad("covariance", "required for field 'covariance'");
    std::map<std::string, double> params;
    for (const char* k : {"variance", "length", "hurst"})
      if (param(k)) params[k] = get_number(k, *param(k));
    const std::size_t dim = param("dim") ? get_unsigned("dim", *param("dim")) : 1;
    spec = FieldSpec::covariance_field(get_string("covariance", *param("covariance")),
                                       std::move(params), dim);
  } else {
    std::vector<double> spectrum;
    if (param("power_spectrum")) {
      if (param("band_limit") || param("spectrum_decay"))
        bad("power_spectrum", "give either power_spectrum or band_limit with spectrum_decay");
      spectrum = get_numbers("power_spectrum", *param("power_spectrum"));
    } else {
      if (!param("band_limit")) bad("band_limit", "required for field 'sphere_isotropic'");
      if (!param("spectrum_decay")) bad("spectrum_decay", "required for field 'sphere_isotropic'");
      spectrum = power_law_spectrum(get_unsigned("band_limit", *param("band_limit")),
                                    get_number("spectrum_decay", *param("spectrum_decay")));
    }
    spec = FieldSpec::sphere_isotropic(std::move(spectrum));
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    bad("field", e.what());
  }
  return spec;
}

using Setter = std::function<void(ExperimentConfig&, const Json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"mode",
       [](ExperimentConfig& c, const Json& v) {
         c.mode = get_string("mode", v);
         c.mode_given = true;
         static const std::vector<std::string> modes{"domain", "sphere", "sobolev-boundary",
                                                     "embedding-ratio", "covering"};
         if (std::find(modes.begin(), modes.end(), c.mode) == modes.end())
           bad("mode", "unknown mode '" + c.mode + "'");
       }},
      {"d", [](ExperimentConfig& c, const Json& v) {
         c.d = get_int("d", v);
         if (c.d < 0) bad("d", "must be >= 0");
       }},
      {"p_grid", [](ExperimentConfig& c, const Json& v) {
         c.p_grid = get_numbers("p_grid", v);
         for (double p : c.p_grid)
           if (!(p > 1.0)) bad("p_grid", "every entry must exceed 1");
       }},
      {"m", [](ExperimentConfig& c, const Json& v) {
         c.mc.points_per_axis = get_unsigned("m", v);
         if (c.mc.points_per_axis < 2) bad("m", "must be >= 2");
       }},
      {"n_replicates", [](ExperimentConfig& c, const Json& v) {
         c.mc.n_replicates = get_unsigned("n_replicates", v);
       }},
      {"master_seed", [](ExperimentConfig& c, const Json& v) {
         c.mc.master_seed = get_unsigned("master_seed", v);
       }},
      {"min_level", [](ExperimentConfig& c, const Json& v) { c.mc.min_level = get_int("min_level", v); }},
      {"max_level", [](ExperimentConfig& c, const Json& v) { c.mc.max_level = get_int("max_level", v); }},
      {"holder_samples", [](ExperimentConfig& c, const Json& v) {
         c.mc.holder_samples = get_unsigned("holder_samples", v);
       }},
      {"holder_min_level", [](ExperimentConfig& c, const Json& v) {
         c.mc.holder_min_level = get_int("holder_min_level", v);
       }},
      {"holder_max_level", [](ExperimentConfig& c, const Json& v) {
         c.mc.holder_max_level = get_int("holder_max_level", v);
       }},
      {"holder_window_level", [](ExperimentConfig& c, const Json& v) {
         c.mc.holder_window_level = get_int("holder_window_level", v);
       }},
      {"random_pairs_per_level", [](ExperimentConfig& c, const Json& v) {
         c.mc.random_pairs_per_level = get_unsigned("random_pairs_per_level", v);
       }},
      {"tolerance", [](ExperimentConfig& c, const Json& v) {
         c.mc.tolerance = get_positive("tolerance", v);
       }},
      {"strict", [](ExperimentConfig& c, const Json& v) { c.mc.strict = get_bool("strict", v); }},
      {"cap_angle", [](ExperimentConfig& c, const Json& v) {
         c.cap_angle = get_number("cap_angle", v);
         if (!(c.cap_angle > 0.0 && c.cap_angle < std::numbers::pi / 2.0))
           bad("cap_angle", "must lie in (0, pi/2)");
       }},
      {"transition_width", [](ExperimentConfig& c, const Json& v) {
         c.transition_width = get_positive("transition_width", v);
       }},
      {"nu_grid", [](ExperimentConfig& c, const Json& v) {
         c.nu_grid = get_numbers("nu_grid", v);
         for (double nu : c.nu_grid)
           if (!(nu >= 0.0)) bad("nu_grid", "entries must be >= 0");
       }},
      {"m_grid", [](ExperimentConfig& c, const Json& v) { c.m_grid = get_counts("m_grid", v); }},
      {"p", [](ExperimentConfig& c, const Json& v) {
         c.p = get_number("p", v);
         if (!(c.p >= 1.0)) bad("p", "must be >= 1");
       }},
      {"t", [](ExperimentConfig& c, const Json& v) {
         c.t = get_number("t", v);
         if (!(c.t >= 0.0)) bad("t", "must be >= 0");
       }},
      {"s", [](ExperimentConfig& c, const Json& v) {
         c.s = get_number("s", v);
         if (!(c.s >= 0.0)) bad("s", "must be >= 0");
       }},
      {"k_max", [](ExperimentConfig& c, const Json& v) {
         c.k_max = get_unsigned("k_max", v);
         if (c.k_max < 1) bad("k_max", "must be >= 1");
       }},
      {"constant_value", [](ExperimentConfig& c, const Json& v) {
         c.constant_value = get_number("constant_value", v);
       }},
      {"covering_dims", [](ExperimentConfig& c, const Json& v) {
         c.covering_dims = get_counts("covering_dims", v);
         for (std::size_t n : c.covering_dims)
           if (n < 1 || n > 3) bad("covering_dims", "dimensions must lie in 1..3");
       }},
      {"covering_min_level", [](ExperimentConfig& c, const Json& v) {
         c.covering_min_level = get_int("covering_min_level", v);
       }},
      {"covering_max_level", [](ExperimentConfig& c, const Json& v) {
         c.covering_max_level = get_int("covering_max_level", v);
       }},
  };
  return table;
}

bool is_field_key(const std::string& key) {
  if (key == "field") return true;
  for (const auto& [kind, keys] : field_params())
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) return true;
  return false;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::filesystem::path prepare(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  return dir;
}

void require_mode(const ExperimentConfig& c, std::initializer_list<const char*> allowed,
                  const char* command) {
  if (!c.mode_given) return;
  for (const char* m : allowed)
    if (c.mode == m) return;
  throw ConfigError("config key 'mode': '" + c.mode + "' cannot be run by the " + command +
                    " command");
}

BoxDomain domain_for(const FieldSpec& spec) {
  if (const auto* bm = std::get_if<BrownianMotion>(&spec.kind))
    return BoxDomain({0.0}, {bm->horizon});
  return BoxDomain::unit(spec.dim);
}

// Shortest text that reads back to the same double.
std::string fmt(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Json base_report(const ExperimentConfig& c, const char* command) {
  return {{"command", command}, {"config", c.document}};
}

}  // namespace

ExperimentConfig parse_experiment_config(const Json& document) {
  if (!document.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  FieldKeys fk;
  const auto& table = setters();
  for (const auto& [key, value] : document.items()) {
    if (key == "field") {
      fk.field = get_string("field", value);
    } else if (is_field_key(key)) {
      fk.params[key] = value;
    } else if (const auto it = table.find(key); it != table.end()) {
      it->second(c, value);
    } else {
      throw ConfigError("config key '" + key + "': unknown key");
    }
  }
  c.spec = build_spec(fk);
  if (!c.mode_given && std::holds_alternative<SphereIsotropic>(c.spec.kind)) c.mode = "sphere";
  if (c.mc.n_replicates < 100) bad("n_replicates", "must be >= 100");
  if (c.mc.min_level < 0 || c.mc.min_level > c.mc.max_level)
    bad("min_level", "must satisfy 0 <= min_level <= max_level");
  if (c.mc.holder_min_level < 1 || c.mc.holder_min_level >= c.mc.holder_max_level)
    bad("holder_min_level", "must satisfy 1 <= holder_min_level < holder_max_level");
  if (c.mc.holder_samples < 20) bad("holder_samples", "must be >= 20");
  if (c.mc.holder_window_level != -1 && c.mc.holder_window_level < c.mc.holder_min_level)
    bad("holder_window_level", "must be >= holder_min_level");
  if (c.d > c.spec.derivative_order())
    bad("d", "field '" + c.spec.name() + "' provides derivatives up to order " +
                 std::to_string(c.spec.derivative_order()));
  for (std::size_t i = 1; i < c.m_grid.size(); ++i)
    if (c.m_grid[i] <= c.m_grid[i - 1]) bad("m_grid", "must be increasing");
  if (c.covering_min_level < 0 || c.covering_min_level >= c.covering_max_level)
    bad("covering_min_level", "must satisfy 0 <= covering_min_level < covering_max_level");
  c.document = document;
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_experiment_config(doc);
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.mc.master_seed = seed;
  config.document["master_seed"] = seed;
}

CommandResult cmd_verify(const ExperimentConfig& c, const std::filesystem::path& out_dir,
                         unsigned threads) {
  require_mode(c, {"domain", "sphere"}, "verify");
  McConfig mc = c.mc;
  mc.threads = threads;
  const auto dir = prepare(out_dir);
  CommandResult result;
  Json report = base_report(c, "verify");

  const auto write_structure = [&](const std::string& name,
                                   const std::vector<StructureFunctionData>& data) {
    std::ostringstream csv;
    write_structure_csv(csv, data);
    write_text(dir / name, csv.str());
    result.files.push_back(dir / name);
  };

  if (c.mode == "sphere") {
    const Atlas atlas = stereographic_atlas(c.cap_angle);
    const ChartwiseReport r = chartwise_regularity(c.spec, atlas, c.transition_width, c.d,
                                                   c.p_grid, mc);
    report["result"] = to_json(r);
    bool ok = true;
    for (const auto& chart : r.charts) {
      write_structure("structure_" + chart.chart_id + ".csv", chart.report.structure);
      ok = ok && (chart.report.verdict == "pass" || chart.report.verdict == "constant");
      result.summary += chart.chart_id + ": " + chart.report.verdict + "\n";
    }
    result.exit_code = ok ? 0 : 2;
  } else {
    if (std::holds_alternative<SphereIsotropic>(c.spec.kind))
      throw ConfigError("config key 'mode': sphere fields need mode 'sphere'");
    const RegularityReport r = run_verification(c.spec, c.d, c.p_grid, mc);
    report["result"] = to_json(r);
    write_structure("structure.csv", r.structure);
    result.summary = "verdict: " + r.verdict + "\n";
    result.exit_code = (r.verdict == "pass" || r.verdict == "constant") ? 0 : 2;
  }
  write_text(dir / "report.json", report.dump(2) + "\n");
  result.files.insert(result.files.begin(), dir / "report.json");
  return result;
}

CommandResult cmd_sobolev_boundary(const ExperimentConfig& c, const std::filesystem::path& out_dir,
                                   unsigned threads) {
  require_mode(c, {"sobolev-boundary"}, "sobolev-boundary");
  if (std::holds_alternative<SphereIsotropic>(c.spec.kind))
    throw ConfigError("config key 'field': the Sobolev sweep needs a lattice field");
  const auto dir = prepare(out_dir);
  const BoxDomain domain = domain_for(c.spec);

  std::string csv = "nu,m,estimate,se,divergent\n";
  Json rows = Json::array();
  CommandResult result;
  for (double nu : c.nu_grid) {
    const SobolevSweep sweep =
        sobolev_resolution_sweep(c.spec, domain, c.m_grid, NormSpec(nu), c.p, c.mc.n_replicates,
                                 c.mc.master_seed, threads);
    for (const auto& row : sweep.rows) {
      csv += fmt(nu) + "," + std::to_string(row.m) + "," + fmt(row.mean) + "," +
             fmt(row.standard_error) + "," + (sweep.divergent ? "true" : "false") + "\n";
    }
    rows.push_back({{"nu", nu},
                    {"divergent", sweep.divergent},
                    {"growth_ratio", sweep.growth_ratio ? Json(*sweep.growth_ratio) : Json(nullptr)}});
    result.summary += "nu=" + fmt(nu) + " divergent=" + (sweep.divergent ? "true" : "false") + "\n";
  }
  write_text(dir / "sobolev_boundary.csv", csv);
  Json report = base_report(c, "sobolev-boundary");
  report["result"] = {{"p", c.p}, {"m_grid", c.m_grid}, {"rows", rows}};
  write_text(dir / "report.json", report.dump(2) + "\n");
  result.files = {dir / "report.json", dir / "sobolev_boundary.csv"};
  return result;
}

std::vector<EmbeddingRow> embedding_ratios(double t, double s, double p, std::size_t k_max,
                                           std::size_t m, double constant_value) {
  constexpr double n = 1.0;
  const double edge = t + n / p;
  const bool t_integer = std::floor(t) == t;
  if (s < edge || (s == edge && t_integer))
    throw std::invalid_argument("embedding needs s > t + n/p (or s = t + n/p with t not an integer)");
  const NormSpec tn(t), sn(s);
  const int orders = std::max(tn.integer_part(), static_cast<int>(std::ceil(s)));
  const Lattice lattice = make_lattice(BoxDomain::unit(1), m);

  auto make = [&](std::size_t k) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k);
    auto order = [&](int j) {
      std::vector<double> v(lattice.size());
      for (std::size_t i = 0; i < lattice.size(); ++i) {
        const double x = lattice.coordinate(0, i);
        v[i] = k == 0 ? (j == 0 ? constant_value : 0.0)
                      : std::pow(w, j) * std::sin(w * x + j * std::numbers::pi / 2.0);
      }
      return v;
    };
    GridField f(lattice, order(0));
    for (int j = 1; j <= orders; ++j) f.set_derivative(MultiIndex({j}), order(j));
    f.d_avail = orders;
    return f;
  };

  std::vector<EmbeddingRow> rows;
  for (std::size_t k = 0; k <= k_max; ++k) {
    const GridField f = make(k);
    EmbeddingRow row;
    row.k = k;
    row.holder = holder_norm(f, tn, DerivativeSource::Exact);
    row.sobolev = std::pow(sobolev_norm_p(f, sn, p, DerivativeSource::Exact), 1.0 / p);
    row.ratio = row.sobolev > 0.0 ? row.holder / row.sobolev : NAN;
    rows.push_back(row);
  }
  return rows;
}

CommandResult cmd_embedding_ratio(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
  require_mode(c, {"embedding-ratio"}, "embedding-ratio");
  const auto dir = prepare(out_dir);
  std::vector<EmbeddingRow> rows;
  try {
    rows = embedding_ratios(c.t, c.s, c.p, c.k_max, c.mc.points_per_axis, c.constant_value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config key 's': ") + e.what());
  }
  std::string csv = "k,holder,sobolev,ratio\n";
  double first = NAN, worst = 0.0;
  for (const auto& r : rows) {
    csv += std::to_string(r.k) + "," + fmt(r.holder) + "," + fmt(r.sobolev) + "," + fmt(r.ratio) + "\n";
    if (r.k == 1) first = r.ratio;
    if (r.k >= 1) worst = std::max(worst, r.ratio);
  }
  const bool bounded = worst <= 10.0 * first;
  write_text(dir / "embedding_ratio.csv", csv);
  Json report = base_report(c, "embedding-ratio");
  report["result"] = {{"t", c.t}, {"s", c.s}, {"p", c.p}, {"k1_ratio", first},
                      {"max_ratio", worst}, {"bounded", bounded}};
  write_text(dir / "report.json", report.dump(2) + "\n");
  CommandResult result;
  result.files = {dir / "report.json", dir / "embedding_ratio.csv"};
  result.summary = std::string("ratios bounded: ") + (bounded ? "yes" : "no") + "\n";
  result.exit_code = bounded ? 0 : 2;
  return result;
}

CommandResult cmd_sample(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
  const auto dir = prepare(out_dir);
  std::ostringstream csv;
  if (std::holds_alternative<SphereIsotropic>(c.spec.kind)) {
    write_sphere_field_csv(csv, sample_sphere(c.spec, c.mc.master_seed));
  } else {
    const Lattice lattice = make_lattice(domain_for(c.spec), c.mc.points_per_axis);
    write_grid_field_csv(csv, sample(c.spec, lattice, c.mc.master_seed));
  }
  write_text(dir / "sample.csv", csv.str());
  CommandResult result;
  result.files = {dir / "sample.csv"};
  return result;
}

CoveringTable covering_table(std::size_t dim, std::size_t m, int min_level, int max_level) {
  if (min_level < 0 || max_level <= min_level)
    throw std::invalid_argument("covering levels need 0 <= min_level < max_level");
  CoveringTable table;
  table.dim = dim;
  table.m = m;
  const Lattice lattice = make_lattice(BoxDomain::unit(dim), m);
  std::vector<double> x, y;
  for (int k = min_level; k <= max_level; ++k) {
    const double radius = std::ldexp(1.0, -k);
    const std::size_t count = covering_number(lattice, radius);
    table.rows.push_back({k, radius, count});
    x.push_back(-std::log(radius));
    y.push_back(std::log(static_cast<double>(count)));
  }
  table.slope = linear_fit(x, y).slope;
  return table;
}

CommandResult cmd_covering(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
  require_mode(c, {"covering"}, "covering");
  const auto dir = prepare(out_dir);
  std::string csv = "n,m,level,radius,count\n";
  Json slopes = Json::array();
  CommandResult result;
  for (std::size_t n : c.covering_dims) {
    const CoveringTable t =
        covering_table(n, c.mc.points_per_axis, c.covering_min_level, c.covering_max_level);
    for (const auto& r : t.rows)
      csv += std::to_string(n) + "," + std::to_string(t.m) + "," + std::to_string(r.level) + "," +
             fmt(r.radius) + "," + std::to_string(r.count) + "\n";
    slopes.push_back({{"n", n}, {"slope", t.slope}});
    result.summary += "n=" + std::to_string(n) + " slope=" + fmt(t.slope) + "\n";
  }
  write_text(dir / "covering.csv", csv);
  Json report = base_report(c, "covering");
  report["result"] = {{"slopes", slopes}};
  write_text(dir / "report.json", report.dump(2) + "\n");
  result.files = {dir / "report.json", dir / "covering.csv"};
  return result;
}

}  // namespace kclab
