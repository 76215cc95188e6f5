#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cavityband/error.hpp"
#include "cavityband/floquet/model.hpp"
#include "cavityband/io/config.hpp"
#include "cavityband/scattering/scatter.hpp"
#include "cavityband/wavepacket/coupling.hpp"
#include "cavityband/wavepacket/extraction.hpp"
#include "cavityband/wavepacket/grid.hpp"
#include "cavityband/wavepacket/propagator.hpp"
#include "cavityband/wavepacket/state.hpp"

namespace cavityband::cli {

using io::ConfigTree;
using io::Value;

enum class ValueType { Bool, Int, Real, String, RealList, StringList };

struct KeySpec {
  std::string section;
  std::string key;
  ValueType type;
  std::optional<Value> fallback;          ///< empty: key is optional and has no default
  std::vector<std::string> choices = {};  ///< allowed strings, if restricted
};

inline const std::vector<KeySpec>& schema() {
  using V = ValueType;
  using S = std::vector<std::string>;
  static const std::vector<KeySpec> keys = {
      {"model", "g0", V::Real, 0.01},
      {"model", "delta", V::Real, 0.0},
      {"model", "q", V::Real, 1.0},
      {"model", "n_photons", V::Int, std::int64_t{1}},
      {"truncation", "n_states", V::Int, std::int64_t{201}},
      {"grid", "n_points", V::Int, std::int64_t{4096}},
      {"grid", "x_min", V::Real, -2048.0},
      {"grid", "x_max", V::Real, 2048.0},
      {"state", "kind", V::String, std::string("dressed"), S{"bare", "dressed"}},
      {"state", "k0", V::Real, 0.25},
      {"state", "delta_k", V::Real, std::nullopt},
      {"state", "delta_x2", V::Real, std::nullopt},
      {"state", "x0", V::Real, 0.0},
      {"state", "component", V::String, std::string("minus"), S{"plus", "minus"}},
      {"state", "band", V::Int, std::int64_t{1}},
      {"evolve", "dt", V::Real, 0.05},
      {"evolve", "steps", V::Int, std::int64_t{1000}},
      {"evolve", "stride", V::Int, std::int64_t{20}},
      {"evolve", "splitting", V::String, std::string("strang"), S{"strang", "lie"}},
      {"evolve", "momentum_stride", V::Int, std::int64_t{0}},
      {"evolve", "norm_tolerance", V::Real, 1e-8},
      {"evolve", "density_bins", V::Int, std::int64_t{128}},
      {"cavity", "kind", V::String, std::string("uniform"), S{"uniform", "enveloped"}},
      {"cavity", "x_l", V::Real, 1500.0},
      {"cavity", "x_e", V::Real, 50.0},
      {"ramp", "shape", V::String, std::string("none"), S{"none", "sin2", "linear"}},
      {"ramp", "T_ramp", V::Real, 0.0},
      {"measure", "conditional", V::String, std::string("minus"), S{"plus", "minus"}},
      {"measure", "exclusion", V::String, std::string("none"), S{"none", "cut", "peak"}},
      {"measure", "width", V::Real, 150.0},
      {"extract", "velocity", V::Bool, false},
      {"extract", "m2", V::Bool, false},
      {"extract", "fit_teff", V::Bool, false},
      {"extract", "rabi", V::Bool, false},
      {"extract", "t_start", V::Real, std::nullopt},
      {"extract", "t_end", V::Real, std::nullopt},
      {"extract", "source", V::String, std::string("total"), S{"total", "lower"}},
      {"extract", "method", V::String, std::string("least_squares"),
       S{"least_squares", "two_point"}},
      {"bands", "k_min", V::Real, -1.0},
      {"bands", "k_max", V::Real, 1.0},
      {"bands", "k_points", V::Int, std::int64_t{401}},
      {"bands", "num_bands", V::Int, std::int64_t{4}},
      {"bands", "bare_mu", V::Int, std::int64_t{3}},
      {"bands", "coefficient_k", V::RealList, std::vector<double>{}},
      {"masses", "k0", V::Real, 0.25},
      {"masses", "band", V::Int, std::int64_t{1}},
      {"masses", "fd_step", V::Real, 1e-3},
      {"masses", "map", V::Bool, false},
      {"map", "g0_min", V::Real, 0.0},
      {"map", "g0_max", V::Real, 0.5},
      {"map", "g0_points", V::Int, std::int64_t{26}},
      {"map", "delta_min", V::Real, -1.0},
      {"map", "delta_max", V::Real, 1.0},
      {"map", "delta_points", V::Int, std::int64_t{41}},
      {"map", "k", V::Real, 0.0},
      {"map", "n_small", V::Int, std::int64_t{5}},
      {"map", "band", V::Int, std::int64_t{1}},
      {"map", "mu", V::Int, std::int64_t{0}},
      {"scatter", "t_max", V::Real, 12000.0},
      {"scatter", "residual_tolerance", V::Real, 1e-3},
      {"scatter", "region_margin", V::Real, std::nullopt},
      {"scatter", "transparency", V::Bool, false},
      {"scatter", "hole", V::Bool, false},
      {"scatter", "hole_source", V::String, std::string("transmitted"), S{"transmitted", "final"}},
      {"scatter", "hole_threshold", V::Real, 0.1},
      {"scatter", "sectors", V::String, std::string("none"), S{"none", "atom", "photon"}},
      {"scatter", "sector_a", V::Real, 1.0},
      {"scatter", "sector_b", V::Real, 0.0},
      {"output", "dir", V::String, std::string("out")},
      {"output", "formats", V::StringList, std::vector<std::string>{"csv", "json", "svg"},
       S{"csv", "json", "svg"}},
      {"sweep", "command", V::String, std::string("propagate"),
       S{"bands", "masses", "error-map", "fidelity-map", "propagate", "scatter"}},
      {"sweep", "workers", V::Int, std::int64_t{1}},
  };
  return keys;
}

/// Sweep axes live in the sweep section as "vary.<section>.<key>" = [values].
inline constexpr std::string_view kVaryPrefix = "vary.";

inline const KeySpec* find_key(const std::string& section, const std::string& key) {
  for (const auto& k : schema())
    if (k.section == section && k.key == key) return &k;
  return nullptr;
}

inline std::string type_name(ValueType t) {
  switch (t) {
    case ValueType::Bool: return "boolean";
    case ValueType::Int: return "integer";
    case ValueType::Real: return "number";
    case ValueType::String: return "string";
    case ValueType::RealList: return "list of numbers";
    case ValueType::StringList: return "list of strings";
  }
  return "value";
}

/// Coerces v to the declared type (integers widen to reals, a scalar string
/// becomes a one-element list) or throws ConfigError.
inline Value coerce(const KeySpec& spec, const Value& v) {
  const std::string where = spec.section + "." + spec.key;
  auto bad = [&]() -> Value {
    throw Error(Errc::ConfigError, where + " must be a " + type_name(spec.type));
  };
  Value out;
  switch (spec.type) {
    case ValueType::Bool:
      if (!std::holds_alternative<bool>(v)) return bad();
      out = v;
      break;
    case ValueType::Int:
      if (!std::holds_alternative<std::int64_t>(v)) return bad();
      out = v;
      break;
    case ValueType::Real:
      if (auto* i = std::get_if<std::int64_t>(&v))
        out = static_cast<double>(*i);
      else if (std::holds_alternative<double>(v))
        out = v;
      else
        return bad();
      break;
    case ValueType::String:
      if (!std::holds_alternative<std::string>(v)) return bad();
      out = v;
      break;
    case ValueType::RealList:
      if (!std::holds_alternative<std::vector<double>>(v)) return bad();
      out = v;
      break;
    case ValueType::StringList:
      if (auto* s = std::get_if<std::string>(&v))
        out = std::vector<std::string>{*s};
      else if (std::holds_alternative<std::vector<std::string>>(v))
        out = v;
      else if (auto* d = std::get_if<std::vector<double>>(&v); d && d->empty())
        out = std::vector<std::string>{};
      else
        return bad();
      break;
  }
  if (!spec.choices.empty()) {
    std::vector<std::string> given;
    if (auto* s = std::get_if<std::string>(&out)) given.push_back(*s);
    if (auto* l = std::get_if<std::vector<std::string>>(&out)) given = *l;
    for (const auto& g : given)
      if (std::find(spec.choices.begin(), spec.choices.end(), g) == spec.choices.end()) {
        std::string allowed;
        for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + c;
        throw Error(Errc::ConfigError, where + ": '" + g + "' is not one of " + allowed);
      }
  }
  return out;
}

/// Checks every key against the schema and fills in defaults. The result is
/// the full resolved tree that summaries echo.
inline ConfigTree resolve_tree(const ConfigTree& in) {
  ConfigTree out;
  for (const auto& [section, keys] : in) {
    for (const auto& [key, v] : keys) {
      if (section == "sweep" && key.rfind(kVaryPrefix, 0) == 0) {
        const std::string target = key.substr(kVaryPrefix.size());
        const auto dot = target.find('.');
        const KeySpec* spec =
            dot == std::string::npos ? nullptr : find_key(target.substr(0, dot), target.substr(dot + 1));
        if (!spec || spec->section == "sweep" || spec->section == "output")
          throw Error(Errc::ConfigError, "sweep." + key + " does not name a sweepable key");
        const bool list = std::holds_alternative<std::vector<double>>(v) ||
                          std::holds_alternative<std::vector<std::string>>(v);
        if (!list) throw Error(Errc::ConfigError, "sweep." + key + " must be a list");
        out[section][key] = v;
        continue;
      }
      const KeySpec* spec = find_key(section, key);
      if (!spec) throw Error(Errc::ConfigError, "unknown key '" + section + "." + key + "'");
      out[section][key] = coerce(*spec, v);
    }
  }
  for (const auto& spec : schema())
    if (spec.fallback && !out[spec.section].count(spec.key)) out[spec.section][spec.key] = *spec.fallback;
  return out;
}

class TreeReader {
 public:
  explicit TreeReader(const ConfigTree& t) : t_(t) {}

  bool has(const std::string& s, const std::string& k) const {
    auto it = t_.find(s);
    return it != t_.end() && it->second.count(k);
  }
  const Value& at(const std::string& s, const std::string& k) const { return t_.at(s).at(k); }
  double real(const std::string& s, const std::string& k) const { return std::get<double>(at(s, k)); }
  std::int64_t integer(const std::string& s, const std::string& k) const {
    return std::get<std::int64_t>(at(s, k));
  }
  bool flag(const std::string& s, const std::string& k) const { return std::get<bool>(at(s, k)); }
  const std::string& str(const std::string& s, const std::string& k) const {
    return std::get<std::string>(at(s, k));
  }
  std::optional<double> opt_real(const std::string& s, const std::string& k) const {
    if (!has(s, k)) return std::nullopt;
    return real(s, k);
  }

 private:
  const ConfigTree& t_;
};

struct StateSpec {
  bool dressed = true;
  double k0 = 0.25;
  double delta_k = 0.01;
  double x0 = 0.0;
  wavepacket::Component component = wavepacket::Component::Minus;
  int band = 1;
};

struct ExtractSpec {
  bool velocity = false;
  bool m2 = false;
  bool fit_teff = false;
  bool rabi = false;
  wavepacket::TimeWindow window;
  wavepacket::PositionSource source = wavepacket::PositionSource::Total;
  wavepacket::VelocityMethod method = wavepacket::VelocityMethod::LeastSquares;
};

struct BandsSpec {
  double k_min = -1.0, k_max = 1.0;
  int k_points = 401;
  int num_bands = 4;
  int bare_mu = 3;
  std::vector<double> coefficient_k;
};

struct MassesSpec {
  double k0 = 0.25;
  int band = 1;
  double fd_step = 1e-3;
  bool map = false;
};

struct MapSpec {
  double g0_min = 0.0, g0_max = 0.5;
  int g0_points = 26;
  double delta_min = -1.0, delta_max = 1.0;
  int delta_points = 41;
  double k = 0.0;
  int n_small = 5;
  int band = 1;
  int mu = 0;

  std::vector<double> g0_values() const { return axis(g0_min, g0_max, g0_points); }
  std::vector<double> delta_values() const { return axis(delta_min, delta_max, delta_points); }

  static std::vector<double> axis(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return v;
  }
};

struct ScatterSpec {
  double t_max = 12000.0;
  double residual_tolerance = 1e-3;
  std::optional<double> region_margin;
  bool transparency = false;
  bool hole = false;
  scattering::HoleSource hole_source = scattering::HoleSource::Transmitted;
  double hole_threshold = 0.1;
  std::optional<scattering::SternGerlachMode> sectors;
  double sector_a = 1.0, sector_b = 0.0;
};

struct OutputSpec {
  std::string dir = "out";
  bool csv = true, json = true, svg = true;
};

struct SweepAxis {
  std::string section, key;
  std::vector<Value> values;
  std::string name() const { return section + "." + key; }
};

struct SweepSpec {
  std::string command = "propagate";
  int workers = 1;
  std::vector<SweepAxis> axes;
};

/// Typed view of a resolved configuration. Construction validates every
/// module invariant the commands rely on, so numeric failures later are
/// genuine numeric failures.
struct RunConfig {
  ConfigTree tree;
  floquet::ModelParams model;
  floquet::TruncationSpec truncation;
  wavepacket::SpatialGrid grid;
  StateSpec state;
  wavepacket::EvolveOptions evolve;
  std::size_t density_bins = 128;
  wavepacket::CouplingProfile profile;
  ExtractSpec extract;
  BandsSpec bands;
  MassesSpec masses;
  MapSpec map;
  ScatterSpec scatter;
  OutputSpec output;
  SweepSpec sweep;
};

namespace detail {

inline int checked_int(std::int64_t v, std::int64_t lo, const std::string& where) {
  if (v < lo || v > 1'000'000'000)
    throw Error(Errc::ConfigError, where + " out of range (" + std::to_string(v) + ")");
  return static_cast<int>(v);
}

}  // namespace detail

inline RunConfig make_run_config(const ConfigTree& input) {
  RunConfig c;
  c.tree = resolve_tree(input);
  const TreeReader r(c.tree);
  using detail::checked_int;
  try {
    c.model.g0 = r.real("model", "g0");
    c.model.delta = r.real("model", "delta");
    c.model.q = r.real("model", "q");
    c.model.n_photons = checked_int(r.integer("model", "n_photons"), 1, "model.n_photons");
    c.model.validate();
    c.truncation.n_states = checked_int(r.integer("truncation", "n_states"), 1, "truncation.n_states");
    c.truncation.validate();

    c.grid = wavepacket::make_grid(
        static_cast<std::size_t>(checked_int(r.integer("grid", "n_points"), 2, "grid.n_points")),
        r.real("grid", "x_min"), r.real("grid", "x_max"));

    auto& s = c.state;
    s.dressed = r.str("state", "kind") == "dressed";
    s.k0 = r.real("state", "k0");
    s.x0 = r.real("state", "x0");
    s.component = r.str("state", "component") == "plus" ? wavepacket::Component::Plus
                                                         : wavepacket::Component::Minus;
    s.band = checked_int(r.integer("state", "band"), 1, "state.band");
    const auto dk = r.opt_real("state", "delta_k");
    const auto dx2 = r.opt_real("state", "delta_x2");
    if (dk && dx2) throw Error(Errc::ConfigError, "give state.delta_k or state.delta_x2, not both");
    if (dx2) {
      if (!(*dx2 > 0.0)) throw Error(Errc::ConfigError, "state.delta_x2 must be positive");
      s.delta_k = 0.5 / std::sqrt(*dx2);  // minimum uncertainty
    } else if (dk) {
      s.delta_k = *dk;
    } else {
      s.delta_k = 0.01;
    }
    if (!(s.delta_k > 0.0) || !std::isfinite(s.delta_k))
      throw Error(Errc::ConfigError, "state.delta_k must be positive");
    if (!std::isfinite(s.k0) || !std::isfinite(s.x0))
      throw Error(Errc::ConfigError, "state.k0 and state.x0 must be finite");
    if (s.dressed && s.band > c.truncation.n_states)
      throw Error(Errc::ConfigError, "state.band exceeds truncation.n_states");

    auto& e = c.evolve;
    e.dt = r.real("evolve", "dt");
    if (!(e.dt > 0.0)) throw Error(Errc::ConfigError, "evolve.dt must be positive");
    e.n_steps = static_cast<std::size_t>(checked_int(r.integer("evolve", "steps"), 0, "evolve.steps"));
    e.sample_stride =
        static_cast<std::size_t>(checked_int(r.integer("evolve", "stride"), 1, "evolve.stride"));
    e.splitting = r.str("evolve", "splitting") == "lie" ? wavepacket::Splitting::Lie
                                                        : wavepacket::Splitting::Strang;
    e.momentum_stride = static_cast<std::size_t>(
        checked_int(r.integer("evolve", "momentum_stride"), 0, "evolve.momentum_stride"));
    e.norm_tolerance = r.real("evolve", "norm_tolerance");
    if (!(e.norm_tolerance > 0.0)) throw Error(Errc::ConfigError, "evolve.norm_tolerance must be positive");
    c.density_bins = static_cast<std::size_t>(
        checked_int(r.integer("evolve", "density_bins"), 0, "evolve.density_bins"));

    c.profile = r.str("cavity", "kind") == "enveloped"
                    ? wavepacket::CouplingProfile::enveloped(r.real("cavity", "x_l"), r.real("cavity", "x_e"))
                    : wavepacket::CouplingProfile::uniform();
    const std::string& shape = r.str("ramp", "shape");
    if (shape != "none") {
      const double t_ramp = r.real("ramp", "T_ramp");
      if (!(t_ramp >= 0.0)) throw Error(Errc::ConfigError, "ramp.T_ramp must be >= 0");
      c.profile.ramp = wavepacket::Ramp{
          shape == "linear" ? wavepacket::RampShape::Linear : wavepacket::RampShape::SinSquared, t_ramp};
    }
    c.profile.validate();

    auto& m = e.measure;
    m.conditional = r.str("measure", "conditional") == "plus" ? wavepacket::Component::Plus
                                                              : wavepacket::Component::Minus;
    const std::string& excl = r.str("measure", "exclusion");
    m.exclusion.kind = excl == "cut"    ? wavepacket::WindowKind::OutsideCut
                       : excl == "peak" ? wavepacket::WindowKind::PeakWindow
                                        : wavepacket::WindowKind::None;
    m.exclusion.width = r.real("measure", "width");
    if (m.exclusion.kind != wavepacket::WindowKind::None && !(m.exclusion.width > 0.0))
      throw Error(Errc::ConfigError, "measure.width must be positive");

    auto& x = c.extract;
    x.velocity = r.flag("extract", "velocity");
    x.m2 = r.flag("extract", "m2");
    x.fit_teff = r.flag("extract", "fit_teff");
    x.rabi = r.flag("extract", "rabi");
    if (auto v = r.opt_real("extract", "t_start")) x.window.t_start = *v;
    if (auto v = r.opt_real("extract", "t_end")) x.window.t_end = *v;
    if (!(x.window.t_start < x.window.t_end))
      throw Error(Errc::ConfigError, "extract.t_start must be below extract.t_end");
    x.source = r.str("extract", "source") == "lower" ? wavepacket::PositionSource::Lower
                                                     : wavepacket::PositionSource::Total;
    x.method = r.str("extract", "method") == "two_point" ? wavepacket::VelocityMethod::TwoPoint
                                                         : wavepacket::VelocityMethod::LeastSquares;

    auto& b = c.bands;
    b.k_min = r.real("bands", "k_min");
    b.k_max = r.real("bands", "k_max");
    b.k_points = checked_int(r.integer("bands", "k_points"), 1, "bands.k_points");
    b.num_bands = checked_int(r.integer("bands", "num_bands"), 1, "bands.num_bands");
    b.bare_mu = checked_int(r.integer("bands", "bare_mu"), 0, "bands.bare_mu");
    b.coefficient_k = std::get<std::vector<double>>(r.at("bands", "coefficient_k"));
    if (b.num_bands > c.truncation.n_states)
      throw Error(Errc::ConfigError, "bands.num_bands exceeds truncation.n_states");
    if (!(b.k_min <= b.k_max)) throw Error(Errc::ConfigError, "bands.k_min must not exceed bands.k_max");

    auto& ms = c.masses;
    ms.k0 = r.real("masses", "k0");
    ms.band = checked_int(r.integer("masses", "band"), 1, "masses.band");
    ms.fd_step = r.real("masses", "fd_step");
    ms.map = r.flag("masses", "map");
    if (ms.band > c.truncation.n_states) throw Error(Errc::ConfigError, "masses.band exceeds truncation.n_states");
    if (!(ms.fd_step > 0.0)) throw Error(Errc::ConfigError, "masses.fd_step must be positive");

    auto& mp = c.map;
    mp.g0_min = r.real("map", "g0_min");
    mp.g0_max = r.real("map", "g0_max");
    mp.g0_points = checked_int(r.integer("map", "g0_points"), 1, "map.g0_points");
    mp.delta_min = r.real("map", "delta_min");
    mp.delta_max = r.real("map", "delta_max");
    mp.delta_points = checked_int(r.integer("map", "delta_points"), 1, "map.delta_points");
    mp.k = r.real("map", "k");
    mp.n_small = checked_int(r.integer("map", "n_small"), 1, "map.n_small");
    mp.band = checked_int(r.integer("map", "band"), 1, "map.band");
    mp.mu = static_cast<int>(r.integer("map", "mu"));
    if (!(mp.g0_min >= 0.0) || !(mp.g0_min <= mp.g0_max) || !(mp.delta_min <= mp.delta_max))
      throw Error(Errc::ConfigError, "map ranges must be ordered with g0_min >= 0");
    floquet::TruncationSpec{mp.n_small}.validate();
    if (!c.truncation.contains(mp.mu)) throw Error(Errc::ConfigError, "map.mu outside the truncation window");
    if (mp.band > c.truncation.n_states) throw Error(Errc::ConfigError, "map.band exceeds truncation.n_states");

    auto& sc = c.scatter;
    sc.t_max = r.real("scatter", "t_max");
    sc.residual_tolerance = r.real("scatter", "residual_tolerance");
    sc.region_margin = r.opt_real("scatter", "region_margin");
    sc.transparency = r.flag("scatter", "transparency");
    sc.hole = r.flag("scatter", "hole");
    sc.hole_source = r.str("scatter", "hole_source") == "final" ? scattering::HoleSource::Final
                                                                 : scattering::HoleSource::Transmitted;
    sc.hole_threshold = r.real("scatter", "hole_threshold");
    const std::string& sectors = r.str("scatter", "sectors");
    if (sectors == "atom") sc.sectors = scattering::SternGerlachMode::Atom;
    if (sectors == "photon") sc.sectors = scattering::SternGerlachMode::Photon;
    sc.sector_a = r.real("scatter", "sector_a");
    sc.sector_b = r.real("scatter", "sector_b");
    if (sc.sectors && std::abs(sc.sector_a * sc.sector_a + sc.sector_b * sc.sector_b - 1.0) > 1e-9)
      throw Error(Errc::ConfigError, "scatter.sector_a^2 + scatter.sector_b^2 must equal 1");

    c.output.dir = r.str("output", "dir");
    const auto& formats = std::get<std::vector<std::string>>(r.at("output", "formats"));
    auto wants = [&](const char* f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };
    c.output.csv = wants("csv");
    c.output.json = wants("json");
    c.output.svg = wants("svg");

    c.sweep.command = r.str("sweep", "command");
    c.sweep.workers = checked_int(r.integer("sweep", "workers"), 1, "sweep.workers");
    for (const auto& [key, v] : c.tree.at("sweep")) {
      if (key.rfind(kVaryPrefix, 0) != 0) continue;
      const std::string target = key.substr(kVaryPrefix.size());
      const auto dot = target.find('.');
      SweepAxis axis{target.substr(0, dot), target.substr(dot + 1), {}};
      const KeySpec& spec = *find_key(axis.section, axis.key);
      if (auto* d = std::get_if<std::vector<double>>(&v)) {
        for (double x : *d) {
          Value one = x;
          if (spec.type == ValueType::Int) {
            if (x != std::floor(x)) throw Error(Errc::ConfigError, "sweep." + key + " needs integers");
            one = static_cast<std::int64_t>(x);
          }
          axis.values.push_back(coerce(spec, one));
        }
      } else {
        for (const auto& x : std::get<std::vector<std::string>>(v)) axis.values.push_back(coerce(spec, x));
      }
      if (axis.values.empty()) throw Error(Errc::ConfigError, "sweep." + key + " is empty");
      c.sweep.axes.push_back(std::move(axis));
    }
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigError) throw;
    throw Error(Errc::ConfigError, e.what());
  }
  return c;
}

}  // namespace cavityband::cli
