#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "integrator.hpp"
#include "mode_basis.hpp"
#include "pump.hpp"
#include "rates.hpp"

namespace photonvortex {

/// Full description of a simulation. Rates and frequencies are in units of the
/// trap frequency omega_T, lengths in units of l_HO.
struct SimConfig {
  struct Basis {
    int q_max{14};
    double l_ho{1.0};
    int mode_cap{ModeBasis::kDefaultModeCap};
    double extent{6.0};
    int resolution{64};
    bool operator==(const Basis&) const = default;
  } basis;

  struct Physics {
    double omega_t_thz{0.5};  // SI anchor, record-keeping only
    double omega0{1000.0};    // omega_0 / omega_T
    double kappa{0.26};
    double gamma_up{0.4};
    double gamma_down{0.002};
    double rho0{3.12e7};
    double frame_shift{0.0};
    bool operator==(const Physics&) const = default;
  } physics;

  struct Rates {
    double emission{1.6e-7};
    double theta{8.0};
    double zpl_detuning{49.7};
    std::vector<double> absorption_table;
    std::vector<double> emission_table;
    bool operator==(const Rates&) const = default;
  } rates;

  struct Pump {
    double radius{4.0};
    double width{0.5};
    double orbital_frequency{0.2};
    double phase0{0.0};
    PumpProfile profile{PumpProfile::Gaussian};
    bool operator==(const Pump&) const = default;
  } pump;

  struct Integrator {
    double dt{0.05};
    double t_end{100.0 * 2.0 * std::numbers::pi * 5.0};
    int snapshots_per_period{16};
    double stability_factor{1.0};
    int max_halvings{6};
    bool operator==(const Integrator&) const = default;
  } integrator;

  struct Output {
    std::string dir{"run"};
    int checkpoint_every{16};
    int dense_tail{160};
    std::vector<std::string> fields{"density"};
    int field_every{1};
    bool operator==(const Output&) const = default;
  } output;

  /// Orbital period, or the trap period for a static pump.
  double snapshot_period() const {
    const double nu = std::abs(pump.orbital_frequency);
    return 2.0 * std::numbers::pi / (nu > 0.0 ? nu : 1.0);
  }
  double snapshot_interval() const { return snapshot_period() / integrator.snapshots_per_period; }

  Schedule schedule() const { return {integrator.dt, snapshot_interval(), integrator.t_end}; }

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};


class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParsedConfig {
  SimConfig config;
  std::vector<std::string> warnings;
};

namespace detail {

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += f(v[i]);
  }
  return out;
}

struct KeyHandler {
  std::function<std::string(const SimConfig&)> get;
  std::function<void(SimConfig&, const std::string&)> set;
  const char* domain;
  bool dynamics;  // participates in the config hash
};

inline double parse_double(const std::string& v) {
  std::size_t pos = 0;
  double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return d;
}

inline int parse_int(const std::string& v) {
  std::size_t pos = 0;
  long long d = std::stoll(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return static_cast<int>(d);
}

#define PV_DOUBLE(key, field, domain, dyn)                                              \
  {key, {[](const SimConfig& c) { return format_double(c.field); },                   \
         [](SimConfig& c, const std::string& v) { c.field = parse_double(v); }, domain, dyn}}
#define PV_INT(key, field, domain, dyn)                                                 \
  {key, {[](const SimConfig& c) { return std::to_string(c.field); },                  \
         [](SimConfig& c, const std::string& v) { c.field = parse_int(v); }, domain, dyn}}
#define PV_TABLE(key, field, domain)                                                    \
  {key, {[](const SimConfig& c) {                                                      \
           return join<double>(c.field, [](const double& d) { return format_double(d); }); \
         },                                                                            \
         [](SimConfig& c, const std::string& v) {                                      \
           c.field.clear();                                                            \
           for (const auto& s : split_list(v)) c.field.push_back(parse_double(s));    \
         },                                                                            \
         domain, true}}

/// Ordered key table; the order defines the canonical serialisation.
inline const std::vector<std::pair<std::string, KeyHandler>>& key_table() {
  static const std::vector<std::pair<std::string, KeyHandler>> table = {
      PV_INT("basis.q_max", basis.q_max, "integer >= 0", true),
      PV_DOUBLE("basis.l_ho", basis.l_ho, "real > 0", true),
      PV_INT("basis.mode_cap", basis.mode_cap, "integer >= 1", true),
      PV_DOUBLE("grid.extent", basis.extent, "real > 0 (units of l_HO)", true),
      PV_INT("grid.resolution", basis.resolution, "integer >= 8", true),
      PV_DOUBLE("physics.omega_t_thz", physics.omega_t_thz, "real > 0", true),
      PV_DOUBLE("physics.omega0", physics.omega0, "real > 0 (units of omega_T)", true),
      PV_DOUBLE("physics.kappa", physics.kappa, "real >= 0", true),
      PV_DOUBLE("physics.gamma_up", physics.gamma_up, "real >= 0", true),
      PV_DOUBLE("physics.gamma_down", physics.gamma_down, "real >= 0", true),
      PV_DOUBLE("physics.rho0", physics.rho0, "real >= 0 (molecules per l_HO^2)", true),
      PV_DOUBLE("physics.frame_shift", physics.frame_shift, "real", true),
      PV_DOUBLE("rates.emission", rates.emission, "real >= 0", true),
      PV_DOUBLE("rates.theta", rates.theta, "real > 0 or inf", true),
      PV_DOUBLE("rates.zpl_detuning", rates.zpl_detuning, "real (omega_zpl - omega_0)", true),
      PV_TABLE("rates.absorption_table", rates.absorption_table, "empty or q_max+1 reals >= 0"),
      PV_TABLE("rates.emission_table", rates.emission_table, "empty or q_max+1 reals >= 0"),
      PV_DOUBLE("pump.radius", pump.radius, "real >= 0", true),
      PV_DOUBLE("pump.width", pump.width, "real > 0", true),
      PV_DOUBLE("pump.orbital_frequency", pump.orbital_frequency, "real (units of omega_T)", true),
      PV_DOUBLE("pump.phase0", pump.phase0, "real (radians)", true),
      {"pump.profile",
       {[](const SimConfig& c) { return to_string(c.pump.profile); },
        [](SimConfig& c, const std::string& v) {
          if (v == "gaussian") c.pump.profile = PumpProfile::Gaussian;
          else if (v == "tophat") c.pump.profile = PumpProfile::TopHat;
          else throw std::invalid_argument("unknown profile");
        },
        "gaussian | tophat", true}},
      PV_DOUBLE("integrator.dt", integrator.dt, "real > 0", true),
      PV_DOUBLE("integrator.t_end", integrator.t_end, "real >= 0", false),
      PV_INT("integrator.snapshots_per_period", integrator.snapshots_per_period, "integer >= 1", true),
      PV_DOUBLE("integrator.stability_factor", integrator.stability_factor, "real > 0", true),
      PV_INT("integrator.max_halvings", integrator.max_halvings, "integer >= 0", true),
      {"output.dir",
       {[](const SimConfig& c) { return c.output.dir; },
        [](SimConfig& c, const std::string& v) { c.output.dir = v; }, "path", false}},
      PV_INT("output.checkpoint_every", output.checkpoint_every, "integer >= 1 (snapshots)", false),
      PV_INT("output.dense_tail", output.dense_tail, "integer >= 0 (snapshots)", false),
      {"output.fields",
       {[](const SimConfig& c) {
          return join<std::string>(c.output.fields, [](const std::string& s) { return s; });
        },
        [](SimConfig& c, const std::string& v) { c.output.fields = split_list(v); },
        "comma list of density, molecular", false}},
      PV_INT("output.field_every", output.field_every, "integer >= 1 (snapshots)", false),
  };
  return table;
}

#undef PV_DOUBLE
#undef PV_INT
#undef PV_TABLE

inline const KeyHandler* find_key(const std::string& key) {
  for (const auto& [k, h] : key_table())
    if (k == key) return &h;
  return nullptr;
}

}  // namespace detail

/// Canonical `key = value` text, one line per key in a fixed order.
inline std::string serialize_config(const SimConfig& c) {
  std::string out;
  for (const auto& [k, h] : detail::key_table()) out += k + " = " + h.get(c) + "\n";
  return out;
}

/// FNV-1a 64-bit.
inline std::uint64_t fnv1a(const void* data, std::size_t size,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Hash of the keys that determine the trajectory (output settings and t_end excluded,
/// so a run can be extended from its checkpoints).
inline std::uint64_t config_hash(const SimConfig& c) {
  std::string text;
  for (const auto& [k, h] : detail::key_table())
    if (h.dynamics) text += k + "=" + h.get(c) + "\n";
  return fnv1a(text.data(), text.size());
}

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, h] : detail::key_table()) keys.push_back(k);
  return keys;
}

/// Documentation table: key, default, domain.
inline std::string describe_defaults() {
  const SimConfig d;
  std::string out;
  for (const auto& [k, h] : detail::key_table())
    out += k + " = " + h.get(d) + "    # " + h.domain + "\n";
  return out;
}

inline KennardStepanovParams rate_model(const SimConfig& c) {
  return {c.rates.emission, c.rates.theta, c.rates.zpl_detuning};
}

inline std::optional<RateTables> rate_tables(const SimConfig& c) {
  if (c.rates.absorption_table.empty() && c.rates.emission_table.empty()) return std::nullopt;
  return RateTables{c.rates.absorption_table, c.rates.emission_table};
}

inline Model make_model(const SimConfig& c) {
  ModeBasis basis(c.basis.q_max, c.basis.l_ho, c.physics.omega0, 1.0,
                  SpatialGrid(c.basis.extent, c.basis.resolution), c.basis.mode_cap);
  RateSpectra rates = build_rate_spectra(basis, rate_model(c), c.physics.kappa, c.physics.gamma_up,
                                         c.physics.gamma_down, rate_tables(c));
  PumpSpec pump;
  pump.radius = c.pump.radius;
  pump.width = c.pump.width;
  pump.orbital_frequency = c.pump.orbital_frequency;
  pump.phase_0 = c.pump.phase0;
  pump.peak_rate = c.physics.gamma_up;
  pump.profile = c.pump.profile;
  return Model{std::move(basis), std::move(rates), pump, c.physics.rho0, c.physics.frame_shift};
}

inline StepPolicy step_policy(const SimConfig& c) {
  StepPolicy p;
  p.max_halvings = c.integrator.max_halvings;
  return p;
}

/// Domain checks; hard violations throw ConfigError, soft ones become warnings.
inline std::vector<std::string> validate_config(const SimConfig& c) {
  std::vector<std::string> warnings;
  auto fail = [](const std::string& key, const std::string& what) {
    throw ConfigError(key + ": " + what);
  };
  auto positive = [&](const char* key, double v) {
    if (!(v > 0.0) || std::isnan(v)) fail(key, "expected real > 0, got " + detail::format_double(v));
  };
  auto non_negative = [&](const char* key, double v) {
    if (!(v >= 0.0)) fail(key, "expected real >= 0, got " + detail::format_double(v));
  };
  if (c.basis.q_max < 0) fail("basis.q_max", "expected integer >= 0");
  if (c.basis.mode_cap < 1) fail("basis.mode_cap", "expected integer >= 1");
  if (basis_size(c.basis.q_max) > c.basis.mode_cap)
    fail("basis.q_max", "basis size " + std::to_string(basis_size(c.basis.q_max)) +
                            " exceeds basis.mode_cap");
  positive("basis.l_ho", c.basis.l_ho);
  positive("grid.extent", c.basis.extent);
  if (c.basis.resolution < 8) fail("grid.resolution", "expected integer >= 8");
  positive("physics.omega_t_thz", c.physics.omega_t_thz);
  positive("physics.omega0", c.physics.omega0);
  non_negative("physics.kappa", c.physics.kappa);
  non_negative("physics.gamma_up", c.physics.gamma_up);
  non_negative("physics.gamma_down", c.physics.gamma_down);
  non_negative("physics.rho0", c.physics.rho0);
  if (!std::isfinite(c.physics.frame_shift)) fail("physics.frame_shift", "expected finite real");
  non_negative("rates.emission", c.rates.emission);
  positive("rates.theta", c.rates.theta);
  if (!std::isfinite(c.rates.zpl_detuning)) fail("rates.zpl_detuning", "expected finite real");
  for (const auto* t : {&c.rates.absorption_table, &c.rates.emission_table}) {
    const char* key = t == &c.rates.absorption_table ? "rates.absorption_table" : "rates.emission_table";
    if (!t->empty() && static_cast<int>(t->size()) != c.basis.q_max + 1)
      fail(key, "expected q_max+1 = " + std::to_string(c.basis.q_max + 1) + " entries");
    for (double v : *t)
      if (!(v >= 0.0)) fail(key, "rates must be >= 0");
  }
  non_negative("pump.radius", c.pump.radius);
  positive("pump.width", c.pump.width);
  if (!std::isfinite(c.pump.orbital_frequency)) fail("pump.orbital_frequency", "expected finite real");
  if (!std::isfinite(c.pump.phase0)) fail("pump.phase0", "expected finite real");
  positive("integrator.dt", c.integrator.dt);
  non_negative("integrator.t_end", c.integrator.t_end);
  if (c.integrator.snapshots_per_period < 1)
    fail("integrator.snapshots_per_period", "expected integer >= 1");
  positive("integrator.stability_factor", c.integrator.stability_factor);
  if (c.integrator.max_halvings < 0) fail("integrator.max_halvings", "expected integer >= 0");
  if (c.output.checkpoint_every < 1) fail("output.checkpoint_every", "expected integer >= 1");
  if (c.output.dense_tail < 0) fail("output.dense_tail", "expected integer >= 0");
  if (c.output.field_every < 1) fail("output.field_every", "expected integer >= 1");
  for (const auto& f : c.output.fields)
    if (f != "density" && f != "molecular")
      fail("output.fields", "unknown field '" + f + "' (expected density, molecular)");

  if (c.pump.radius + c.pump.width > c.basis.extent)
    fail("pump.radius", "pump orbit plus spot width exceeds the grid extent " +
                            detail::format_double(c.basis.extent));
  const int q = dominant_manifold(c.pump.radius, c.basis.l_ho);
  if (q > c.basis.q_max - 3)
    warnings.push_back("pump.radius: dominant manifold " + std::to_string(q) + " > q_max - 3 = " +
                       std::to_string(c.basis.q_max - 3) + "; basis may be too small");
  const double turning = std::sqrt(2.0 * c.basis.q_max + 1.0) * c.basis.l_ho;
  if (turning > c.basis.extent)
    warnings.push_back("grid.extent: turning radius " + detail::format_double(turning) +
                       " of the highest manifold lies outside the grid");

  // rate-based step bound
  const Model model = make_model(c);
  const double dt_max = max_stable_dt(model, c.integrator.stability_factor);
  if (c.integrator.dt > dt_max)
    fail("integrator.dt", "dt " + detail::format_double(c.integrator.dt) + " exceeds stability bound " +
                              detail::format_double(dt_max));
  return warnings;
}

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, duplicates and
/// malformed values are rejected with their line number.
inline ParsedConfig parse_config(const std::string& text, const SimConfig& base = {}) {
  ParsedConfig out{base, {}};
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto* handler = detail::find_key(key);
    if (!handler) throw ConfigError(where + ": unknown key '" + key + "'");
    if (seen.count(key))
      throw ConfigError(where + ": duplicate key '" + key + "' (first on line " +
                        std::to_string(seen[key]) + ")");
    seen[key] = lineno;
    try {
      handler->set(out.config, value);
    } catch (const std::exception&) {
      throw ConfigError(where + ": " + key + ": cannot parse '" + value + "', expected " +
                        handler->domain);
    }
  }
  out.warnings = validate_config(out.config);
  return out;
}

// ---------------------------------------------------------------------------
// Presets

enum class Tier { Fast, Paper };

inline std::string to_string(Tier t) { return t == Tier::Fast ? "fast" : "paper"; }

inline Tier tier_from_string(const std::string& s) {
  if (s == "fast") return Tier::Fast;
  if (s == "paper") return Tier::Paper;
  throw std::invalid_argument("unknown tier '" + s + "' (expected fast or paper)");
}

struct PresetInfo {
  std::string name;
  std::string description;
};

inline const std::vector<PresetInfo>& preset_list() {
  static const std::vector<PresetInfo> list = {
      {"fig1-z2", "orbiting pump, nu = omega_T/2: four-fold structure"},
      {"fig1-z3", "orbiting pump, nu = omega_T/3: three-fold structure"},
      {"fig1-z4", "orbiting pump, nu = omega_T/4: eight-fold structure"},
      {"fig1-z5", "orbiting pump, nu = omega_T/5: five-fold structure"},
      {"fig2-phase-z2", "z = 2 run with dense late-time checkpoints for G1 phase traces"},
      {"fig2-phase-z5", "z = 5 run with dense late-time checkpoints for G1 phase traces"},
      {"smfig-modes-z5", "z = 5 run recording mode populations and the molecular field"},
      {"static-pump-collapse", "static off-centre pump with strong reabsorption: collapse to the centre"},
  };
  return list;
}

inline SimConfig preset(const std::string& name, Tier tier = Tier::Fast) {
  SimConfig c;
  const bool fast = tier == Tier::Fast;
  c.basis.q_max = fast ? 10 : 14;
  c.basis.resolution = fast ? 48 : 64;
  const int periods = fast ? 30 : 120;
  auto orbiting = [&](double z) {
    c.pump.orbital_frequency = 1.0 / z;
    c.integrator.t_end = periods * 2.0 * std::numbers::pi * z;
  };
  if (name == "fig1-z2" || name == "fig2-phase-z2") orbiting(2.0);
  else if (name == "fig1-z3") orbiting(3.0);
  else if (name == "fig1-z4") orbiting(4.0);
  else if (name == "fig1-z5" || name == "fig2-phase-z5" || name == "smfig-modes-z5") orbiting(5.0);
  else if (name == "static-pump-collapse") {
    c.pump.orbital_frequency = 0.0;
    c.pump.radius = 3.0;
    // Absorption close to emission across the low manifolds: repeated reabsorption
    // hands the light down to the ground mode, whose centroid is the trap centre.
    c.rates.theta = 10.0;
    c.rates.zpl_detuning = 10.0;
    c.integrator.t_end = 600.0;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  if (name.rfind("fig2-phase", 0) == 0) c.output.dense_tail = 10 * c.integrator.snapshots_per_period;
  if (name == "smfig-modes-z5") c.output.fields = {"density", "molecular"};
  c.output.dir = name;
  return c;
}

}  // namespace photonvortex
