#pragma once

// Line-oriented run configuration:
//
//   # comment
//   section.key = value [unit]
//
// Dimensioned values must carry a unit; dimensionless ones must not.
// Unknown or repeated keys are errors. Numbers may be written as p/q.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ffalign/signal.hpp"
#include "ffalign/units.hpp"

namespace ffalign {

enum class Artifact { trace, signal, peaks, superposition };

inline std::string_view to_string(Artifact a) {
  switch (a) {
    case Artifact::trace: return "trace";
    case Artifact::signal: return "signal";
    case Artifact::peaks: return "peaks";
    default: return "superposition";
  }
}

struct FitSettings {
  double threshold = 0.1;  // largest accepted normalized RMS residual
  TimeWindow window;

  friend bool operator==(const FitSettings& a, const FitSettings& b) {
    return a.threshold == b.threshold && a.window.start_ps == b.window.start_ps &&
           a.window.end_ps == b.window.end_ps;
  }
};

struct RunConfig {
  std::string molecule_preset;  // empty: molecule given key by key
  MoleculeSpec molecule;
  PulseSpec pulse;
  double probe_fwhm_fs = 100.0;
  TemperatureSpec temperature;
  double population_cutoff = 1e-6;
  GridSpec grid;
  std::vector<Artifact> outputs{Artifact::trace, Artifact::signal, Artifact::peaks};
  std::optional<double> pressure_pa;  // recorded only; the model has no pressure dependence
  FitSettings fit;

  bool wants(Artifact a) const { return std::find(outputs.begin(), outputs.end(), a) != outputs.end(); }

  void validate() const {
    molecule.validate();
    pulse.validate();
    temperature.validate();
    grid.validate();
    if (!(probe_fwhm_fs > 0.0)) throw ConfigError("probe.fwhm must be > 0");
    if (!(population_cutoff > 0.0 && population_cutoff <= 1e-4)) {
      throw ConfigError("ensemble.population_cutoff must lie in (0, 1e-4]");
    }
    if (!(fit.threshold > 0.0)) throw ConfigError("fit.threshold must be > 0");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct ParsedConfig {
  RunConfig config;
  std::vector<std::string> defaults_applied;  // "key = value" for every omitted key
};

namespace config_detail {

enum class Quantity { time, intensity, wavenumber, polarizability, temperature, length, pressure, number, text };

struct KeyInfo {
  std::string_view key;
  Quantity quantity;
};

inline constexpr KeyInfo known_keys[] = {
    {"molecule.preset", Quantity::text},
    {"molecule.name", Quantity::text},
    {"molecule.B", Quantity::wavenumber},
    {"molecule.delta_alpha", Quantity::polarizability},
    {"molecule.spin_weight_even", Quantity::number},
    {"molecule.spin_weight_odd", Quantity::number},
    {"pulse.intensity", Quantity::intensity},
    {"pulse.fwhm", Quantity::time},
    {"pulse.a2", Quantity::number},
    {"pulse.envelope", Quantity::text},
    {"pulse.center", Quantity::time},
    {"pulse.wavelength", Quantity::length},
    {"probe.fwhm", Quantity::time},
    {"ensemble.temperature", Quantity::temperature},
    {"ensemble.population_cutoff", Quantity::number},
    {"grid.t_start", Quantity::time},
    {"grid.t_end", Quantity::time},
    {"grid.dt", Quantity::time},
    {"grid.j_max", Quantity::text},
    {"output.artifacts", Quantity::text},
    {"experiment.pressure", Quantity::pressure},
    {"fit.threshold", Quantity::number},
    {"fit.window_start", Quantity::time},
    {"fit.window_end", Quantity::time},
};

inline const KeyInfo* lookup(std::string_view key) {
  for (const auto& k : known_keys) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

struct Entry {
  int line = 0;
  std::string value;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] inline void fail(int line, std::string_view key, const std::string& what) {
  std::ostringstream msg;
  if (line > 0) msg << "line " << line << ": ";
  msg << key << ": " << what;
  throw ConfigError(msg.str());
}

inline std::optional<double> parse_number(const std::string& s) {
  auto full = [](const std::string& t) -> std::optional<double> {
    if (t.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) return std::nullopt;
    return v;
  };
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    const auto p = full(s.substr(0, slash));
    const auto q = full(s.substr(slash + 1));
    if (!p || !q || *q == 0.0) return std::nullopt;
    return *p / *q;
  }
  return full(s);
}

/// Size of `unit` relative to the reference unit of its quantity.
inline std::optional<double> unit_factor(Quantity q, std::string_view unit) {
  switch (q) {
    case Quantity::time:
      if (unit == "ps") return 1.0;
      if (unit == "fs") return 1e-3;
      if (unit == "ns") return 1e3;
      return std::nullopt;
    case Quantity::intensity:
      if (unit == "W/cm2") return 1.0;
      if (unit == "GW/cm2") return 1e9;
      if (unit == "TW/cm2") return 1e12;
      return std::nullopt;
    case Quantity::wavenumber:
      if (unit == "cm-1" || unit == "1/cm") return 1.0;
      return std::nullopt;
    case Quantity::temperature:
      if (unit == "K") return 1.0;
      return std::nullopt;
    case Quantity::length:
      if (unit == "nm") return 1.0;
      if (unit == "um") return 1e3;
      return std::nullopt;
    case Quantity::pressure:
      if (unit == "Pa") return 1.0;
      if (unit == "kPa") return 1e3;
      if (unit == "mbar") return 1e2;
      if (unit == "bar") return 1e5;
      if (unit == "Torr") return 101325.0 / 760.0;
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

inline std::string_view unit_hint(Quantity q) {
  switch (q) {
    case Quantity::time: return "fs, ps or ns";
    case Quantity::intensity: return "W/cm2, GW/cm2 or TW/cm2";
    case Quantity::wavenumber: return "cm-1";
    case Quantity::polarizability: return "A3 or au";
    case Quantity::temperature: return "K";
    case Quantity::length: return "nm or um";
    case Quantity::pressure: return "Pa, kPa, mbar, bar or Torr";
    default: return "";
  }
}

struct Quantified {
  double raw = 0.0;
  std::string unit;  // as written
  Quantity quantity = Quantity::number;

  /// Value in `target`; untouched when written in that unit already, so the
  /// serialized form reparses bit-identically.
  double in(std::string_view target) const {
    if (quantity == Quantity::number || quantity == Quantity::polarizability || unit == target) return raw;
    return raw * (*unit_factor(quantity, unit) / *unit_factor(quantity, target));
  }
};

inline Quantified read_quantity(const KeyInfo& info, const Entry& e) {
  std::istringstream in(e.value);
  std::string num, unit, extra;
  in >> num >> unit >> extra;
  if (!extra.empty()) fail(e.line, info.key, "unexpected trailing text '" + extra + "'");
  const auto v = parse_number(num);
  if (!v || !std::isfinite(*v)) fail(e.line, info.key, "'" + num + "' is not a finite number");
  if (info.quantity == Quantity::number) {
    if (!unit.empty()) fail(e.line, info.key, "dimensionless value takes no unit (got '" + unit + "')");
    return {*v, {}, info.quantity};
  }
  if (unit.empty()) {
    fail(e.line, info.key, "unit required (" + std::string(unit_hint(info.quantity)) + ")");
  }
  if (info.quantity == Quantity::polarizability) {
    try {
      (void)parse_polarizability_unit(unit);
    } catch (const ConfigError& err) {
      fail(e.line, info.key, err.what());
    }
    return {*v, unit, info.quantity};
  }
  const auto f = unit_factor(info.quantity, unit);
  if (!f) {
    fail(e.line, info.key,
         "unit '" + unit + "' does not match the expected " + std::string(unit_hint(info.quantity)));
  }
  return {*v, unit, info.quantity};
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Short form for log messages.
inline std::string format_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace config_detail

inline MoleculeSpec molecule_preset(std::string_view name) {
  if (name == "co2") return co2_preset();
  throw ConfigError("unknown molecule preset '" + std::string(name) + "' (known: co2)");
}

inline ParsedConfig parse_config(std::string_view text) {
  using namespace config_detail;
  std::map<std::string, Entry> entries;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, line, "expected 'section.key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!lookup(key)) fail(line_no, key, "unknown key");
    if (value.empty()) fail(line_no, key, "missing value");
    if (auto it = entries.find(key); it != entries.end()) {
      fail(line_no, key, "repeated (first set on line " + std::to_string(it->second.line) + ")");
    }
    entries[key] = {line_no, value};
  }

  ParsedConfig out;
  RunConfig& cfg = out.config;
  auto note_default = [&](std::string_view key, const std::string& value) {
    out.defaults_applied.push_back(std::string(key) + " = " + value);
  };
  auto find = [&](std::string_view key) -> const Entry* {
    auto it = entries.find(std::string(key));
    return it == entries.end() ? nullptr : &it->second;
  };
  auto quantity = [&](std::string_view key) -> std::optional<std::pair<Quantified, int>> {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    return std::make_pair(read_quantity(*lookup(key), *e), e->line);
  };
  auto require = [&](std::string_view key) {
    if (!find(key)) fail(0, key, "missing required key");
  };

  // Molecule: preset first, explicit keys override it.
  if (const Entry* e = find("molecule.preset")) {
    try {
      cfg.molecule = molecule_preset(e->value);
    } catch (const ConfigError& err) {
      fail(e->line, "molecule.preset", err.what());
    }
    cfg.molecule_preset = e->value;
  } else {
    require("molecule.B");
    require("molecule.delta_alpha");
    cfg.molecule = MoleculeSpec{};
    cfg.molecule.name = "custom";
    cfg.molecule.spin_weight_even_j = 1.0;
    cfg.molecule.spin_weight_odd_j = 1.0;
  }
  const bool preset = !cfg.molecule_preset.empty();
  if (const Entry* e = find("molecule.name")) {
    cfg.molecule.name = e->value;
  } else if (!preset) {
    note_default("molecule.name", cfg.molecule.name);
  }
  if (auto q = quantity("molecule.B")) cfg.molecule.rotational_constant_cm = q->first.in("cm-1");
  if (auto q = quantity("molecule.delta_alpha")) {
    cfg.molecule.polarizability_anisotropy = q->first.raw;
    cfg.molecule.polarizability_unit = parse_polarizability_unit(q->first.unit);
  }
  if (auto q = quantity("molecule.spin_weight_even")) {
    cfg.molecule.spin_weight_even_j = q->first.raw;
  } else if (!preset) {
    note_default("molecule.spin_weight_even", "1");
  }
  if (auto q = quantity("molecule.spin_weight_odd")) {
    cfg.molecule.spin_weight_odd_j = q->first.raw;
  } else if (!preset) {
    note_default("molecule.spin_weight_odd", "1");
  }
  try {
    cfg.molecule.validate();
  } catch (const ConfigError& err) {
    fail(0, "molecule", err.what());
  }

  // Pulse.
  require("pulse.intensity");
  require("pulse.a2");
  {
    const auto q = *quantity("pulse.intensity");
    if (q.first.in("W/cm2") < 0.0) fail(q.second, "pulse.intensity", "must be >= 0");
    cfg.pulse.peak_intensity_w_cm2 = q.first.in("W/cm2");
  }
  {
    const auto q = *quantity("pulse.a2");
    if (!(q.first.raw >= 0.0 && q.first.raw <= 0.5)) {
      fail(q.second, "pulse.a2",
           "value " + format_short(q.first.raw) +
               " outside [0, 1/2]; a2 > 1/2 is the same ellipse with x and y swapped");
    }
    cfg.pulse.ellipticity_a2 = q.first.raw;
  }
  if (auto q = quantity("pulse.fwhm")) {
    if (!(q->first.raw > 0.0)) fail(q->second, "pulse.fwhm", "must be > 0");
    cfg.pulse.fwhm_fs = q->first.in("fs");
  } else {
    note_default("pulse.fwhm", format_short(cfg.pulse.fwhm_fs) + " fs");
  }
  if (const Entry* e = find("pulse.envelope")) {
    if (e->value != "gaussian") fail(e->line, "pulse.envelope", "only 'gaussian' is supported");
  } else {
    note_default("pulse.envelope", "gaussian");
  }
  if (auto q = quantity("pulse.center")) {
    cfg.pulse.center_ps = q->first.in("ps");
  } else {
    note_default("pulse.center", format_short(cfg.pulse.center_ps) + " ps");
  }
  if (auto q = quantity("pulse.wavelength")) {
    if (!(q->first.raw > 0.0)) fail(q->second, "pulse.wavelength", "must be > 0");
    cfg.pulse.wavelength_nm = q->first.in("nm");
  } else {
    note_default("pulse.wavelength", format_short(cfg.pulse.wavelength_nm) + " nm");
  }

  if (auto q = quantity("probe.fwhm")) {
    if (!(q->first.raw > 0.0)) fail(q->second, "probe.fwhm", "must be > 0");
    cfg.probe_fwhm_fs = q->first.in("fs");
  } else {
    cfg.probe_fwhm_fs = cfg.pulse.fwhm_fs;
    note_default("probe.fwhm", format_short(cfg.probe_fwhm_fs) + " fs (pump fwhm)");
  }

  if (auto q = quantity("ensemble.temperature")) {
    if (q->first.raw < 0.0) fail(q->second, "ensemble.temperature", "must be >= 0");
    cfg.temperature.kelvin = q->first.in("K");
  } else {
    note_default("ensemble.temperature", format_short(cfg.temperature.kelvin) + " K");
  }
  if (auto q = quantity("ensemble.population_cutoff")) {
    if (!(q->first.raw > 0.0 && q->first.raw <= 1e-4)) {
      fail(q->second, "ensemble.population_cutoff", "must lie in (0, 1e-4]");
    }
    cfg.population_cutoff = q->first.raw;
  } else {
    note_default("ensemble.population_cutoff", format_short(cfg.population_cutoff));
  }

  auto grid_time = [&](std::string_view key, double& field, std::string_view unit_text) {
    if (auto q = quantity(key)) {
      field = q->first.in("ps");
    } else {
      note_default(key, format_short(field) + " " + std::string(unit_text));
    }
  };
  grid_time("grid.t_start", cfg.grid.t_start_ps, "ps");
  grid_time("grid.t_end", cfg.grid.t_end_ps, "ps");
  grid_time("grid.dt", cfg.grid.dt_ps, "ps");
  if (const Entry* e = find("grid.j_max")) {
    if (e->value == "auto") {
      cfg.grid.j_max = 0;
    } else {
      const auto v = parse_number(e->value);
      if (!v || *v != std::floor(*v) || *v < 2 || *v > 100000) {
        fail(e->line, "grid.j_max", "expected 'auto' or an integer >= 2");
      }
      cfg.grid.j_max = static_cast<int>(*v);
    }
  } else {
    note_default("grid.j_max", "auto");
  }
  {
    const int line = find("grid.dt") ? find("grid.dt")->line : (find("grid.t_end") ? find("grid.t_end")->line : 0);
    if (!(cfg.grid.t_end_ps > cfg.grid.t_start_ps)) fail(line, "grid.t_end", "must exceed grid.t_start");
    if (!(cfg.grid.dt_ps > 0.0)) fail(line, "grid.dt", "must be > 0");
  }

  if (const Entry* e = find("output.artifacts")) {
    cfg.outputs.clear();
    for (const auto& item : split_list(e->value)) {
      std::optional<Artifact> a;
      for (Artifact cand : {Artifact::trace, Artifact::signal, Artifact::peaks, Artifact::superposition}) {
        if (item == to_string(cand)) a = cand;
      }
      if (!a) fail(e->line, "output.artifacts", "unknown artifact '" + item + "'");
      if (!cfg.wants(*a)) cfg.outputs.push_back(*a);
    }
    if (cfg.outputs.empty()) fail(e->line, "output.artifacts", "empty list");
  } else {
    note_default("output.artifacts", "trace, signal, peaks");
  }

  if (auto q = quantity("experiment.pressure")) cfg.pressure_pa = q->first.in("Pa");

  if (auto q = quantity("fit.threshold")) {
    if (!(q->first.raw > 0.0)) fail(q->second, "fit.threshold", "must be > 0");
    cfg.fit.threshold = q->first.raw;
  } else {
    note_default("fit.threshold", format_short(cfg.fit.threshold));
  }
  if (auto q = quantity("fit.window_start")) cfg.fit.window.start_ps = q->first.in("ps");
  if (auto q = quantity("fit.window_end")) cfg.fit.window.end_ps = q->first.in("ps");
  if (!(cfg.fit.window.end_ps > cfg.fit.window.start_ps)) {
    fail(find("fit.window_end") ? find("fit.window_end")->line : 0, "fit.window_end", "must exceed fit.window_start");
  }
  return out;
}

/// Every field written out explicitly; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& cfg) {
  using config_detail::format_double;
  std::ostringstream o;
  const auto& m = cfg.molecule;
  if (!cfg.molecule_preset.empty()) o << "molecule.preset = " << cfg.molecule_preset << "\n";
  o << "molecule.name = " << m.name << "\n";
  o << "molecule.B = " << format_double(m.rotational_constant_cm) << " cm-1\n";
  o << "molecule.delta_alpha = " << format_double(m.polarizability_anisotropy) << " "
    << to_string(m.polarizability_unit) << "\n";
  o << "molecule.spin_weight_even = " << format_double(m.spin_weight_even_j) << "\n";
  o << "molecule.spin_weight_odd = " << format_double(m.spin_weight_odd_j) << "\n";
  const auto& p = cfg.pulse;
  o << "pulse.intensity = " << format_double(p.peak_intensity_w_cm2) << " W/cm2\n";
  o << "pulse.fwhm = " << format_double(p.fwhm_fs) << " fs\n";
  o << "pulse.a2 = " << format_double(p.ellipticity_a2) << "\n";
  o << "pulse.envelope = gaussian\n";
  o << "pulse.center = " << format_double(p.center_ps) << " ps\n";
  o << "pulse.wavelength = " << format_double(p.wavelength_nm) << " nm\n";
  o << "probe.fwhm = " << format_double(cfg.probe_fwhm_fs) << " fs\n";
  o << "ensemble.temperature = " << format_double(cfg.temperature.kelvin) << " K\n";
  o << "ensemble.population_cutoff = " << format_double(cfg.population_cutoff) << "\n";
  o << "grid.t_start = " << format_double(cfg.grid.t_start_ps) << " ps\n";
  o << "grid.t_end = " << format_double(cfg.grid.t_end_ps) << " ps\n";
  o << "grid.dt = " << format_double(cfg.grid.dt_ps) << " ps\n";
  o << "grid.j_max = " << (cfg.grid.auto_j_max() ? std::string("auto") : std::to_string(cfg.grid.j_max)) << "\n";
  o << "output.artifacts = ";
  for (std::size_t i = 0; i < cfg.outputs.size(); ++i) o << (i ? ", " : "") << to_string(cfg.outputs[i]);
  o << "\n";
  if (cfg.pressure_pa) o << "experiment.pressure = " << format_double(*cfg.pressure_pa) << " Pa\n";
  o << "fit.threshold = " << format_double(cfg.fit.threshold) << "\n";
  if (std::isfinite(cfg.fit.window.start_ps)) {
    o << "fit.window_start = " << format_double(cfg.fit.window.start_ps) << " ps\n";
  }
  if (std::isfinite(cfg.fit.window.end_ps)) {
    o << "fit.window_end = " << format_double(cfg.fit.window.end_ps) << " ps\n";
  }
  return o.str();
}

}  // namespace ffalign
