#pragma once

// Physical specifications and the internal unit system.
//
// Internal units: time in ps, energies expressed as angular frequencies in
// rad/ps (hbar = 1). Laboratory inputs (W/cm^2, cm^-1, fs, Angstrom^3) are
// converted once, in internal_units().

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ffalign {

/// Invalid or inconsistent configuration (exit status 2 in the CLI).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Physics-validity failure: basis truncation, norm loss (exit status 3).
class PhysicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace constants {
// CODATA 2018 exact / recommended values, SI.
inline constexpr double c_cm_per_s = 2.99792458e10;
inline constexpr double c_m_per_s = 2.99792458e8;
inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double h_planck = 6.62607015e-34;    // J s
inline constexpr double k_boltzmann = 1.380649e-23;   // J / K
inline constexpr double epsilon0 = 8.8541878128e-12;  // F / m
inline constexpr double bohr_radius_angstrom = 0.529177210903;
inline constexpr double ps_per_s = 1e12;
inline constexpr double fs_per_ps = 1e3;
}  // namespace constants

enum class PolarizabilityUnit { angstrom3, atomic };

inline PolarizabilityUnit parse_polarizability_unit(std::string_view tag) {
  if (tag == "A3" || tag == "angstrom3" || tag == "Angstrom3") {
    return PolarizabilityUnit::angstrom3;
  }
  if (tag == "au" || tag == "a.u." || tag == "bohr3") {
    return PolarizabilityUnit::atomic;
  }
  throw ConfigError("unknown polarizability unit '" + std::string(tag) +
                    "' (expected A3 or au)");
}

inline std::string_view to_string(PolarizabilityUnit u) {
  return u == PolarizabilityUnit::angstrom3 ? "A3" : "au";
}

struct MoleculeSpec {
  std::string name = "co2";
  double rotational_constant_cm = 0.3902;  // B, cm^-1
  double polarizability_anisotropy = 2.0;  // value in `polarizability_unit`
  PolarizabilityUnit polarizability_unit = PolarizabilityUnit::angstrom3;
  double spin_weight_even_j = 1.0;
  double spin_weight_odd_j = 0.0;

  void validate() const {
    if (!(rotational_constant_cm > 0.0) || !std::isfinite(rotational_constant_cm)) {
      throw ConfigError("molecule: rotational constant must be > 0");
    }
    if (!(polarizability_anisotropy >= 0.0) || !std::isfinite(polarizability_anisotropy)) {
      throw ConfigError("molecule: polarizability anisotropy must be finite and >= 0");
    }
    if (spin_weight_even_j < 0.0 || spin_weight_odd_j < 0.0) {
      throw ConfigError("molecule: spin weights must be >= 0");
    }
    if (!(spin_weight_even_j > 0.0 || spin_weight_odd_j > 0.0)) {
      throw ConfigError("molecule: at least one spin weight must be > 0");
    }
  }

  double spin_weight(int j) const { return j % 2 == 0 ? spin_weight_even_j : spin_weight_odd_j; }

  friend bool operator==(const MoleculeSpec&, const MoleculeSpec&) = default;
};

/// CO2 preset: B from the ground vibrational state, anisotropy ~2.0 A^3,
/// only even J allowed (spin-0 oxygen nuclei).
inline MoleculeSpec co2_preset() { return MoleculeSpec{}; }

enum class EnvelopeShape { gaussian };

struct PulseSpec {
  double peak_intensity_w_cm2 = 25e12;
  double fwhm_fs = 100.0;  // intensity FWHM
  double ellipticity_a2 = 0.0;
  EnvelopeShape envelope = EnvelopeShape::gaussian;
  double center_ps = 0.0;
  double wavelength_nm = 800.0;  // informational; carrier is cycle-averaged

  double a2() const { return ellipticity_a2; }
  double b2() const { return 1.0 - ellipticity_a2; }
  double fwhm_ps() const { return fwhm_fs / constants::fs_per_ps; }

  void validate() const {
    if (!(ellipticity_a2 >= 0.0 && ellipticity_a2 <= 0.5)) {
      throw ConfigError("pulse: a2 must lie in [0, 1/2] (a2 > 1/2 is the x/y swapped ellipse)");
    }
    if (!(peak_intensity_w_cm2 >= 0.0) || !std::isfinite(peak_intensity_w_cm2)) {
      throw ConfigError("pulse: peak intensity must be finite and >= 0");
    }
    if (!(fwhm_fs > 0.0) || !std::isfinite(fwhm_fs)) {
      throw ConfigError("pulse: fwhm must be > 0");
    }
    if (!std::isfinite(center_ps)) throw ConfigError("pulse: center must be finite");
  }

  friend bool operator==(const PulseSpec&, const PulseSpec&) = default;
};

struct GridSpec {
  double t_start_ps = 0.0;
  double t_end_ps = 50.0;
  double dt_ps = 0.01;
  int j_max = 0;  // 0 means "auto"

  bool auto_j_max() const { return j_max == 0; }

  void validate() const {
    if (!(t_end_ps > t_start_ps)) throw ConfigError("grid: t_end must exceed t_start");
    if (!(dt_ps > 0.0)) throw ConfigError("grid: dt must be > 0");
    if (j_max != 0 && j_max < 2) throw ConfigError("grid: j_max must be >= 2 or auto");
  }

  /// Number of output samples, t_k = t_start + k*dt for t_k <= t_end.
  std::size_t size() const {
    return static_cast<std::size_t>(std::floor((t_end_ps - t_start_ps) / dt_ps + 1e-9)) + 1;
  }
  double time(std::size_t k) const { return t_start_ps + static_cast<double>(k) * dt_ps; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct TemperatureSpec {
  double kelvin = 295.0;

  void validate() const {
    if (!(kelvin >= 0.0) || !std::isfinite(kelvin)) {
      throw ConfigError("temperature must be finite and >= 0");
    }
  }

  friend bool operator==(const TemperatureSpec&, const TemperatureSpec&) = default;
};

/// Parameters in propagation units.
struct InternalParams {
  double b_rad_per_ps = 0.0;     // 2 pi c B
  double u_peak_rad_per_ps = 0.0;  // delta_alpha E0^2 / (4 hbar)
  double fwhm_ps = 0.0;
  double center_ps = 0.0;
  double a2 = 0.0;

  /// Full revival period pi / B_rad (all J(J+1) are even).
  double revival_period_ps() const { return std::numbers::pi / b_rad_per_ps; }
};

inline double polarizability_si(double value, PolarizabilityUnit unit) {
  // Convert a polarizability volume to C m^2 / V: alpha_SI = 4 pi eps0 alpha_vol.
  double angstrom3 = 0.0;
  switch (unit) {
    case PolarizabilityUnit::angstrom3:
      angstrom3 = value;
      break;
    case PolarizabilityUnit::atomic:
      angstrom3 = value * std::pow(constants::bohr_radius_angstrom, 3);
      break;
    default:
      throw ConfigError("polarizability unit tag not recognised");
  }
  return 4.0 * std::numbers::pi * constants::epsilon0 * angstrom3 * 1e-30;
}

inline double rotational_constant_rad_per_ps(double b_cm) {
  return 2.0 * std::numbers::pi * constants::c_cm_per_s * b_cm / constants::ps_per_s;
}

/// Peak coupling U = delta_alpha * E0^2 / (4 hbar) in rad/ps, where
/// E0^2 = 2 I / (eps0 c) is the squared envelope amplitude at peak.
inline double peak_coupling_rad_per_ps(double intensity_w_cm2, double delta_alpha,
                                       PolarizabilityUnit unit) {
  const double intensity_si = intensity_w_cm2 * 1e4;  // W/m^2
  const double e0_squared = 2.0 * intensity_si / (constants::epsilon0 * constants::c_m_per_s);
  const double joules = polarizability_si(delta_alpha, unit) * e0_squared / 4.0;
  return joules / constants::hbar / constants::ps_per_s;
}

inline InternalParams internal_units(const MoleculeSpec& mol, const PulseSpec& pulse) {
  mol.validate();
  pulse.validate();
  InternalParams p;
  p.b_rad_per_ps = rotational_constant_rad_per_ps(mol.rotational_constant_cm);
  p.u_peak_rad_per_ps = peak_coupling_rad_per_ps(pulse.peak_intensity_w_cm2,
                                                 mol.polarizability_anisotropy,
                                                 mol.polarizability_unit);
  p.fwhm_ps = pulse.fwhm_ps();
  p.center_ps = pulse.center_ps;
  p.a2 = pulse.ellipticity_a2;
  return p;
}

/// Laboratory values recovered from internal parameters.
struct LabValues {
  double rotational_constant_cm;
  double peak_intensity_w_cm2;
  double fwhm_fs;
  double center_ps;
  double ellipticity_a2;
};

inline LabValues to_lab_units(const InternalParams& p, double delta_alpha,
                              PolarizabilityUnit unit) {
  LabValues lab{};
  lab.rotational_constant_cm =
      p.b_rad_per_ps * constants::ps_per_s / (2.0 * std::numbers::pi * constants::c_cm_per_s);
  const double per_intensity = peak_coupling_rad_per_ps(1.0, delta_alpha, unit);
  lab.peak_intensity_w_cm2 = per_intensity > 0.0 ? p.u_peak_rad_per_ps / per_intensity : 0.0;
  lab.fwhm_fs = p.fwhm_ps * constants::fs_per_ps;
  lab.center_ps = p.center_ps;
  lab.ellipticity_a2 = p.a2;
  return lab;
}

/// Gaussian intensity envelope Lambda^2(t), unit peak at t0.
inline double envelope_squared(double fwhm_ps, double center_ps, double t_ps) {
  const double x = (t_ps - center_ps) / fwhm_ps;
  return std::exp(-4.0 * std::numbers::ln2 * x * x);
}

inline double envelope_squared(const PulseSpec& pulse, double t_ps) {
  return envelope_squared(pulse.fwhm_ps(), pulse.center_ps, t_ps);
}

}  // namespace ffalign
