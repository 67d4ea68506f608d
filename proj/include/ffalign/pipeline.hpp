#pragma once

// Drivers behind the CLI subcommands. Each one computes first and writes all
// files afterwards from a single thread.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ffalign/config.hpp"
#include "ffalign/csv.hpp"
#include "ffalign/ensemble.hpp"
#include "ffalign/signal.hpp"
#include "ffalign/superposition.hpp"

namespace ffalign {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_physics = 3, exit_fit = 4 };

struct RunOptions {
  unsigned threads = 0;
  std::ostream* log = nullptr;
};

namespace pipeline_detail {

inline void log(const RunOptions& opt, const std::string& msg) {
  if (opt.log) *opt.log << msg << std::endl;
}

inline std::filesystem::path prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + p.string() + " for writing");
  return f;
}

}  // namespace pipeline_detail

/// Thermal simulation for the configured pulse, optionally at another a2.
inline EnsembleResult simulate(const RunConfig& cfg, const RunOptions& opt = {},
                               std::optional<double> a2_override = std::nullopt) {
  cfg.validate();
  PulseSpec pulse = cfg.pulse;
  if (a2_override) pulse.ellipticity_a2 = *a2_override;
  pulse.validate();
  EnsembleOptions eo;
  eo.population_cutoff = cfg.population_cutoff;
  eo.threads = opt.threads;
  EnsembleResult r = simulate_ensemble(cfg.molecule, pulse, cfg.temperature, cfg.grid, eo);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "a2 = %.6g: %zu members (%zu propagated), max edge population %.3g, max norm error %.3g",
                pulse.ellipticity_a2, r.member_count, r.propagated, r.max_tail_population, r.max_norm_error);
  pipeline_detail::log(opt, buf);
  return r;
}

inline double revival_period(const RunConfig& cfg) {
  return internal_units(cfg.molecule, cfg.pulse).revival_period_ps();
}

inline PeakSearch peak_search(const RunConfig& cfg) {
  PeakSearch s;
  s.time_origin_ps = cfg.pulse.center_ps;
  return s;
}

/// One row per revival index found on either axis.
struct PeakRow {
  int index = 0;
  double center_ps = 0.0;
  double ty_ps = 0.0, sy = 0.0;
  double tx_ps = 0.0, sx = 0.0;
  double ratio() const { return sy > 0.0 ? sx / sy : 0.0; }
};

inline std::vector<PeakRow> peak_table(const SignalTrace& s, double revival_period_ps, const PeakSearch& search) {
  const auto py = revival_peaks(s, Axis::y, revival_period_ps, search);
  const auto px = revival_peaks(s, Axis::x, revival_period_ps, search);
  std::vector<PeakRow> rows;
  auto row_for = [&](int index, double centre) -> PeakRow& {
    for (auto& r : rows) {
      if (r.index == index) return r;
    }
    rows.push_back({index, centre, centre, 0.0, centre, 0.0});
    return rows.back();
  };
  for (const auto& p : py) {
    auto& r = row_for(p.index, p.center_ps);
    r.ty_ps = p.time_ps;
    r.sy = p.height;
  }
  for (const auto& p : px) {
    auto& r = row_for(p.index, p.center_ps);
    r.tx_ps = p.time_ps;
    r.sx = p.height;
  }
  std::sort(rows.begin(), rows.end(), [](const PeakRow& a, const PeakRow& b) { return a.index < b.index; });
  return rows;
}

struct SuperpositionReport {
  SuperposedTrace approx;
  SuperpositionDeviation deviation;
  TimeWindow window;
};

inline SuperpositionReport superposition_report(const AlignmentTrace& full, const AlignmentTrace& linear,
                                                double a2, double post_pulse_ps) {
  SuperpositionReport rep;
  rep.approx = superposed_trace(LinearReference::from_trace(linear), a2);
  rep.window.start_ps = post_pulse_ps;
  rep.deviation = compare_superposition(full, rep.approx, rep.window);
  return rep;
}

struct SimulateOutput {
  EnsembleResult ensemble;
  SignalTrace signal;
  std::vector<PeakRow> peaks;
  std::optional<SuperpositionReport> superposition;
  std::vector<std::filesystem::path> files;
};

/// White noise of standard deviation fraction * peak on every present axis.
/// Only used to fabricate synthetic measurements for tests.
inline void add_noise(SignalTrace& s, double fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Axis a : {Axis::x, Axis::y}) {
    if (!s.has(a)) continue;
    auto& v = s[a];
    const double peak = *std::max_element(v.begin(), v.end());
    for (auto& x : v) x += fraction * peak * gauss(rng);
  }
}

struct NoiseOptions {
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

inline SimulateOutput run_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir,
                                   const RunOptions& opt = {}, const NoiseOptions& noise = {}) {
  using namespace pipeline_detail;
  SimulateOutput out;
  out.ensemble = simulate(cfg, opt);
  const bool need_signal = cfg.wants(Artifact::signal) || cfg.wants(Artifact::peaks);
  if (need_signal) {
    out.signal = defocusing_signals(out.ensemble.trace, cfg.probe_fwhm_fs);
    if (cfg.wants(Artifact::peaks)) out.peaks = peak_table(out.signal, revival_period(cfg), peak_search(cfg));
    if (noise.fraction > 0.0) add_noise(out.signal, noise.fraction, noise.seed);
  }
  if (cfg.wants(Artifact::superposition)) {
    const double a2 = cfg.pulse.ellipticity_a2;
    const AlignmentTrace linear = a2 == 0.0 ? out.ensemble.trace : simulate(cfg, opt, 0.0).trace;
    out.superposition = superposition_report(out.ensemble.trace, linear, a2, out.ensemble.window_end);
  }

  prepare_dir(out_dir);
  if (cfg.wants(Artifact::trace)) {
    const auto p = out_dir / "trace.csv";
    auto f = open_out(p);
    write_trace_csv(f, out.ensemble.trace, &cfg);
    out.files.push_back(p);
  }
  if (cfg.wants(Artifact::signal)) {
    const auto p = out_dir / "signal.csv";
    auto f = open_out(p);
    write_signal_csv(f, out.signal, &cfg);
    out.files.push_back(p);
  }
  if (cfg.wants(Artifact::peaks)) {
    const auto p = out_dir / "peaks.csv";
    auto f = open_out(p);
    CsvWriter w(f);
    w.comment(csv_preamble("peaks", &cfg));
    w.header({"index", "center_ps", "ty_ps", "Sy", "tx_ps", "Sx", "Sx_over_Sy"});
    for (const auto& r : out.peaks) {
      w.row({static_cast<double>(r.index), r.center_ps, r.ty_ps, r.sy, r.tx_ps, r.sx, r.ratio()});
    }
    out.files.push_back(p);
  }
  if (out.superposition) {
    const auto& rep = *out.superposition;
    const auto& tr = out.ensemble.trace;
    const auto p = out_dir / "superposition.csv";
    auto f = open_out(p);
    CsvWriter w(f);
    char buf[160];
    std::snprintf(buf, sizeof buf, "# relative rms deviation for t >= %.17g ps: x %.17g, y %.17g, z %.17g\n",
                  rep.window.start_ps, rep.deviation.x, rep.deviation.y, rep.deviation.z);
    w.comment(csv_preamble("superposition", &cfg) + buf);
    w.header({"t_ps", "dy_full", "dx_full", "dy_approx", "dx_approx"});
    for (std::size_t k = 0; k < tr.size(); ++k) {
      w.row({tr.t_ps[k], tr.cos2y[k] - 1.0 / 3.0, tr.cos2x[k] - 1.0 / 3.0, rep.approx.dy[k], rep.approx.dx[k]});
    }
    out.files.push_back(p);
  }
  return out;
}

/// a2 = 0, 1/n, ..., 1/2 for n even.
inline std::vector<double> ellipticity_grid(int steps_per_unit = 24) {
  if (steps_per_unit < 2 || steps_per_unit % 2 != 0) throw ConfigError("scan: step count must be even and >= 2");
  std::vector<double> a2;
  for (int k = 0; 2 * k <= steps_per_unit; ++k) a2.push_back(static_cast<double>(k) / steps_per_unit);
  return a2;
}

struct ScanRow {
  double a2 = 0.0;
  double sy_peak = 0.0;
  double sx_peak = 0.0;
  double sy_norm = 0.0;  // relative to a2 = 0
  double sx_norm = 0.0;
  double sy_closed = 0.0;  // superposition prediction (1 - 3a2/2)^2
  double sx_closed = 0.0;  // (3a2 - 1)^2, i.e. ((3a2 - 1)/2)^2 over the a2 = 0 value 1/4
};

/// First-revival signal maximum, or 0 when the window holds nothing above threshold.
inline double first_revival_peak(const SignalTrace& s, Axis axis, double revival_period_ps,
                                 const PeakSearch& search) {
  const auto p = find_peak(revival_peaks(s, axis, revival_period_ps, search), 1);
  return p ? p->height : 0.0;
}

struct ScanOutput {
  std::vector<ScanRow> rows;
  std::vector<std::filesystem::path> files;
};

inline ScanOutput run_scan(const RunConfig& cfg, std::vector<double> a2_list, const std::filesystem::path& out_dir,
                           const RunOptions& opt = {}) {
  using namespace pipeline_detail;
  if (a2_list.empty()) throw ConfigError("scan: empty a2 list");
  for (double a2 : a2_list) {
    if (!(a2 >= 0.0 && a2 <= 0.5)) throw ConfigError("scan: a2 value outside [0, 1/2]");
  }
  if (std::find(a2_list.begin(), a2_list.end(), 0.0) == a2_list.end()) a2_list.push_back(0.0);
  std::sort(a2_list.begin(), a2_list.end());
  a2_list.erase(std::unique(a2_list.begin(), a2_list.end()), a2_list.end());

  const double t_rev = revival_period(cfg);
  const PeakSearch search = peak_search(cfg);
  ScanOutput out;
  for (double a2 : a2_list) {
    const EnsembleResult r = simulate(cfg, opt, a2);
    const SignalTrace s = defocusing_signals(r.trace, cfg.probe_fwhm_fs);
    ScanRow row;
    row.a2 = a2;
    row.sy_peak = first_revival_peak(s, Axis::y, t_rev, search);
    row.sx_peak = first_revival_peak(s, Axis::x, t_rev, search);
    row.sy_closed = superposition_peak_ratio(Axis::y, a2);
    row.sx_closed = superposition_peak_ratio(Axis::x, a2);
    out.rows.push_back(row);
  }
  const ScanRow& ref = out.rows.front();
  if (!(ref.sy_peak > 0.0 && ref.sx_peak > 0.0)) {
    throw PhysicsError("scan: no first-revival signal at a2 = 0; nothing to normalize to");
  }
  for (auto& row : out.rows) {
    row.sy_norm = row.sy_peak / ref.sy_peak;
    row.sx_norm = row.sx_peak / ref.sx_peak;
  }

  prepare_dir(out_dir);
  const auto p = out_dir / "scan.csv";
  auto f = open_out(p);
  CsvWriter w(f);
  w.comment(csv_preamble("scan", &cfg));
  w.header({"a2", "Sy_norm", "Sx_norm", "Sy_peak", "Sx_peak", "Sy_superposition", "Sx_superposition"});
  for (const auto& r : out.rows) w.row({r.a2, r.sy_norm, r.sx_norm, r.sy_peak, r.sx_peak, r.sy_closed, r.sx_closed});
  out.files.push_back(p);
  return out;
}

struct AxisFit {
  Axis axis = Axis::y;
  FitResult fit;
};

struct FitOutput {
  std::vector<AxisFit> fits;
  bool passed = true;
  std::vector<std::filesystem::path> files;
};

/// Fits the configured model signal to `measured` axis by axis.
inline FitOutput fit_signals(const RunConfig& cfg, const SignalTrace& measured, const SignalTrace& model) {
  FitOutput out;
  for (Axis a : {Axis::x, Axis::y}) {
    if (!measured.has(a)) continue;
    AxisFit af{a, fit_scale(measured, model, a, cfg.fit.window)};
    if (!(af.fit.rms_residual <= cfg.fit.threshold)) out.passed = false;
    out.fits.push_back(af);
  }
  return out;
}

inline FitOutput run_fit(const RunConfig& cfg, const SignalTrace& measured, const std::filesystem::path& out_dir,
                         const RunOptions& opt = {}) {
  using namespace pipeline_detail;
  const EnsembleResult r = simulate(cfg, opt);
  const SignalTrace model = defocusing_signals(r.trace, cfg.probe_fwhm_fs);
  FitOutput out = fit_signals(cfg, measured, model);
  for (const auto& af : out.fits) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "S%s: scale %.6g, rms residual %.4g (threshold %.4g), %zu samples",
                  std::string(to_string(af.axis)).c_str(), af.fit.scale, af.fit.rms_residual, cfg.fit.threshold,
                  af.fit.samples);
    log(opt, buf);
  }
  prepare_dir(out_dir);
  const auto p = out_dir / "fit.csv";
  auto f = open_out(p);
  CsvWriter w(f);
  w.comment(csv_preamble("fit", &cfg) + "# axis: 0 = x, 1 = y\n");
  w.header({"axis", "scale", "rms_residual", "samples", "threshold"});
  for (const auto& af : out.fits) {
    w.row({static_cast<double>(af.axis), af.fit.scale, af.fit.rms_residual, static_cast<double>(af.fit.samples),
           cfg.fit.threshold});
  }
  out.files.push_back(p);
  return out;
}

/// Nonzero matrix elements <J',M'|cos^2 theta_axis|J,M> for J, J' <= j_max.
inline void write_tables(std::ostream& out, int j_max, const std::vector<Axis>& axes) {
  const CouplingTables tables(j_max);
  out << "# ffalign " << version << "\n# artifact: tables\n";
  out << "axis,j,m,jp,mp,value\n";
  char buf[64];
  for (Axis a : axes) {
    for (int j = 0; j <= j_max; ++j) {
      for (int m = -j; m <= j; ++m) {
        for (int jp = std::max(0, j - 2); jp <= std::min(j_max, j + 2); jp += 2) {
          for (int mp = m - 2; mp <= m + 2; mp += 2) {
            const BasisIndex bra{jp, mp};
            if (!bra.valid()) continue;
            const double v = tables[a](bra, {j, m});
            if (v == 0.0) continue;
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << to_string(a) << "," << j << "," << m << "," << jp << "," << mp << "," << buf << "\n";
          }
        }
      }
    }
  }
}

}  // namespace ffalign
