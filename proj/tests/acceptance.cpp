// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Every thermal run is CO2 at 295 K on the default 0..50 ps grid unless noted.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "ffalign/ffalign.hpp"
#include "ffalign/quadrature.hpp"

using namespace ffalign;

namespace {

constexpr double third = 1.0 / 3.0;

struct Run {
  EnsembleResult ensemble;
  SignalTrace signal;
  double seconds = 0.0;
};

RunConfig base_config() {
  return parse_config("molecule.preset = co2\npulse.intensity = 25 TW/cm2\npulse.a2 = 0\n").config;
}

class Runs {
 public:
  const Run& get(double tw, double a2) {
    const auto key = std::make_pair(tw, a2);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    RunConfig cfg = base_config();
    cfg.pulse.peak_intensity_w_cm2 = tw * 1e12;
    cfg.pulse.ellipticity_a2 = a2;
    const auto t0 = std::chrono::steady_clock::now();
    Run r;
    r.ensemble = simulate(cfg);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.signal = defocusing_signals(r.ensemble.trace, cfg.probe_fwhm_fs);
    std::printf("  run %5.2f TW/cm2  a2 = %.6f  %6.1f s  edge %.2g  norm %.2g\n", tw, a2, r.seconds,
                r.ensemble.max_tail_population, r.ensemble.max_norm_error);
    std::fflush(stdout);
    return cache_.emplace(key, std::move(r)).first->second;
  }

 private:
  std::map<std::pair<double, double>, Run> cache_;
};

struct Verdict {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Verdict> verdicts;

void report(int id, bool pass, const char* fmt, ...) __attribute__((format(printf, 3, 4)));
void report(int id, bool pass, const char* fmt, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  verdicts.push_back({id, pass, buf});
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, buf);
  std::fflush(stdout);
}

double revival_period_ps() { return internal_units(co2_preset(), PulseSpec{}).revival_period_ps(); }

double post_pulse_start() {
  const PulseSpec p;
  return p.center_ps + 4.0 * p.fwhm_ps();
}

double first_revival_amplitude_y(const AlignmentTrace& tr) {
  const double c = revival_period_ps() / 4.0;
  double best = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (std::abs(tr.t_ps[k] - c) <= 1.5) best = std::max(best, std::abs(tr.cos2y[k] - third));
  }
  return best;
}

double first_peak(const SignalTrace& s, Axis a) {
  PeakSearch search;
  return first_revival_peak(s, a, revival_period_ps(), search);
}

void sum_rule(Runs& runs) {
  double worst = 0.0, slowest = 0.0;
  for (double tw : {12.5, 25.0}) {
    for (double a2 : {0.0, 0.25, third, 0.5}) {
      const Run& r = runs.get(tw, a2);
      const auto& tr = r.ensemble.trace;
      for (std::size_t k = 0; k < tr.size(); ++k) {
        worst = std::max(worst, std::abs(tr.cos2x[k] + tr.cos2y[k] + tr.cos2z[k] - 1.0));
      }
      slowest = std::max(slowest, r.seconds);
    }
  }
  report(1, worst <= 1e-9 && slowest <= 120.0,
         "sum rule max |sum - 1| = %.2e over 8 runs (limit 1e-9); slowest run %.1f s (limit 120 s)", worst, slowest);
}

void linear_relation(Runs& runs) {
  double worst = 0.0, worst_ratio = 0.0;
  double ratio = 0.0;
  for (double tw : {12.5, 25.0}) {
    const Run& r = runs.get(tw, 0.0);
    const auto& tr = r.ensemble.trace;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      worst = std::max(worst, std::abs((tr.cos2x[k] - third) + 0.5 * (tr.cos2y[k] - third)));
    }
    const double q = first_peak(r.signal, Axis::y) / first_peak(r.signal, Axis::x);
    worst_ratio = std::max(worst_ratio, std::abs(q - 4.0));
    if (tw == 25.0) ratio = q;
  }
  report(2, worst <= 1e-9 && worst_ratio <= 1e-6,
         "a2=0: max |dx + dy/2| = %.2e (limit 1e-9); Sy/Sx at first revival = %.9f, max |ratio - 4| = %.2e "
         "(limit 1e-6)",
         worst, ratio, worst_ratio);
}

void magic_ellipticity_run(Runs& runs) {
  const double amp = first_revival_amplitude_y(runs.get(25.0, 0.0).ensemble.trace);
  const auto& tr = runs.get(25.0, third).ensemble.trace;
  const auto z = reconstruct_z(tr);
  const double t_post = post_pulse_start();
  double max_x = 0.0, ss = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.t_ps[k] < t_post) continue;
    max_x = std::max(max_x, std::abs(tr.cos2x[k] - third));
    const double mismatch = (tr.cos2y[k] - third) + (z[k] - third);
    ss += mismatch * mismatch;
    ++n;
  }
  const double rms = std::sqrt(ss / static_cast<double>(n));
  const double budget = 0.1 * amp;
  report(3, n > 0 && max_x <= budget && rms <= budget,
         "a2=1/3, 25 TW: max |dx| = %.3e, rms |dy + dz| = %.3e; budget 10%% of a2=0 first-revival |dy| %.4e = %.3e",
         max_x, rms, amp, budget);
}

// Sx is normalized to its own a2 = 0 value, so its closed form is (3a2 - 1)^2.
// Closed-form agreement is measured relative to the curve's a2 = 0 value (1 after normalization); the
// pointwise relative deviation is printed for reference.
void ellipticity_scan(Runs& runs) {
  const auto grid = ellipticity_grid(24);
  const double step = 1.0 / 24.0;

  struct Curve {
    std::vector<double> y, x;
  };
  auto scan = [&](double tw) {
    Curve c;
    const Run& ref = runs.get(tw, 0.0);
    const double y0 = first_peak(ref.signal, Axis::y), x0 = first_peak(ref.signal, Axis::x);
    for (double a2 : grid) {
      const Run& r = runs.get(tw, a2);
      c.y.push_back(first_peak(r.signal, Axis::y) / y0);
      c.x.push_back(first_peak(r.signal, Axis::x) / x0);
    }
    return c;
  };
  auto closed_y = [](double a2) { return (1.0 - 1.5 * a2) * (1.0 - 1.5 * a2); };
  auto closed_x = [](double a2) { return (3.0 * a2 - 1.0) * (3.0 * a2 - 1.0); };

  const Curve strong = scan(25.0);
  std::printf("  a2        Sy_norm     (1-3a2/2)^2   Sx_norm     (3a2-1)^2\n");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::printf("  %.5f   %.6f    %.6f      %.6f    %.6f\n", grid[i], strong.y[i], closed_y(grid[i]), strong.x[i],
                closed_x(grid[i]));
  }

  bool y_monotone = true;
  for (std::size_t i = 1; i < grid.size(); ++i) y_monotone = y_monotone && strong.y[i] < strong.y[i - 1];
  const auto imin = static_cast<std::size_t>(std::min_element(strong.x.begin(), strong.x.end()) - strong.x.begin());
  bool x_unique = imin > 0 && imin + 1 < grid.size();
  for (std::size_t i = 1; i <= imin && x_unique; ++i) x_unique = strong.x[i] < strong.x[i - 1];
  for (std::size_t i = imin + 1; i < grid.size() && x_unique; ++i) x_unique = strong.x[i] > strong.x[i - 1];
  const bool x_at_magic = std::abs(grid[imin] - third) <= step + 1e-12;

  double full_scale = 0.0, pointwise_y = 0.0, pointwise_x = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    full_scale = std::max({full_scale, std::abs(strong.y[i] - closed_y(grid[i])),
                           std::abs(strong.x[i] - closed_x(grid[i]))});
    pointwise_y = std::max(pointwise_y, std::abs(strong.y[i] / closed_y(grid[i]) - 1.0));
    if (closed_x(grid[i]) > 0.0) pointwise_x = std::max(pointwise_x, std::abs(strong.x[i] / closed_x(grid[i]) - 1.0));
  }

  // Frozen from the first baseline scan; guards the curve against silent drift.
  const double frozen_y[] = {1.0,
                             0.896715678669,
                             0.796573841808,
                             0.700118501281,
                             0.607890427329,
                             0.520422045941,
                             0.438232222710,
                             0.361821011760,
                             0.291664458287,
                             0.228209547267,
                             0.171869403613,
                             0.123019024449,
                             0.081991268532};
  const double frozen_x[] = {1.0,
                             0.760977921246,
                             0.552756622596,
                             0.376529341112,
                             0.233300353856,
                             0.123865491723,
                             0.053222464873,
                             0.026125597178,
                             0.009900205611,
                             0.034104617973,
                             0.098032959506,
                             0.196291830705,
                             0.327965073798};
  double drift = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    drift = std::max({drift, std::abs(strong.y[i] - frozen_y[i]), std::abs(strong.x[i] - frozen_x[i])});
  }

  // Weak field: the closed forms are the linear-response limit and must hold pointwise.
  const Curve weak = scan(0.5);
  double weak_pointwise = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    weak_pointwise = std::max(weak_pointwise, std::abs(weak.y[i] / closed_y(grid[i]) - 1.0));
    if (closed_x(grid[i]) > 0.0) {
      weak_pointwise = std::max(weak_pointwise, std::abs(weak.x[i] / closed_x(grid[i]) - 1.0));
    }
  }

  const bool pass = y_monotone && x_unique && x_at_magic && full_scale <= 0.15 && drift <= 1e-6 &&
                    weak_pointwise <= 0.15;
  report(4, pass,
         "Sy monotone %s; Sx unique minimum at a2 = %.4f (%s); 25 TW closed-form deviation %.3f of full scale "
         "(limit 0.15; pointwise y %.1f%%, x %.1f%% away from the zero); drift from frozen baseline %.1e "
         "(limit 1e-6); 0.5 TW pointwise %.2f%% (limit 15%%)",
         y_monotone ? "yes" : "no", grid[imin], x_unique ? "unique" : "not unique", full_scale, 100 * pointwise_y,
         100 * pointwise_x, drift, 100 * weak_pointwise);
}

void revival_timing(Runs& runs) {
  const double t_rev = revival_period_ps();
  const auto peaks = revival_peaks(runs.get(25.0, 0.0).signal, Axis::y, t_rev);
  const auto p1 = find_peak(peaks, 1), p2 = find_peak(peaks, 2);
  bool timing = p1 && p2;
  if (timing) {
    timing = std::abs(p1->time_ps - 10.7) <= 0.3 && std::abs(p1->time_ps - t_rev / 4) <= 0.3 &&
             std::abs(p2->time_ps - 21.4) <= 0.3 && std::abs(p2->time_ps - t_rev / 2) <= 0.3;
  }

  // Grid step T_rev/4000 puts sample k + 4000 exactly one period after sample k.
  RunConfig cfg = base_config();
  cfg.grid.dt_ps = t_rev / 4000.0;
  const auto t0 = std::chrono::steady_clock::now();
  const auto tr = simulate(cfg).trace;
  std::printf("  run periodicity grid  %6.1f s\n",
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  double worst = 0.0;
  std::size_t compared = 0;
  for (std::size_t k = 0; k + 4000 < tr.size(); ++k) {
    if (tr.t_ps[k] < post_pulse_start()) continue;
    for (Axis a : all_axes) worst = std::max(worst, std::abs(tr[a][k + 4000] - tr[a][k]));
    ++compared;
  }
  report(5, timing && compared > 0 && worst <= 1e-9,
         "Sy peaks at %.3f ps and %.3f ps (targets 10.7 and 21.4 +- 0.3, T_rev/4 = %.4f, T_rev/2 = %.4f); "
         "max |f(t + T_rev) - f(t)| = %.2e over %zu samples (limit 1e-9)",
         p1 ? p1->time_ps : NAN, p2 ? p2->time_ps : NAN, t_rev / 4, t_rev / 2, worst, compared);
}

void circular(Runs& runs) {
  double xy = 0.0, xz = 0.0;
  for (double tw : {12.5, 25.0}) {
    const auto& tr = runs.get(tw, 0.5).ensemble.trace;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      xy = std::max(xy, std::abs(tr.cos2x[k] - tr.cos2y[k]));
      xz = std::max(xz, std::abs((tr.cos2x[k] - third) + 0.5 * (tr.cos2z[k] - third)));
    }
  }
  report(6, xy <= 1e-10 && xz <= 1e-10, "a2=1/2: max |x - y| = %.2e, max |dx + dz/2| = %.2e (limit 1e-10)", xy, xz);
}

double tables_vs_quadrature() {
  const int j_max = 8;
  const CouplingTables t(j_max);
  double worst = 0.0;
  for (Axis a : all_axes) {
    for (int j = 0; j <= j_max; ++j) {
      for (int m = -j; m <= j; ++m) {
        for (int jp = 0; jp <= j_max; ++jp) {
          for (int mp = std::max(-jp, m - 4); mp <= std::min(jp, m + 4); ++mp) {
            worst = std::max(worst, std::abs(t[a]({jp, mp}, {j, m}) - quadrature_oracle(a, j, m, jp, mp)));
          }
        }
      }
    }
  }
  return worst;
}

// First-order amplitudes out of |0,0> for a weak elliptical pulse, relative error of the worst one.
double weak_field_vs_perturbation() {
  const double a2 = 0.25;
  PulseSpec pulse;
  pulse.peak_intensity_w_cm2 = 0.02e12;
  pulse.ellipticity_a2 = a2;
  const MoleculeSpec mol = co2_preset();
  const InternalParams p = internal_units(mol, pulse);
  GridSpec g;
  g.t_start_ps = -0.5;
  g.t_end_ps = 2.0;
  const auto r = propagate_pulse(mol, pulse, g, {0, 0});
  const auto& wp = r.final_amplitudes;
  auto amp = [&](BasisIndex s) {
    const int i = wp.basis.index(s);
    return i < 0 ? cplx{} : wp.amplitudes[static_cast<std::size_t>(i)];
  };
  const double tau = p.fwhm_ps;
  const double w20 = 6.0 * p.b_rad_per_ps;
  const double integral = tau * std::sqrt(std::numbers::pi / (4.0 * std::numbers::ln2)) *
                          std::exp(-w20 * w20 * tau * tau / (16.0 * std::numbers::ln2));
  const cplx c0 = amp({0, 0});
  double worst = 0.0;
  for (BasisIndex f : {BasisIndex{2, 0}, BasisIndex{2, 2}, BasisIndex{2, -2}}) {
    const double w = a2 * quadrature_oracle(Axis::x, 0, 0, f.j, f.m) + (1 - a2) * quadrature_oracle(Axis::y, 0, 0, f.j, f.m);
    const cplx expected(0.0, p.u_peak_rad_per_ps * w * integral);
    const cplx got = amp(f) * std::polar(1.0, w20 * (wp.time_ps - p.center_ps)) / (c0 / std::abs(c0));
    worst = std::max(worst, std::abs(got - expected) / std::abs(expected));
  }
  return worst;
}

void oracles() {
  const double tables = tables_vs_quadrature();
  const double weak = weak_field_vs_perturbation();
  RunConfig cfg = base_config();
  cfg.pulse.peak_intensity_w_cm2 = 0.0;
  const auto tr = simulate(cfg).trace;
  double iso = 0.0;
  for (Axis a : all_axes) {
    for (double v : tr[a]) iso = std::max(iso, std::abs(v - third));
  }
  report(7, tables <= 1e-10 && weak <= 0.01 && iso <= 1e-10,
         "tables vs quadrature (J <= 8) %.2e (limit 1e-10); weak field vs first-order theory %.3f%% (limit 1%%); "
         "zero-field 295 K isotropy %.2e (limit 1e-10)",
         tables, 100 * weak, iso);
}

}  // namespace

int main() {
  std::printf("ffalign %s acceptance suite\n", std::string(version).c_str());
  std::fflush(stdout);
  Runs runs;
  try {
    sum_rule(runs);
    linear_relation(runs);
    magic_ellipticity_run(runs);
    ellipticity_scan(runs);
    revival_timing(runs);
    circular(runs);
    oracles();
  } catch (const std::exception& e) {
    std::printf("FAIL: aborted with %s\n", e.what());
    return 1;
  }
  std::printf("\nsummary\n");
  int failed = 0;
  for (const auto& v : verdicts) {
    std::printf("%s criterion %d\n", v.pass ? "PASS" : "FAIL", v.id);
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 && verdicts.size() == 7 ? 0 : 1;
}
