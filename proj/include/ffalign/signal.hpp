#pragma once

// Cross-defocusing pump-probe signal, revival-peak search and the
// single-factor shape fit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffalign/angular.hpp"
#include "ffalign/trace.hpp"
#include "ffalign/units.hpp"

namespace ffalign {

struct SignalTrace {
  std::vector<double> delay_ps;
  std::vector<double> sx;  // empty when the axis is absent (measured data)
  std::vector<double> sy;
  double probe_fwhm_fs = 0.0;

  std::size_t size() const { return delay_ps.size(); }
  bool has(Axis a) const { return !(*this)[a].empty(); }

  std::vector<double>& operator[](Axis a) {
    if (a == Axis::z) throw std::invalid_argument("SignalTrace: no z-axis signal");
    return a == Axis::x ? sx : sy;
  }
  const std::vector<double>& operator[](Axis a) const {
    if (a == Axis::z) throw std::invalid_argument("SignalTrace: no z-axis signal");
    return a == Axis::x ? sx : sy;
  }
};

/// Unit-area Gaussian of intensity FWHM `fwhm_ps`, convolved discretely with
/// `f` on a uniform grid of spacing dt. The kernel is cut at +-6 sigma and
/// renormalized to the samples that fall inside the grid, so the edges see a
/// local weighted mean rather than an implicit zero padding.
inline std::vector<double> gaussian_smooth(const std::vector<double>& f, double dt, double fwhm_ps) {
  const double sigma = fwhm_ps / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(6.0 * sigma / dt));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  for (std::ptrdiff_t i = -half; i <= half; ++i) {
    const double u = static_cast<double>(i) * dt / sigma;
    kernel[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * u * u);
  }
  const auto n = static_cast<std::ptrdiff_t>(f.size());
  std::vector<double> out(f.size(), 0.0);
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, k - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, k + half);
    double acc = 0.0, mass = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double g = kernel[static_cast<std::size_t>(j - k + half)];
      acc += g * f[static_cast<std::size_t>(j)];
      mass += g;
    }
    out[static_cast<std::size_t>(k)] = acc / mass;
  }
  return out;
}

/// S_axis(delay) = integral of G(t - delay) [<cos^2 theta_axis>(t) - 1/3]^2 dt.
inline std::vector<double> defocusing_signal(const AlignmentTrace& trace, Axis axis, double probe_fwhm_fs) {
  if (axis == Axis::z) throw std::invalid_argument("signal: the probe sees the x or y axis only");
  if (!(probe_fwhm_fs > 0.0)) throw ConfigError("probe fwhm must be > 0");
  if (trace.size() < 2) throw ConfigError("signal: trace needs at least two samples");
  const double fwhm_ps = probe_fwhm_fs / constants::fs_per_ps;
  const double dt = trace.dt();
  if (dt > fwhm_ps / 5.0 * (1.0 + 1e-9)) {
    throw ConfigError("signal: grid spacing " + std::to_string(dt) + " ps is coarser than probe fwhm/5 = " +
                      std::to_string(fwhm_ps / 5.0) + " ps");
  }
  const auto& c = trace[axis];
  std::vector<double> dev2(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double d = c[k] - 1.0 / 3.0;
    dev2[k] = d * d;
  }
  return gaussian_smooth(dev2, dt, fwhm_ps);
}

inline SignalTrace defocusing_signals(const AlignmentTrace& trace, double probe_fwhm_fs) {
  SignalTrace s;
  s.delay_ps = trace.t_ps;
  s.probe_fwhm_fs = probe_fwhm_fs;
  s.sx = defocusing_signal(trace, Axis::x, probe_fwhm_fs);
  s.sy = defocusing_signal(trace, Axis::y, probe_fwhm_fs);
  return s;
}

struct RevivalPeak {
  int index = 0;  // 1 = quarter revival
  double center_ps = 0.0;  // k T_rev / 4 + time origin
  double time_ps = 0.0;
  double height = 0.0;
};

struct PeakSearch {
  double half_width_ps = 1.5;
  double threshold = 1e-12;
  double time_origin_ps = 0.0;  // pulse center
};

/// Maximum of `values` inside +-half_width windows around k T_rev/4 for every
/// k whose window centre lies on the grid. Peaks at or below the threshold are
/// dropped; the peak time is refined with a three-point parabola.
inline std::vector<RevivalPeak> revival_peaks(const std::vector<double>& delay_ps,
                                              const std::vector<double>& values, double revival_period_ps,
                                              const PeakSearch& opt = {}) {
  if (delay_ps.size() != values.size() || delay_ps.size() < 3) {
    throw std::invalid_argument("revival_peaks: delay and value arrays differ or are too short");
  }
  const double span = delay_ps.back() - delay_ps.front();
  if (span < revival_period_ps / 2.0) {
    throw ConfigError("revival_peaks: delay grid spans " + std::to_string(span) +
                      " ps, less than half a revival period");
  }
  std::vector<RevivalPeak> peaks;
  for (int k = 1;; ++k) {
    const double centre = opt.time_origin_ps + k * revival_period_ps / 4.0;
    if (centre > delay_ps.back()) break;
    if (centre < delay_ps.front()) continue;
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < delay_ps.size(); ++i) {
      if (std::abs(delay_ps[i] - centre) > opt.half_width_ps) continue;
      if (!best || values[i] > values[*best]) best = i;
    }
    if (!best) throw PhysicsError("revival_peaks: no samples in window " + std::to_string(k));
    const std::size_t i = *best;
    if (!(values[i] > opt.threshold)) continue;
    RevivalPeak p{k, centre, delay_ps[i], values[i]};
    if (i > 0 && i + 1 < values.size()) {
      const double ym = values[i - 1], y0 = values[i], yp = values[i + 1];
      const double curv = ym - 2.0 * y0 + yp;
      if (curv < 0.0) {
        const double shift = 0.5 * (ym - yp) / curv;
        if (std::abs(shift) <= 1.0) {
          p.time_ps += shift * (delay_ps[i + 1] - delay_ps[i]);
          p.height = y0 - 0.125 * (ym - yp) * (ym - yp) / curv;
        }
      }
    }
    peaks.push_back(p);
  }
  return peaks;
}

inline std::vector<RevivalPeak> revival_peaks(const SignalTrace& s, Axis axis, double revival_period_ps,
                                              const PeakSearch& opt = {}) {
  return revival_peaks(s.delay_ps, s[axis], revival_period_ps, opt);
}

/// First peak with the given index, if it was found.
inline std::optional<RevivalPeak> find_peak(const std::vector<RevivalPeak>& peaks, int index) {
  for (const auto& p : peaks) {
    if (p.index == index) return p;
  }
  return std::nullopt;
}

struct TimeWindow {
  double start_ps = -std::numeric_limits<double>::infinity();
  double end_ps = std::numeric_limits<double>::infinity();

  bool contains(double t) const { return t >= start_ps && t <= end_ps; }
};

struct FitResult {
  double scale = 0.0;
  double rms_residual = 0.0;  // relative to the measured peak in the window
  std::size_t samples = 0;
};

/// Linear interpolation of (x, y) at t; x ascending, t inside [x0, xn].
inline double interpolate(const std::vector<double>& x, const std::vector<double>& y, double t) {
  auto it = std::upper_bound(x.begin(), x.end(), t);
  if (it == x.begin()) return y.front();
  if (it == x.end()) return y.back();
  const auto i = static_cast<std::size_t>(it - x.begin());
  const double u = (t - x[i - 1]) / (x[i] - x[i - 1]);
  return y[i - 1] + u * (y[i] - y[i - 1]);
}

/// Least-squares single factor s minimising sum (m - s * model)^2 on the
/// measured samples inside `window`; the model is interpolated linearly.
inline FitResult fit_scale(const std::vector<double>& measured_delay, const std::vector<double>& measured,
                           const std::vector<double>& model_delay, const std::vector<double>& model,
                           const TimeWindow& window = {}) {
  if (measured_delay.size() != measured.size() || model_delay.size() != model.size()) {
    throw std::invalid_argument("fit_scale: delay and value arrays differ in length");
  }
  if (model_delay.size() < 2 || !std::is_sorted(model_delay.begin(), model_delay.end())) {
    throw ConfigError("fit_scale: model grid must be ascending with at least two samples");
  }
  std::vector<double> m, s;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    const double t = measured_delay[i];
    if (!window.contains(t) || t < model_delay.front() || t > model_delay.back()) continue;
    m.push_back(measured[i]);
    s.push_back(interpolate(model_delay, model, t));
  }
  if (m.empty()) throw ConfigError("fit_scale: measured and model grids do not overlap inside the window");
  double ms = 0.0, ss = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    ms += m[i] * s[i];
    ss += s[i] * s[i];
    peak = std::max(peak, std::abs(m[i]));
  }
  if (!(ss > 0.0)) throw PhysicsError("fit_scale: model is identically zero on the window; scale undefined");
  FitResult r;
  r.scale = ms / ss;
  r.samples = m.size();
  double res = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double d = m[i] - r.scale * s[i];
    res += d * d;
  }
  res = std::sqrt(res / static_cast<double>(m.size()));
  r.rms_residual = peak > 0.0 ? res / peak : res;
  return r;
}

inline FitResult fit_scale(const SignalTrace& measured, const SignalTrace& model, Axis axis,
                           const TimeWindow& window = {}) {
  return fit_scale(measured.delay_ps, measured[axis], model.delay_ps, model[axis], window);
}

/// z-axis alignment from the sum rule.
inline std::vector<double> reconstruct_z(const AlignmentTrace& trace) {
  std::vector<double> z(trace.size());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = 1.0 - trace.cos2x[k] - trace.cos2y[k];
  return z;
}

}  // namespace ffalign
