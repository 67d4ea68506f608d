#pragma once

// Intermediate-field picture: an elliptical pulse acts as two cross-polarized
// linear pulses with intensity weights b^2 (along y) and a^2 (along x).

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ffalign/signal.hpp"
#include "ffalign/trace.hpp"
#include "ffalign/units.hpp"

namespace ffalign {

/// A_par(t) = <cos^2 theta_y>(t) - 1/3 of a linearly (y) polarized pulse with
/// the same envelope. The perpendicular response is -A_par/2.
struct LinearReference {
  std::vector<double> t_ps;
  std::vector<double> a_parallel;

  static LinearReference from_trace(const AlignmentTrace& linear) {
    LinearReference r;
    r.t_ps = linear.t_ps;
    r.a_parallel.resize(linear.size());
    for (std::size_t k = 0; k < linear.size(); ++k) r.a_parallel[k] = linear.cos2y[k] - 1.0 / 3.0;
    return r;
  }

  std::vector<double> a_perp() const {
    std::vector<double> p(a_parallel.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = -0.5 * a_parallel[k];
    return p;
  }
};

/// Coefficients multiplying A_par for the y and x deviations.
struct SuperpositionWeights {
  double y = 1.0;
  double x = -0.5;
};

inline SuperpositionWeights superposition_weights(double a2) {
  if (!(a2 >= 0.0 && a2 <= 0.5)) throw ConfigError("superposition: a2 must lie in [0, 1/2]");
  // y: b^2 A_par + a^2 A_perp; x: a^2 A_par + b^2 A_perp.
  return {1.0 - 1.5 * a2, 0.5 * (3.0 * a2 - 1.0)};
}

/// Approximate deviations from 1/3 (y and x) and the alignment trace they imply
/// with z closed by the sum rule.
struct SuperposedTrace {
  std::vector<double> t_ps;
  std::vector<double> dy;
  std::vector<double> dx;

  AlignmentTrace as_alignment() const {
    AlignmentTrace tr;
    tr.t_ps = t_ps;
    tr.cos2x.resize(t_ps.size());
    tr.cos2y.resize(t_ps.size());
    tr.cos2z.resize(t_ps.size());
    for (std::size_t k = 0; k < t_ps.size(); ++k) {
      tr.cos2y[k] = 1.0 / 3.0 + dy[k];
      tr.cos2x[k] = 1.0 / 3.0 + dx[k];
      tr.cos2z[k] = 1.0 / 3.0 - dy[k] - dx[k];
    }
    return tr;
  }
};

inline SuperposedTrace superposed_trace(const LinearReference& ref, double a2) {
  const auto w = superposition_weights(a2);
  SuperposedTrace s;
  s.t_ps = ref.t_ps;
  s.dy.resize(ref.a_parallel.size());
  s.dx.resize(ref.a_parallel.size());
  for (std::size_t k = 0; k < s.dy.size(); ++k) {
    s.dy[k] = w.y * ref.a_parallel[k];
    s.dx[k] = w.x * ref.a_parallel[k];
  }
  return s;
}

struct MagicEllipticity {
  double a2 = 1.0 / 3.0;
  double angle_rad = 0.0;  // arctan(sqrt 2), cos^2 = 1/3
  double angle_deg = 0.0;
};

/// a^2 where 1 - 2a^2 = a^2: the cos^2 theta_y and sin^2 theta_z couplings are
/// equal and the x deviation of the superposition vanishes.
inline MagicEllipticity magic_ellipticity() {
  MagicEllipticity m;
  m.a2 = 1.0 / 3.0;
  m.angle_rad = std::atan(std::sqrt(2.0));
  m.angle_deg = m.angle_rad * 180.0 / std::numbers::pi;
  return m;
}

/// Normalized first-revival signal peak predicted by the superposition,
/// relative to linear polarization: the squared weights.
inline double superposition_peak_ratio(Axis axis, double a2) {
  const auto w = superposition_weights(a2);
  if (axis == Axis::y) return w.y * w.y;
  if (axis == Axis::x) return (w.x * w.x) / 0.25;
  throw std::invalid_argument("superposition_peak_ratio: x or y only");
}

struct SuperpositionDeviation {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::size_t samples = 0;
};

/// RMS(full - approx) / RMS(full) of the deviations from 1/3, per axis, over
/// the samples inside `window`. Axes where the full deviation vanishes report
/// the absolute RMS instead.
inline SuperpositionDeviation compare_superposition(const AlignmentTrace& full, const SuperposedTrace& approx,
                                                    const TimeWindow& window) {
  if (full.size() != approx.t_ps.size()) {
    throw std::invalid_argument("compare_superposition: traces are on different grids");
  }
  const AlignmentTrace ap = approx.as_alignment();
  if (!full.same_grid(ap)) throw std::invalid_argument("compare_superposition: traces are on different grids");
  SuperpositionDeviation out;
  std::array<double, 3> diff{}, ref{};
  for (std::size_t k = 0; k < full.size(); ++k) {
    if (!window.contains(full.t_ps[k])) continue;
    ++out.samples;
    for (Axis a : all_axes) {
      const auto i = static_cast<std::size_t>(a);
      const double f = full[a][k] - 1.0 / 3.0;
      const double d = f - (ap[a][k] - 1.0 / 3.0);
      diff[i] += d * d;
      ref[i] += f * f;
    }
  }
  if (out.samples == 0) throw ConfigError("compare_superposition: window holds no samples");
  auto rel = [&](std::size_t i) { return ref[i] > 0.0 ? std::sqrt(diff[i] / ref[i]) : std::sqrt(diff[i] / out.samples); };
  out.x = rel(0);
  out.y = rel(1);
  out.z = rel(2);
  return out;
}

}  // namespace ffalign
