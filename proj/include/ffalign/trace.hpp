#pragma once

// Time-domain alignment traces and their post-pulse spectral form.

#include <array>
#include <cmath>
#include <complex>
#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ffalign/angular.hpp"
#include "ffalign/units.hpp"

namespace ffalign {

/// <cos^2 theta_{x,y,z}>(t) sampled on a uniform grid.
struct AlignmentTrace {
  std::vector<double> t_ps;
  std::vector<double> cos2x;
  std::vector<double> cos2y;
  std::vector<double> cos2z;

  AlignmentTrace() = default;
  explicit AlignmentTrace(const GridSpec& grid) {
    const std::size_t n = grid.size();
    t_ps.resize(n);
    for (std::size_t k = 0; k < n; ++k) t_ps[k] = grid.time(k);
    cos2x.assign(n, 0.0);
    cos2y.assign(n, 0.0);
    cos2z.assign(n, 0.0);
  }

  std::size_t size() const { return t_ps.size(); }
  double dt() const { return t_ps.size() > 1 ? t_ps[1] - t_ps[0] : 0.0; }

  std::vector<double>& operator[](Axis a) { return a == Axis::x ? cos2x : (a == Axis::y ? cos2y : cos2z); }
  const std::vector<double>& operator[](Axis a) const {
    return a == Axis::x ? cos2x : (a == Axis::y ? cos2y : cos2z);
  }

  bool same_grid(const AlignmentTrace& other) const {
    if (other.size() != size()) return false;
    for (std::size_t k = 0; k < size(); ++k) {
      if (std::abs(other.t_ps[k] - t_ps[k]) > 1e-12 * (1.0 + std::abs(t_ps[k]))) return false;
    }
    return true;
  }
};

/// Field-free evolution of <cos^2 theta_axis> in closed form:
///   value(t) = offset + 2 Re sum_J C_J exp(i omega_J (t - t_ref)),
///   omega_J = B_rad (4J + 6),
/// where C_J collects the J -> J+2 coherences. Valid after the pulse.
struct FieldFreeSeries {
  double b_rad_per_ps = 0.0;
  double t_ref_ps = 0.0;
  std::array<double, 3> offset{};
  std::array<std::vector<std::complex<double>>, 3> coherence;  // indexed by lower J

  void resize(int j_max) {
    for (auto& c : coherence) c.assign(static_cast<std::size_t>(std::max(j_max - 1, 0)), 0.0);
  }
  int j_count() const { return static_cast<int>(coherence[0].size()); }

  /// Adds weight * other into this series (grids in J are aligned by index).
  void accumulate(const FieldFreeSeries& other, double weight) {
    if (other.j_count() > j_count()) {
      for (auto& c : coherence) c.resize(other.coherence[0].size(), 0.0);
    }
    for (int a = 0; a < 3; ++a) {
      offset[a] += weight * other.offset[a];
      for (std::size_t j = 0; j < other.coherence[a].size(); ++j) {
        coherence[a][j] += weight * other.coherence[a][j];
      }
    }
  }

  std::array<double, 3> evaluate(double t_ps) const {
    std::array<double, 3> v = offset;
    const double tau = t_ps - t_ref_ps;
    for (int j = 0; j < j_count(); ++j) {
      const double omega = b_rad_per_ps * (4.0 * j + 6.0);
      const std::complex<double> phase = std::polar(1.0, omega * tau);
      for (int a = 0; a < 3; ++a) {
        const auto& c = coherence[a][static_cast<std::size_t>(j)];
        if (c != 0.0) v[a] += 2.0 * (c.real() * phase.real() - c.imag() * phase.imag());
      }
    }
    return v;
  }
};

}  // namespace ffalign
