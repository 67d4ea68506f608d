#pragma once

// Brute-force angular integration of <J',M'|f_axis|J,M> over the sphere.
// Independent of the closed forms in angular.hpp: harmonics come from
// std::sph_legendre, the cos(theta) integral from Gauss-Legendre nodes and
// the phi integral from a uniform trapezoid rule.

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include "ffalign/angular.hpp"

namespace ffalign {

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    w[static_cast<std::size_t>(i)] = wi;
    w[static_cast<std::size_t>(n - 1 - i)] = wi;
  }
  return {x, w};
}

/// Y_{J,M}(theta, phi) with the Condon-Shortley phase.
inline std::complex<double> spherical_harmonic(int j, int m, double theta, double phi) {
  const unsigned l = static_cast<unsigned>(j);
  const unsigned am = static_cast<unsigned>(std::abs(m));
  const double y = std::sph_legendre(l, am, theta);
  const std::complex<double> ylm = y * std::polar(1.0, am * phi);
  if (m >= 0) return ylm;
  return ((am % 2 == 0) ? 1.0 : -1.0) * std::conj(ylm);
}

inline double quadrature_oracle(Axis axis, int j, int m, int jp, int mp, int extra_points = 0) {
  const int n_theta = (j + jp) / 2 + 4 + extra_points;
  const int n_phi = 2 * (std::abs(m) + std::abs(mp)) + 8 + extra_points;
  const auto [nodes, weights] = gauss_legendre(n_theta);
  std::complex<double> acc = 0.0;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    const double theta = std::acos(nodes[a]);
    const double sin2 = 1.0 - nodes[a] * nodes[a];
    for (int b = 0; b < n_phi; ++b) {
      const double phi = 2.0 * std::numbers::pi * b / n_phi;
      double f = 0.0;
      switch (axis) {
        case Axis::x: f = sin2 * std::cos(phi) * std::cos(phi); break;
        case Axis::y: f = sin2 * std::sin(phi) * std::sin(phi); break;
        case Axis::z: f = nodes[a] * nodes[a]; break;
      }
      acc += weights[a] * f * std::conj(spherical_harmonic(jp, mp, theta, phi)) *
             spherical_harmonic(j, m, theta, phi);
    }
  }
  acc *= 2.0 * std::numbers::pi / n_phi;
  return acc.real();
}

}  // namespace ffalign
