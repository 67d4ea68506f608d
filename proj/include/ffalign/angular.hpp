#pragma once

// Matrix elements of cos^2(theta_x), cos^2(theta_y), cos^2(theta_z) in the
// |J,M> spherical-harmonic basis, quantization axis z normal to the
// polarization ellipse. Condon-Shortley phases make every element real.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace ffalign {

enum class Axis { x, y, z };

inline constexpr std::array<Axis, 3> all_axes{Axis::x, Axis::y, Axis::z};

inline std::string_view to_string(Axis a) {
  switch (a) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    default: return "z";
  }
}

struct BasisIndex {
  int j = 0;
  int m = 0;

  bool valid() const { return j >= 0 && m >= -j && m <= j; }
  friend bool operator==(const BasisIndex&, const BasisIndex&) = default;
};

namespace rotor {

/// <J,M|cos^2 theta|J,M>
inline double cos2_diag(int j, int m) {
  const double jj = j * (j + 1.0);
  return 1.0 / 3.0 + (2.0 / 3.0) * (jj - 3.0 * m * m) / ((2.0 * j - 1.0) * (2.0 * j + 3.0));
}

/// <J+2,M|cos^2 theta|J,M>
inline double cos2_up(int j, int m) {
  const double num = ((j + 1.0) * (j + 1.0) - 1.0 * m * m) * ((j + 2.0) * (j + 2.0) - 1.0 * m * m);
  return std::sqrt(num) / ((2.0 * j + 3.0) * std::sqrt((2.0 * j + 1.0) * (2.0 * j + 5.0)));
}

/// <J',M+2| sin^2 theta e^{2 i phi} |J,M> for J' in {J-2, J, J+2}; zero otherwise.
inline double sin2_raise(int jp, int j, int m) {
  if (jp == j) {
    const double p = (j - m - 1.0) * (j - m) * (j + m + 1.0) * (j + m + 2.0);
    return -2.0 * std::sqrt(p > 0.0 ? p : 0.0) / ((2.0 * j - 1.0) * (2.0 * j + 3.0));
  }
  if (jp == j + 2) {
    const double p = (j + m + 1.0) * (j + m + 2.0) * (j + m + 3.0) * (j + m + 4.0);
    return std::sqrt(p) / ((2.0 * j + 3.0) * std::sqrt((2.0 * j + 1.0) * (2.0 * j + 5.0)));
  }
  if (jp == j - 2 && j >= 2) {
    const double p = (j - m - 3.0) * (j - m - 2.0) * (j - m - 1.0) * (j - m);
    return std::sqrt(p > 0.0 ? p : 0.0) /
           ((2.0 * j - 1.0) * std::sqrt((2.0 * j - 3.0) * (2.0 * j + 1.0)));
  }
  return 0.0;
}

}  // namespace rotor

/// Single matrix element <J',M'|cos^2 theta_axis|J,M> from closed forms.
inline double cos2_element(Axis axis, BasisIndex bra, BasisIndex ket) {
  if (!bra.valid() || !ket.valid()) return 0.0;
  const int dj = bra.j - ket.j;
  const int dm = bra.m - ket.m;
  if (dj != 0 && dj != 2 && dj != -2) return 0.0;

  double z = 0.0;
  if (dm == 0) {
    if (dj == 0) z = rotor::cos2_diag(ket.j, ket.m);
    else if (dj == 2) z = rotor::cos2_up(ket.j, ket.m);
    else z = rotor::cos2_up(bra.j, ket.m);
  }
  if (axis == Axis::z) return dm == 0 ? z : 0.0;

  if (dm == 0) return 0.5 * ((dj == 0 ? 1.0 : 0.0) - z);
  const double sign = axis == Axis::x ? 0.25 : -0.25;
  if (dm == 2) return sign * rotor::sin2_raise(bra.j, ket.j, ket.m);
  if (dm == -2) return sign * rotor::sin2_raise(ket.j, bra.j, bra.m);
  return 0.0;
}

/// Dense-in-band table of one cos^2 operator up to j_max.
///
/// Each ket |J,M> stores the nine possible couplings to
/// J' in {J-2, J, J+2} x M' in {M-2, M, M+2}.
class CouplingTable {
 public:
  static constexpr int band = 9;

  CouplingTable(Axis axis, int j_max) : axis_(axis), j_max_(j_max) {
    if (j_max < 2) throw std::domain_error("CouplingTable: j_max must be >= 2");
    rows_.resize(static_cast<std::size_t>((j_max + 1) * (j_max + 1)));
    for (int j = 0; j <= j_max; ++j) {
      for (int m = -j; m <= j; ++m) {
        auto& row = rows_[flat(j, m)];
        for (int k = 0; k < band; ++k) {
          const BasisIndex bra{j + 2 * (k / 3 - 1), m + 2 * (k % 3 - 1)};
          row[k] = bra.valid() && bra.j <= j_max ? cos2_element(axis, bra, {j, m}) : 0.0;
        }
      }
    }
  }

  Axis axis() const { return axis_; }
  int j_max() const { return j_max_; }

  /// Slot k encodes (dJ, dM) = (2*(k/3 - 1), 2*(k%3 - 1)).
  static constexpr int slot(int dj, int dm) { return (dj / 2 + 1) * 3 + (dm / 2 + 1); }

  double operator()(BasisIndex bra, BasisIndex ket) const {
    if (!bra.valid() || !ket.valid() || bra.j > j_max_ || ket.j > j_max_) return 0.0;
    const int dj = bra.j - ket.j;
    const int dm = bra.m - ket.m;
    if (std::abs(dj) > 2 || std::abs(dm) > 2 || dj % 2 != 0 || dm % 2 != 0) return 0.0;
    return rows_[flat(ket.j, ket.m)][slot(dj, dm)];
  }

  const std::array<double, band>& row(BasisIndex ket) const { return rows_[flat(ket.j, ket.m)]; }

 private:
  static std::size_t flat(int j, int m) { return static_cast<std::size_t>(j * j + (m + j)); }

  Axis axis_;
  int j_max_;
  std::vector<std::array<double, band>> rows_;
};

inline CouplingTable cos2_elements(Axis axis, int j_max) { return CouplingTable(axis, j_max); }

/// The three tables x, y, z built to a common j_max.
struct CouplingTables {
  CouplingTable x;
  CouplingTable y;
  CouplingTable z;

  explicit CouplingTables(int j_max)
      : x(Axis::x, j_max), y(Axis::y, j_max), z(Axis::z, j_max) {}

  const CouplingTable& operator[](Axis a) const {
    return a == Axis::x ? x : (a == Axis::y ? y : z);
  }
  int j_max() const { return z.j_max(); }
};

}  // namespace ffalign
