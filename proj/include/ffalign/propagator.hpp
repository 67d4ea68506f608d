#pragma once

// Rigid-rotor wavepacket propagation through an elliptically polarized,
// cycle-averaged pulse:
//
//   i dc/dt = [B J(J+1) - U_peak Lambda^2(t) W] c,
//   W = (1 - 2a^2) cos^2(theta_y) + a^2 (1 - cos^2(theta_z))
//     = a^2 cos^2(theta_x) + b^2 cos^2(theta_y).
//
// The pulse window is integrated in the interaction picture of B J(J+1)
// with DOP853; after the window every amplitude only acquires the phase
// exp(-i B J(J+1) t), so observables are kept as a FieldFreeSeries.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <vector>

#include "ffalign/angular.hpp"
#include "ffalign/dop853.hpp"
#include "ffalign/trace.hpp"
#include "ffalign/units.hpp"

namespace ffalign {

using cplx = std::complex<double>;

/// Rectangular window of the conserved (J-parity, M-parity) block of an
/// initial state: J in [j_lo, j_hi], M in [m_lo, m_hi], |M| <= J.
class BlockBasis {
 public:
  BlockBasis() = default;
  BlockBasis(BasisIndex initial, int j_lo, int j_hi, int m_lo, int m_hi)
      : initial_(initial) {
    const int jp = mod2(initial.j);
    const int mp = mod2(initial.m);
    j_lo_ = std::max(j_lo + mod2(j_lo - jp), jp);
    j_hi_ = j_hi - mod2(j_hi - jp);
    m_lo_ = std::max(m_lo + mod2(m_lo - mp), -j_hi_ + mod2(-j_hi_ - mp));
    m_hi_ = std::min(m_hi - mod2(m_hi - mp), j_hi_ - mod2(j_hi_ - mp));
    n_j_ = (j_hi_ - j_lo_) / 2 + 1;
    n_m_ = (m_hi_ - m_lo_) / 2 + 1;
    lookup_.assign(static_cast<std::size_t>(n_j_ * n_m_), -1);
    for (int j = j_lo_; j <= j_hi_; j += 2) {
      for (int m = m_lo_; m <= m_hi_; m += 2) {
        if (std::abs(m) > j) continue;
        lookup_[cell(j, m)] = static_cast<int>(states_.size());
        states_.push_back({j, m});
      }
    }
    if (index(initial) < 0) throw std::invalid_argument("BlockBasis: initial state outside window");
  }

  /// Full block up to j_max (every M of the right parity).
  static BlockBasis full(BasisIndex initial, int j_max) {
    return BlockBasis(initial, 0, j_max, -j_max, j_max);
  }

  std::size_t size() const { return states_.size(); }
  const std::vector<BasisIndex>& states() const { return states_; }
  const BasisIndex& operator[](std::size_t i) const { return states_[i]; }
  BasisIndex initial() const { return initial_; }
  int j_lo() const { return j_lo_; }
  int j_hi() const { return j_hi_; }
  int m_lo() const { return m_lo_; }
  int m_hi() const { return m_hi_; }

  int index(BasisIndex s) const {
    if (s.j < j_lo_ || s.j > j_hi_ || s.m < m_lo_ || s.m > m_hi_) return -1;
    if (mod2(s.j - j_lo_) != 0 || mod2(s.m - m_lo_) != 0) return -1;
    return lookup_[cell(s.j, s.m)];
  }

  /// Whether states exist in the full parity block beyond each window edge.
  bool truncated_below() const {
    int min_abs_m = (m_lo_ <= 0 && m_hi_ >= 0) ? mod2(m_lo_) : std::min(std::abs(m_lo_), std::abs(m_hi_));
    const int jp = mod2(initial_.j);
    const int smallest = min_abs_m + mod2(min_abs_m - jp);
    return j_lo_ > smallest;
  }
  // A single-M window means M is conserved, not cut.
  bool truncated_m_low() const { return m_hi_ > m_lo_ && m_lo_ - 2 >= -j_hi_; }
  bool truncated_m_high() const { return m_hi_ > m_lo_ && m_hi_ + 2 <= j_hi_; }

  /// Population in the outer two shells at every truncated edge (top J
  /// shells always count).
  double edge_population(const std::vector<cplx>& c) const {
    const bool below = truncated_below();
    const bool mlo = truncated_m_low();
    const bool mhi = truncated_m_high();
    double pop = 0.0;
    for (std::size_t i = 0; i < states_.size(); ++i) {
      const auto& s = states_[i];
      const bool edge = s.j >= j_hi_ - 2 || (below && s.j <= j_lo_ + 2) ||
                        (mlo && s.m <= m_lo_ + 2) || (mhi && s.m >= m_hi_ - 2);
      if (edge) pop += std::norm(c[i]);
    }
    return pop;
  }

 private:
  static int mod2(int v) { return ((v % 2) + 2) % 2; }
  std::size_t cell(int j, int m) const {
    return static_cast<std::size_t>(((j - j_lo_) / 2) * n_m_ + (m - m_lo_) / 2);
  }

  BasisIndex initial_;
  int j_lo_ = 0, j_hi_ = 0, m_lo_ = 0, m_hi_ = 0;
  int n_j_ = 0, n_m_ = 0;
  std::vector<int> lookup_;
  std::vector<BasisIndex> states_;
};

/// Real symmetric sparse operator restricted to a block. Every row holds
/// at most nine couplings (dJ, dM in {-2, 0, 2}); rows are padded to a fixed
/// width with zero entries pointing at the row itself.
struct BlockOperator {
  static constexpr int width = 9;
  std::vector<int> col;
  std::vector<double> val;

  std::size_t rows() const { return col.size() / width; }

  void apply(const cplx* in, cplx* out) const {
    const std::size_t n = rows();
    const int* c = col.data();
    const double* v = val.data();
    for (std::size_t r = 0; r < n; ++r, c += width, v += width) {
      double re = 0.0, im = 0.0;
      for (int k = 0; k < width; ++k) {
        re += v[k] * in[c[k]].real();
        im += v[k] * in[c[k]].imag();
      }
      out[r] = {re, im};
    }
  }

  /// Matrix element by (row, column) index; zero when absent.
  double at(std::size_t r, std::size_t c) const {
    for (int k = 0; k < width; ++k) {
      if (static_cast<std::size_t>(col[r * width + k]) == c && val[r * width + k] != 0.0) {
        return val[r * width + k];
      }
    }
    return 0.0;
  }
};

/// Linear combination sum_a coeff[a] * cos^2_a + constant * identity on a block.
inline BlockOperator assemble(const BlockBasis& basis, const CouplingTables& tables,
                              const std::array<double, 3>& coeff, double constant) {
  BlockOperator op;
  op.col.assign(basis.size() * BlockOperator::width, 0);
  op.val.assign(basis.size() * BlockOperator::width, 0.0);
  for (std::size_t r = 0; r < basis.size(); ++r) {
    const BasisIndex bra = basis[r];
    int k = 0;
    for (int dj = -2; dj <= 2; dj += 2) {
      for (int dm = -2; dm <= 2; dm += 2, ++k) {
        const std::size_t slot = r * BlockOperator::width + static_cast<std::size_t>(k);
        op.col[slot] = static_cast<int>(r);
        const BasisIndex ket{bra.j + dj, bra.m + dm};
        const int c = basis.index(ket);
        if (c < 0) continue;
        double v = (dj == 0 && dm == 0) ? constant : 0.0;
        for (int a = 0; a < 3; ++a) {
          if (coeff[static_cast<std::size_t>(a)] != 0.0) {
            v += coeff[static_cast<std::size_t>(a)] * tables[all_axes[static_cast<std::size_t>(a)]](bra, ket);
          }
        }
        op.col[slot] = c;
        op.val[slot] = v;
      }
    }
  }
  return op;
}

/// Algebraic route used to assemble the interaction W.
enum class PotentialForm {
  symmetric,  // (1 - 2a^2) cos^2_y + a^2 sin^2_z
  component,  // a^2 cos^2_x + b^2 cos^2_y
};

inline BlockOperator interaction_operator(const BlockBasis& basis, const CouplingTables& tables,
                                          double a2, PotentialForm form) {
  if (form == PotentialForm::symmetric) {
    return assemble(basis, tables, {0.0, 1.0 - 2.0 * a2, -a2}, a2);
  }
  return assemble(basis, tables, {a2, 1.0 - a2, 0.0}, 0.0);
}

/// Amplitudes over a block at a given time (Schroedinger picture).
struct Wavepacket {
  BlockBasis basis;
  std::vector<cplx> amplitudes;
  double time_ps = 0.0;

  double norm() const {
    double n = 0.0;
    for (const auto& c : amplitudes) n += std::norm(c);
    return n;
  }

  static Wavepacket eigenstate(const BlockBasis& basis, double t = 0.0) {
    Wavepacket wp{basis, std::vector<cplx>(basis.size(), 0.0), t};
    wp.amplitudes[static_cast<std::size_t>(basis.index(basis.initial()))] = 1.0;
    return wp;
  }
};

/// <psi|O|psi> / <psi|psi> for one axis.
inline double expectation_cos2(const Wavepacket& wp, const CouplingTables& tables, Axis axis) {
  const auto& table = tables[axis];
  double acc = 0.0;
  double nrm = 0.0;
  for (std::size_t r = 0; r < wp.basis.size(); ++r) {
    const BasisIndex bra = wp.basis[r];
    const cplx cb = wp.amplitudes[r];
    nrm += std::norm(cb);
    if (cb == 0.0) continue;
    for (int dj = -2; dj <= 2; dj += 2) {
      for (int dm = -2; dm <= 2; dm += 2) {
        if (axis == Axis::z && dm != 0) continue;
        const BasisIndex ket{bra.j + dj, bra.m + dm};
        const int c = wp.basis.index(ket);
        if (c < 0) continue;
        const cplx ck = wp.amplitudes[static_cast<std::size_t>(c)];
        acc += table(bra, ket) * (cb.real() * ck.real() + cb.imag() * ck.imag());
      }
    }
  }
  return acc / nrm;
}

/// Closed-form field-free series of a wavepacket whose Schroedinger-picture
/// amplitudes at time t are exp(-i B J(J+1) (t - t_ref)) * frame[k].
inline FieldFreeSeries field_free_series(const BlockBasis& basis, const std::vector<cplx>& frame,
                                         const CouplingTables& tables, double b_rad,
                                         double t_ref) {
  FieldFreeSeries s;
  s.b_rad_per_ps = b_rad;
  s.t_ref_ps = t_ref;
  s.resize(basis.j_hi() + 1);
  double nrm = 0.0;
  for (const auto& c : frame) nrm += std::norm(c);
  for (int a = 0; a < 3; ++a) {
    const auto& table = tables[all_axes[static_cast<std::size_t>(a)]];
    for (std::size_t r = 0; r < basis.size(); ++r) {
      const BasisIndex bra = basis[r];
      const cplx cb = std::conj(frame[r]);
      if (cb == 0.0) continue;
      for (int dj = -2; dj <= 0; dj += 2) {
        for (int dm = -2; dm <= 2; dm += 2) {
          const BasisIndex ket{bra.j + dj, bra.m + dm};
          const int c = basis.index(ket);
          if (c < 0) continue;
          const double o = table(bra, ket);
          if (o == 0.0) continue;
          const cplx term = o * cb * frame[static_cast<std::size_t>(c)];
          if (dj == 0) s.offset[static_cast<std::size_t>(a)] += term.real();
          else s.coherence[static_cast<std::size_t>(a)][static_cast<std::size_t>(ket.j)] += term;
        }
      }
    }
    s.offset[static_cast<std::size_t>(a)] /= nrm;
    for (auto& c : s.coherence[static_cast<std::size_t>(a)]) c /= nrm;
  }
  return s;
}

struct PropagationOptions {
  double tolerance = 3e-11;       // per-step relative and absolute
  double window_fwhm = 4.0;       // integrate over center +- window_fwhm * FWHM
  double tail_limit = 1e-8;       // edge-shell population allowed after the pulse
  double norm_limit = 1e-8;
  int initial_margin = 0;         // auto mode: first J/M half-width; 0 = from kick strength
  int max_margin = 256;
  PotentialForm form = PotentialForm::symmetric;
};

/// Result of propagating one member, before any time-grid evaluation.
struct MemberResult {
  BasisIndex initial;
  FieldFreeSeries series;           // valid for t >= window_end
  std::array<double, 3> static_values{};  // valid for t <= window_start
  std::vector<std::pair<std::size_t, std::array<double, 3>>> in_window;  // grid samples inside
  double window_start = 0.0;
  double window_end = 0.0;
  double tail_population = 0.0;
  double norm_error = 0.0;
  Wavepacket final_state;
  StepperStats stats;
};

struct PropagationResult {
  AlignmentTrace trace;
  Wavepacket final_amplitudes;
  double tail_population = 0.0;
  double norm_error = 0.0;
  FieldFreeSeries series;
  StepperStats stats;
};

inline cplx phase_of(double energy, double tau) { return std::polar(1.0, -energy * tau); }

namespace detail {

inline bool couples_m(double a2) { return (1.0 - 2.0 * a2) != 0.0; }

/// Integrate the pulse window on a fixed basis window.
inline MemberResult propagate_on(const InternalParams& p, const GridSpec& grid,
                                 const BlockBasis& basis, const CouplingTables& tables,
                                 const PropagationOptions& opt) {
  MemberResult res;
  res.initial = basis.initial();
  res.final_state = Wavepacket::eigenstate(basis);
  const double t0 = p.center_ps;
  const double half = opt.window_fwhm * p.fwhm_ps;
  res.window_start = t0 - half;
  res.window_end = t0 + half;

  for (Axis a : all_axes) {
    res.static_values[static_cast<std::size_t>(a)] = tables[a](basis.initial(), basis.initial());
  }

  std::vector<cplx> frame(basis.size(), 0.0);
  frame[static_cast<std::size_t>(basis.index(basis.initial()))] = 1.0;

  if (p.u_peak_rad_per_ps != 0.0) {
    const BlockOperator w = interaction_operator(basis, tables, p.a2, opt.form);
    const std::size_t n = basis.size();
    // Energies per state, grouped by J for the phase table.
    std::vector<int> j_slot(n);
    for (std::size_t i = 0; i < n; ++i) j_slot[i] = (basis[i].j - basis.j_lo()) / 2;
    const int n_j = (basis.j_hi() - basis.j_lo()) / 2 + 1;
    std::vector<double> energy(static_cast<std::size_t>(n_j));
    for (int k = 0; k < n_j; ++k) {
      const double j = basis.j_lo() + 2.0 * k;
      energy[static_cast<std::size_t>(k)] = p.b_rad_per_ps * j * (j + 1.0);
    }
    std::vector<cplx> phase(static_cast<std::size_t>(n_j));
    std::vector<cplx> work(n), wout(n);

    auto rhs = [&](double t, const std::vector<cplx>& y, std::vector<cplx>& dy) {
      const double tau = t - t0;
      const double drive = p.u_peak_rad_per_ps * envelope_squared(p.fwhm_ps, t0, t);
      for (int k = 0; k < n_j; ++k) {
        phase[static_cast<std::size_t>(k)] = std::polar(1.0, -energy[static_cast<std::size_t>(k)] * tau);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const cplx ph = phase[static_cast<std::size_t>(j_slot[i])];
        work[i] = {ph.real() * y[i].real() - ph.imag() * y[i].imag(),
                   ph.real() * y[i].imag() + ph.imag() * y[i].real()};
      }
      w.apply(work.data(), wout.data());
      // dy = i * drive * conj(phase) * wout
      for (std::size_t i = 0; i < n; ++i) {
        const cplx ph = phase[static_cast<std::size_t>(j_slot[i])];
        const double re = ph.real() * wout[i].real() + ph.imag() * wout[i].imag();
        const double im = ph.real() * wout[i].imag() - ph.imag() * wout[i].real();
        dy[i] = {-drive * im, drive * re};
      }
    };

    std::vector<double> sample_times;
    std::vector<std::size_t> sample_index;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double t = grid.time(k);
      if (t > res.window_start && t < res.window_end) {
        sample_times.push_back(t);
        sample_index.push_back(k);
      }
    }
    std::array<BlockOperator, 3> observables;
    if (!sample_times.empty()) {
      for (int a = 0; a < 3; ++a) {
        std::array<double, 3> coeff{};
        coeff[static_cast<std::size_t>(a)] = 1.0;
        observables[static_cast<std::size_t>(a)] = assemble(basis, tables, coeff, 0.0);
      }
    }
    std::vector<cplx> psi(n), o_psi(n);
    auto record = [&](std::size_t i, double t, const std::vector<cplx>& y) {
      double nrm = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        psi[r] = y[r] * phase_of(energy[static_cast<std::size_t>(j_slot[r])], t - t0);
        nrm += std::norm(y[r]);
      }
      std::array<double, 3> v{};
      for (int a = 0; a < 3; ++a) {
        observables[static_cast<std::size_t>(a)].apply(psi.data(), o_psi.data());
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          acc += psi[r].real() * o_psi[r].real() + psi[r].imag() * o_psi[r].imag();
        }
        v[static_cast<std::size_t>(a)] = acc / nrm;
      }
      res.in_window.push_back({sample_index[i], v});
    };

    Dop853<cplx> stepper(rhs, res.window_start, frame, opt.tolerance, opt.tolerance);
    stepper.advance_to(res.window_end, sample_times, record);
    frame = stepper.state();
    res.stats = stepper.stats();
  } else {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double t = grid.time(k);
      if (t > res.window_start && t < res.window_end) res.in_window.push_back({k, res.static_values});
    }
  }

  double nrm = 0.0;
  for (const auto& c : frame) nrm += std::norm(c);
  res.norm_error = std::abs(nrm - 1.0);
  res.tail_population = basis.edge_population(frame);
  res.series = field_free_series(basis, frame, tables, p.b_rad_per_ps, t0);
  res.final_state.time_ps = res.window_end;
  res.final_state.amplitudes = frame;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double j = basis[i].j;
    res.final_state.amplitudes[i] *= std::polar(1.0, -p.b_rad_per_ps * j * (j + 1.0) * (res.window_end - t0));
  }
  return res;
}

}  // namespace detail

/// Dimensionless kick sum U_peak * integral Lambda^2 dt (rad).
inline double kick_strength(const InternalParams& p) {
  return p.u_peak_rad_per_ps * p.fwhm_ps * std::sqrt(std::numbers::pi / (4.0 * std::numbers::ln2));
}

/// First auto-mode window half-width: 6 + 2P rounded up to even, at least 10.
inline int starting_margin(const InternalParams& p, const PropagationOptions& opt) {
  if (opt.initial_margin > 0) return opt.initial_margin;
  const int m = static_cast<int>(std::ceil(6.0 + 2.0 * kick_strength(p)));
  return std::max(10, m + (m % 2));
}

/// Largest J any window for `initial` may reach under the given options.
inline int required_table_j_max(const GridSpec& grid, BasisIndex initial,
                                const PropagationOptions& opt) {
  return grid.auto_j_max() ? initial.j + opt.max_margin + 2 : grid.j_max;
}

/// Propagate one initial |J0,M0> through the pulse. Returns the per-member
/// data used by the ensemble; throws PhysicsError if the basis is too small
/// or the norm drifts.
inline MemberResult propagate_member(const InternalParams& p, const GridSpec& grid,
                                     BasisIndex initial, const CouplingTables& tables,
                                     const PropagationOptions& opt = {}) {
  if (!initial.valid()) throw std::invalid_argument("propagate_member: invalid initial state");
  const bool m_moves = detail::couples_m(p.a2) && p.u_peak_rad_per_ps != 0.0;

  auto check_norm = [&](const MemberResult& r) {
    if (r.norm_error > opt.norm_limit) {
      std::ostringstream msg;
      msg << "norm drift " << r.norm_error << " for initial |" << initial.j << "," << initial.m << ">";
      throw PhysicsError(msg.str());
    }
  };

  if (!grid.auto_j_max()) {
    if (initial.j > grid.j_max) {
      throw ConfigError("grid.j_max = " + std::to_string(grid.j_max) +
                        " is below the populated J = " + std::to_string(initial.j));
    }
    if (grid.j_max > tables.j_max()) throw std::invalid_argument("coupling tables smaller than j_max");
    const int m_lo = m_moves ? -grid.j_max : initial.m;
    const int m_hi = m_moves ? grid.j_max : initial.m;
    BlockBasis basis(initial, 0, grid.j_max, m_lo, m_hi);
    auto r = detail::propagate_on(p, grid, basis, tables, opt);
    check_norm(r);
    if (r.tail_population >= opt.tail_limit && p.u_peak_rad_per_ps != 0.0) {
      std::ostringstream msg;
      msg << "basis truncation: population " << r.tail_population << " in the top J shells (j_max = "
          << grid.j_max << ", initial |" << initial.j << "," << initial.m << ">)";
      throw PhysicsError(msg.str());
    }
    return r;
  }

  for (int margin = starting_margin(p, opt);; margin *= 2) {
    const int j_hi = std::min(initial.j + margin, tables.j_max());
    const int j_lo = initial.j - margin;
    const int m_lo = m_moves ? initial.m - margin : initial.m;
    const int m_hi = m_moves ? initial.m + margin : initial.m;
    BlockBasis basis(initial, j_lo, j_hi, m_lo, m_hi);
    auto r = detail::propagate_on(p, grid, basis, tables, opt);
    if (p.u_peak_rad_per_ps == 0.0 || r.tail_population < opt.tail_limit) {
      check_norm(r);
      return r;
    }
    if (margin * 2 > opt.max_margin || j_hi == tables.j_max()) {
      std::ostringstream msg;
      msg << "basis truncation: edge population " << r.tail_population << " at margin " << margin
          << " for initial |" << initial.j << "," << initial.m << ">";
      throw PhysicsError(msg.str());
    }
  }
}

/// Per-member trace on the output grid.
inline AlignmentTrace evaluate_member(const MemberResult& r, const GridSpec& grid) {
  AlignmentTrace trace(grid);
  std::size_t next = 0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const double t = trace.t_ps[k];
    std::array<double, 3> v{};
    if (next < r.in_window.size() && r.in_window[next].first == k) {
      v = r.in_window[next++].second;
    } else if (t <= r.window_start) {
      v = r.static_values;
    } else {
      v = r.series.evaluate(t);
    }
    trace.cos2x[k] = v[0];
    trace.cos2y[k] = v[1];
    trace.cos2z[k] = v[2];
  }
  return trace;
}

inline PropagationResult propagate_pulse(const MoleculeSpec& mol, const PulseSpec& pulse,
                                         const GridSpec& grid, BasisIndex initial,
                                         const PropagationOptions& opt = {}) {
  grid.validate();
  const InternalParams p = internal_units(mol, pulse);
  const CouplingTables tables(required_table_j_max(grid, initial, opt));
  MemberResult r = propagate_member(p, grid, initial, tables, opt);
  PropagationResult out;
  out.trace = evaluate_member(r, grid);
  out.tail_population = r.tail_population;
  out.norm_error = r.norm_error;
  out.series = r.series;
  out.stats = r.stats;
  out.final_amplitudes = std::move(r.final_state);
  return out;
}

}  // namespace ffalign
