#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ffalign/propagator.hpp"
#include "ffalign/quadrature.hpp"

using namespace ffalign;

namespace {

GridSpec short_grid(double t_end = 12.0, double dt = 0.01) {
  GridSpec g;
  g.t_start_ps = -0.5;
  g.t_end_ps = t_end;
  g.dt_ps = dt;
  return g;
}

PulseSpec pulse_at(double tw_cm2, double a2) {
  PulseSpec p;
  p.peak_intensity_w_cm2 = tw_cm2 * 1e12;
  p.ellipticity_a2 = a2;
  return p;
}

cplx amplitude(const Wavepacket& wp, BasisIndex s) {
  const int i = wp.basis.index(s);
  return i < 0 ? cplx{} : wp.amplitudes[static_cast<std::size_t>(i)];
}

}  // namespace

TEST(Expectation, GroundStateIsIsotropic) {
  const CouplingTables t(4);
  const auto wp = Wavepacket::eigenstate(BlockBasis::full({0, 0}, 4));
  for (Axis a : all_axes) EXPECT_NEAR(expectation_cos2(wp, t, a), 1.0 / 3.0, 1e-15);
}

TEST(Expectation, OddStateAgainstOracle) {
  const CouplingTables t(5);
  const auto wp = Wavepacket::eigenstate(BlockBasis::full({1, 0}, 5));
  EXPECT_NEAR(expectation_cos2(wp, t, Axis::z), 3.0 / 5.0, 1e-15);
  EXPECT_NEAR(expectation_cos2(wp, t, Axis::z), quadrature_oracle(Axis::z, 1, 0, 1, 0), 1e-12);
}

TEST(Expectation, EqualPhaseSuperposition) {
  const CouplingTables t(4);
  auto wp = Wavepacket::eigenstate(BlockBasis::full({0, 0}, 4));
  wp.amplitudes.assign(wp.amplitudes.size(), 0.0);
  wp.amplitudes[static_cast<std::size_t>(wp.basis.index({0, 0}))] = 1.0 / std::sqrt(2.0);
  wp.amplitudes[static_cast<std::size_t>(wp.basis.index({2, 0}))] = 1.0 / std::sqrt(2.0);
  // (1/2)(<00|z|00> + <20|z|20>) + <20|z|00>, each term from the oracle
  const double expected = 0.5 * (quadrature_oracle(Axis::z, 0, 0, 0, 0) + quadrature_oracle(Axis::z, 2, 0, 2, 0)) +
                          quadrature_oracle(Axis::z, 0, 0, 2, 0);
  EXPECT_NEAR(expectation_cos2(wp, t, Axis::z), expected, 1e-12);
  EXPECT_NEAR(expected, 1.0 / 3.0 + 2.0 / (3.0 * std::sqrt(5.0)) + (11.0 / 21.0 - 1.0 / 3.0) / 2.0, 1e-12);
}

TEST(Propagation, ZeroFieldEigenstateIsStatic) {
  const auto r = propagate_pulse(co2_preset(), pulse_at(0.0, 0.2), short_grid(), {2, 0});
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    ASSERT_NEAR(r.trace.cos2z[k], 11.0 / 21.0, 1e-14);
  }
  EXPECT_EQ(r.norm_error, 0.0);
}

// First-order time-dependent perturbation theory from |0,0>:
//   c_f = i U <f|W|0> integral Lambda^2(t) exp(i w_f0 (t - t0)) dt
// with W = a^2 cos^2 x + b^2 cos^2 y; matrix elements from the quadrature oracle
// and the Gaussian Fourier integral in closed form.
TEST(Propagation, WeakPulseMatchesPerturbationTheory) {
  const double a2 = 0.25;
  const PulseSpec pulse = pulse_at(0.02, a2);
  const MoleculeSpec mol = co2_preset();
  const InternalParams p = internal_units(mol, pulse);
  const auto r = propagate_pulse(mol, pulse, short_grid(2.0), {0, 0});

  const double tau = p.fwhm_ps;
  const double w20 = 6.0 * p.b_rad_per_ps;
  const double integral = tau * std::sqrt(std::numbers::pi / (4.0 * std::numbers::ln2)) *
                          std::exp(-w20 * w20 * tau * tau / (16.0 * std::numbers::ln2));
  ASSERT_LT(p.u_peak_rad_per_ps * integral, 0.01);

  const cplx c0 = amplitude(r.final_amplitudes, {0, 0});
  const double t_end = r.final_amplitudes.time_ps;
  double largest = 0.0;
  for (BasisIndex f : {BasisIndex{2, 0}, BasisIndex{2, 2}, BasisIndex{2, -2}}) {
    const double w = a2 * quadrature_oracle(Axis::x, 0, 0, f.j, f.m) + (1 - a2) * quadrature_oracle(Axis::y, 0, 0, f.j, f.m);
    const cplx expected = cplx(0.0, p.u_peak_rad_per_ps * w * integral);
    // undo the free phase accumulated since the pulse centre, relative to |0,0>
    const cplx got = amplitude(r.final_amplitudes, f) * std::polar(1.0, w20 * (t_end - p.center_ps)) / (c0 / std::abs(c0));
    EXPECT_NEAR(std::abs(got), std::abs(expected), 0.01 * std::abs(expected)) << f.j << "," << f.m;
    EXPECT_NEAR(std::abs(got - expected), 0.0, 0.01 * std::abs(expected)) << f.j << "," << f.m;
    largest = std::max(largest, std::abs(expected));
  }
  // Nothing else is populated at first order.
  const auto& wp = r.final_amplitudes;
  for (std::size_t i = 0; i < wp.basis.size(); ++i) {
    const BasisIndex s = wp.basis[i];
    if (s.j == 0 || s.j == 2) continue;
    EXPECT_LT(std::abs(wp.amplitudes[i]), 0.01 * largest) << s.j << "," << s.m;
  }
}

TEST(Propagation, PotentialFormsAgree) {
  const MoleculeSpec mol = co2_preset();
  const PulseSpec pulse = pulse_at(20.0, 0.25);
  PropagationOptions sym, comp;
  comp.form = PotentialForm::component;
  for (BasisIndex init : {BasisIndex{0, 0}, BasisIndex{4, 2}, BasisIndex{7, -3}}) {
    const auto a = propagate_pulse(mol, pulse, short_grid(), init, sym);
    const auto b = propagate_pulse(mol, pulse, short_grid(), init, comp);
    for (Axis ax : all_axes) {
      for (std::size_t k = 0; k < a.trace.size(); ++k) {
        ASSERT_NEAR(a.trace[ax][k], b.trace[ax][k], 1e-10) << to_string(ax) << " t=" << a.trace.t_ps[k];
      }
    }
  }
}

TEST(Propagation, InvariantsForSeveralStates) {
  const MoleculeSpec mol = co2_preset();
  for (double a2 : {0.0, 0.25, 1.0 / 3.0, 0.5}) {
    for (BasisIndex init : {BasisIndex{0, 0}, BasisIndex{6, 2}, BasisIndex{12, -12}}) {
      const auto r = propagate_pulse(mol, pulse_at(25.0, a2), short_grid(), init);
      EXPECT_LT(r.norm_error, 1e-8);
      EXPECT_LT(r.tail_population, 1e-8);
      for (std::size_t k = 0; k < r.trace.size(); ++k) {
        const double s = r.trace.cos2x[k] + r.trace.cos2y[k] + r.trace.cos2z[k];
        ASSERT_NEAR(s, 1.0, 1e-10);
        for (Axis ax : all_axes) {
          ASSERT_GE(r.trace[ax][k], 0.0);
          ASSERT_LE(r.trace[ax][k], 1.0);
        }
      }
      if (a2 == 0.5) {
        for (std::size_t k = 0; k < r.trace.size(); ++k) ASSERT_NEAR(r.trace.cos2x[k], r.trace.cos2y[k], 1e-10);
      }
    }
  }
}

TEST(Propagation, PostPulseTraceIsRevivalPeriodic) {
  const MoleculeSpec mol = co2_preset();
  const auto r = propagate_pulse(mol, pulse_at(25.0, 0.25), short_grid(), {4, 2});
  const double t_rev = internal_units(mol, PulseSpec{}).revival_period_ps();
  for (double t = 0.5; t < 12.0; t += 0.37) {
    const auto a = r.series.evaluate(t);
    const auto b = r.series.evaluate(t + t_rev);
    const auto c = r.series.evaluate(t + 3 * t_rev);
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-9);
      EXPECT_NEAR(a[i], c[i], 1e-9);
    }
  }
}

// Free evolution integrated numerically (DOP853 on i dc/dt = B J(J+1) c) over
// one revival against the closed-form series.
TEST(Propagation, AnalyticFreeEvolutionMatchesIntegration) {
  const MoleculeSpec mol = co2_preset();
  const PulseSpec pulse = pulse_at(25.0, 0.25);
  const InternalParams p = internal_units(mol, pulse);
  const auto r = propagate_pulse(mol, pulse, short_grid(), {2, 0});
  const Wavepacket& wp0 = r.final_amplitudes;
  const CouplingTables tables(wp0.basis.j_hi() + 2);

  std::vector<double> energy(wp0.basis.size());
  for (std::size_t i = 0; i < energy.size(); ++i) {
    const double j = wp0.basis[i].j;
    energy[i] = p.b_rad_per_ps * j * (j + 1.0);
  }
  auto rhs = [&](double, const std::vector<cplx>& y, std::vector<cplx>& dy) {
    for (std::size_t i = 0; i < y.size(); ++i) dy[i] = cplx(0.0, -energy[i]) * y[i];
  };
  Dop853<cplx> stepper(rhs, wp0.time_ps, wp0.amplitudes, 1e-13, 1e-13);
  const double t_rev = p.revival_period_ps();
  double worst = 0.0;
  for (int k = 1; k <= 16; ++k) {
    const double t = wp0.time_ps + t_rev * k / 16.0;
    stepper.advance_to(t);
    Wavepacket wp{wp0.basis, stepper.state(), t};
    const auto series = r.series.evaluate(t);
    for (Axis a : all_axes) {
      worst = std::max(worst, std::abs(expectation_cos2(wp, tables, a) - series[static_cast<std::size_t>(a)]));
    }
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Propagation, MirroredMagneticStatesGiveEqualTraces) {
  const MoleculeSpec mol = co2_preset();
  for (double a2 : {0.0, 0.2}) {
    const auto a = propagate_pulse(mol, pulse_at(25.0, a2), short_grid(), {6, 4});
    const auto b = propagate_pulse(mol, pulse_at(25.0, a2), short_grid(), {6, -4});
    for (Axis ax : all_axes) {
      for (std::size_t k = 0; k < a.trace.size(); ++k) ASSERT_NEAR(a.trace[ax][k], b.trace[ax][k], 1e-12);
    }
  }
}

TEST(Propagation, FixedBasisTruncationIsReported) {
  GridSpec g = short_grid();
  g.j_max = 6;
  EXPECT_THROW(propagate_pulse(co2_preset(), pulse_at(25.0, 0.0), g, {0, 0}), PhysicsError);
  EXPECT_THROW(propagate_pulse(co2_preset(), pulse_at(25.0, 0.0), g, {8, 0}), ConfigError);
  // A weak pulse fits comfortably.
  g.j_max = 12;
  EXPECT_NO_THROW(propagate_pulse(co2_preset(), pulse_at(0.1, 0.0), g, {0, 0}));
}

TEST(Propagation, FixedAndAutoBasesAgree) {
  GridSpec fixed = short_grid();
  fixed.j_max = 60;
  const auto a = propagate_pulse(co2_preset(), pulse_at(25.0, 0.25), fixed, {2, 2});
  const auto b = propagate_pulse(co2_preset(), pulse_at(25.0, 0.25), short_grid(), {2, 2});
  for (Axis ax : all_axes) {
    for (std::size_t k = 0; k < a.trace.size(); ++k) ASSERT_NEAR(a.trace[ax][k], b.trace[ax][k], 1e-8);
  }
}

TEST(Operators, BuildHamiltonianLimits) {
  const CouplingTables t(10);
  const BlockBasis basis = BlockBasis::full({2, 0}, 10);
  // circular: only cos^2 z couples, so no dM != 0 entries
  const auto circ = interaction_operator(basis, t, 0.5, PotentialForm::symmetric);
  for (std::size_t r = 0; r < basis.size(); ++r) {
    for (std::size_t c = 0; c < basis.size(); ++c) {
      if (basis[r].m != basis[c].m) {
        ASSERT_EQ(circ.at(r, c), 0.0);
      }
    }
  }
  // linear: W = cos^2 y exactly
  const auto lin = interaction_operator(basis, t, 0.0, PotentialForm::symmetric);
  for (std::size_t r = 0; r < basis.size(); ++r) {
    for (std::size_t c = 0; c < basis.size(); ++c) ASSERT_EQ(lin.at(r, c), t.y(basis[r], basis[c]));
  }
  // the two forms agree entrywise
  const auto s = interaction_operator(basis, t, 0.3, PotentialForm::symmetric);
  const auto k = interaction_operator(basis, t, 0.3, PotentialForm::component);
  for (std::size_t r = 0; r < basis.size(); ++r) {
    for (std::size_t c = 0; c < basis.size(); ++c) ASSERT_NEAR(s.at(r, c), k.at(r, c), 1e-15);
  }
}
