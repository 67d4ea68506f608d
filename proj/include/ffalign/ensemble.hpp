#pragma once

// Boltzmann ensemble of initial |J0,M0> states with nuclear-spin weights,
// and the thermal average of their alignment traces.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "ffalign/propagator.hpp"
#include "ffalign/trace.hpp"
#include "ffalign/units.hpp"

namespace ffalign {

struct EnsembleMember {
  BasisIndex initial;
  double weight = 0.0;
};

/// Rotational energy E_J / k_B T for the rigid rotor.
inline double reduced_energy(const MoleculeSpec& mol, double kelvin, int j) {
  const double e_j = constants::h_planck * constants::c_cm_per_s * mol.rotational_constant_cm * j * (j + 1.0);
  return e_j / (constants::k_boltzmann * kelvin);
}

/// Initial states in ascending (J0, M0) order. Levels are kept until the
/// population of every excluded level sums to less than `population_cutoff`;
/// the kept weights are renormalized to one.
inline std::vector<EnsembleMember> boltzmann_ensemble(const MoleculeSpec& mol,
                                                      const TemperatureSpec& temperature,
                                                      double population_cutoff = 1e-6) {
  mol.validate();
  temperature.validate();
  if (!(population_cutoff > 0.0 && population_cutoff <= 1e-4)) {
    throw ConfigError("ensemble: population cutoff must lie in (0, 1e-4]");
  }
  std::vector<EnsembleMember> members;
  if (temperature.kelvin == 0.0) {
    const int j0 = mol.spin_weight_even_j > 0.0 ? 0 : 1;
    for (int m = -j0; m <= j0; ++m) members.push_back({{j0, m}, 1.0 / (2 * j0 + 1)});
    return members;
  }

  // Level populations g_J (2J+1) exp(-E_J/kT), summed until negligible.
  std::vector<double> level;
  double z = 0.0;
  for (int j = 0;; ++j) {
    const double x = reduced_energy(mol, temperature.kelvin, j);
    const double p = mol.spin_weight(j) * (2.0 * j + 1.0) * std::exp(-x);
    level.push_back(p);
    z += p;
    if (x > 800.0 || (x > 50.0 && p < 1e-30 * z)) break;
  }
  // Smallest J_cut such that sum_{J > J_cut} p_J / Z < cutoff.
  int j_cut = static_cast<int>(level.size()) - 1;
  double excluded = 0.0;
  while (j_cut > 0 && (excluded + level[static_cast<std::size_t>(j_cut)]) / z < population_cutoff) {
    excluded += level[static_cast<std::size_t>(j_cut)];
    --j_cut;
  }
  const double kept = z - excluded;
  for (int j = 0; j <= j_cut; ++j) {
    const double p = level[static_cast<std::size_t>(j)];
    if (p <= 0.0) continue;
    const double per_m = p / (2.0 * j + 1.0) / kept;
    for (int m = -j; m <= j; ++m) members.push_back({{j, m}, per_m});
  }
  return members;
}

inline int max_j(const std::vector<EnsembleMember>& members) {
  int j = 0;
  for (const auto& m : members) j = std::max(j, m.initial.j);
  return j;
}

/// Weighted sample-wise mean of per-member traces.
inline AlignmentTrace thermal_average(const std::vector<EnsembleMember>& members,
                                      const std::vector<AlignmentTrace>& traces) {
  if (members.size() != traces.size() || traces.empty()) {
    throw std::invalid_argument("thermal_average: one trace per member required");
  }
  AlignmentTrace out = traces.front();
  for (Axis a : all_axes) std::fill(out[a].begin(), out[a].end(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (!traces[i].same_grid(out)) throw std::invalid_argument("thermal_average: grid mismatch");
    const double w = members[i].weight;
    total += w;
    for (Axis a : all_axes) {
      auto& dst = out[a];
      const auto& src = traces[i][a];
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += w * src[k];
    }
  }
  for (Axis a : all_axes) {
    for (auto& v : out[a]) v /= total;
  }
  return out;
}

struct EnsembleOptions {
  double population_cutoff = 1e-6;
  unsigned threads = 0;  // 0: hardware concurrency
  bool fold_m = true;    // compute M0 >= 0 only; -M0 mirrors M0
  PropagationOptions propagation;
};

struct EnsembleResult {
  AlignmentTrace trace;
  FieldFreeSeries series;  // thermal post-pulse series
  std::size_t member_count = 0;
  std::size_t propagated = 0;
  double max_tail_population = 0.0;
  double max_norm_error = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
};

namespace detail {

struct MemberSummary {
  FieldFreeSeries series;
  std::array<double, 3> static_values{};
  std::vector<std::pair<std::size_t, std::array<double, 3>>> in_window;
  double tail = 0.0;
  double norm_error = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
};

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Propagates every member (in parallel) and reduces in ascending (J0, M0)
/// order, so the result does not depend on scheduling.
inline EnsembleResult simulate_ensemble(const MoleculeSpec& mol, const PulseSpec& pulse,
                                        const TemperatureSpec& temperature, const GridSpec& grid,
                                        const EnsembleOptions& opt = {}) {
  grid.validate();
  const InternalParams p = internal_units(mol, pulse);
  const auto members = boltzmann_ensemble(mol, temperature, opt.population_cutoff);

  struct Job {
    BasisIndex initial;
    double weight;
  };
  std::vector<Job> jobs;
  for (const auto& m : members) {
    if (opt.fold_m && m.initial.m < 0) continue;
    const double w = (opt.fold_m && m.initial.m > 0) ? 2.0 * m.weight : m.weight;
    jobs.push_back({m.initial, w});
  }

  int table_j = 2;
  for (const auto& j : jobs) {
    table_j = std::max(table_j, required_table_j_max(grid, j.initial, opt.propagation));
  }
  if (!grid.auto_j_max() && max_j(members) > grid.j_max) {
    throw ConfigError("grid.j_max = " + std::to_string(grid.j_max) +
                      " is below the highest thermally populated J = " + std::to_string(max_j(members)));
  }
  const CouplingTables tables(table_j);

  std::vector<detail::MemberSummary> summaries(jobs.size());
  detail::parallel_for(jobs.size(), opt.threads, [&](std::size_t i) {
    MemberResult r = propagate_member(p, grid, jobs[i].initial, tables, opt.propagation);
    auto& s = summaries[i];
    s.series = std::move(r.series);
    s.static_values = r.static_values;
    s.in_window = std::move(r.in_window);
    s.tail = r.tail_population;
    s.norm_error = r.norm_error;
    s.window_start = r.window_start;
    s.window_end = r.window_end;
  });

  EnsembleResult out;
  out.member_count = members.size();
  out.propagated = jobs.size();
  out.series.b_rad_per_ps = p.b_rad_per_ps;
  out.series.t_ref_ps = p.center_ps;
  std::array<double, 3> static_sum{};
  std::map<std::size_t, std::array<double, 3>> window_sum;
  double total = 0.0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const double w = jobs[i].weight;
    const auto& s = summaries[i];
    total += w;
    out.series.accumulate(s.series, w);
    for (int a = 0; a < 3; ++a) static_sum[a] += w * s.static_values[a];
    for (const auto& [k, v] : s.in_window) {
      auto& acc = window_sum[k];
      for (int a = 0; a < 3; ++a) acc[a] += w * v[a];
    }
    out.max_tail_population = std::max(out.max_tail_population, s.tail);
    out.max_norm_error = std::max(out.max_norm_error, s.norm_error);
    out.window_start = s.window_start;
    out.window_end = s.window_end;
  }
  // Weights already sum to one; dividing keeps folding round-off out.
  for (auto& v : static_sum) v /= total;
  for (auto& [k, v] : window_sum) {
    for (auto& x : v) x /= total;
  }
  for (int a = 0; a < 3; ++a) {
    out.series.offset[a] /= total;
    for (auto& c : out.series.coherence[a]) c /= total;
  }

  out.trace = AlignmentTrace(grid);
  for (std::size_t k = 0; k < out.trace.size(); ++k) {
    const double t = out.trace.t_ps[k];
    std::array<double, 3> v{};
    if (auto it = window_sum.find(k); it != window_sum.end()) {
      v = it->second;
    } else if (t <= out.window_start) {
      v = static_sum;
    } else {
      v = out.series.evaluate(t);
    }
    out.trace.cos2x[k] = v[0];
    out.trace.cos2y[k] = v[1];
    out.trace.cos2z[k] = v[2];
  }
  return out;
}

}  // namespace ffalign
