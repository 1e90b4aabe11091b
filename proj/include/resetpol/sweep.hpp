// Steady-state spectra over a swept control parameter and the features read
// off them: sign reversals of <2I_z>, <2I_x> troughs, linewidths.

#pragma once

#include "resetpol/steady.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace resetpol {

enum class SweepParameter { larmor, rabi, reset_time };

enum class ChannelChoice {
  automatic,  // Lindblad when any dephasing time is finite, unitary otherwise
  unitary,
  lindblad,
};

/// Grid of `steps` evenly spaced values in [start, stop]. Frequencies in
/// rad/s, reset times in s.
struct SweepSpec {
  SweepParameter parameter = SweepParameter::larmor;
  double start = 0.0;
  double stop = 0.0;
  std::size_t steps = 2;
  ChannelChoice channel = ChannelChoice::automatic;
};

struct SpectrumRow {
  double param = 0.0;
  std::vector<Polarisation> nuclei;
  double gap = 0.0;
  bool degenerate = false;  // fixed point not unique; observables from the fully mixed start
};

struct Spectrum {
  SweepParameter parameter = SweepParameter::larmor;
  SystemSpec system;
  DriveSpec drive;
  std::vector<SpectrumRow> rows;  // ascending in param

  [[nodiscard]] double t_reset_of(const SpectrumRow& row) const {
    return parameter == SweepParameter::reset_time ? row.param : drive.t_reset;
  }
};

/// A feature needs more grid points or a wider window; `suggested_step` is
/// the grid spacing that would resolve it (0 when the window is the problem).
class ResolutionError : public NumericalError {
 public:
  ResolutionError(const std::string& what, double suggested_step)
      : NumericalError(what), suggested_step_(suggested_step) {}
  [[nodiscard]] double suggested_step() const { return suggested_step_; }

 private:
  double suggested_step_;
};

inline void validate(const SweepSpec& sweep) {
  if (sweep.steps < 2) throw PreconditionError("sweep: steps must be >= 2");
  if (!std::isfinite(sweep.start) || !std::isfinite(sweep.stop) || !(sweep.start < sweep.stop)) {
    throw PreconditionError("sweep: start must be < stop");
  }
  if (sweep.parameter == SweepParameter::reset_time && !(sweep.start > 0.0)) {
    throw PreconditionError("sweep: reset times must be > 0");
  }
  if (sweep.parameter == SweepParameter::rabi && sweep.start < 0.0) {
    throw PreconditionError("sweep: Rabi frequencies must be >= 0");
  }
}

inline std::vector<double> sweep_grid(const SweepSpec& sweep) {
  std::vector<double> grid(sweep.steps);
  const double span = sweep.stop - sweep.start;
  const auto last = static_cast<double>(sweep.steps - 1);
  for (std::size_t k = 0; k < sweep.steps; ++k) {
    grid[k] = sweep.start + span * (static_cast<double>(k) / last);
  }
  grid.back() = sweep.stop;
  return grid;
}

/// Moves nucleus 0's effective Larmor frequency to `larmor`; the other
/// nuclei keep their offsets from it.
inline SystemSpec with_larmor(const SystemSpec& system, double larmor) {
  SystemSpec out = system;
  const double ref = larmor_of(system, 0);
  for (std::size_t i = 0; i < system.nuclei.size(); ++i) {
    out.nuclei[i].larmor_override = larmor + (larmor_of(system, i) - ref);
  }
  return out;
}

inline QuantumChannel build_channel(const SystemSpec& system, const DriveSpec& drive,
                                    ChannelChoice choice) {
  switch (choice) {
    case ChannelChoice::unitary:
      return unitary_cycle_channel(system, drive);
    case ChannelChoice::lindblad:
      return lindblad_cycle_channel(system, drive);
    case ChannelChoice::automatic:
      break;
  }
  return cycle_channel(system, drive);
}

/// Steady-state observables at one operating point. Degenerate fixed points
/// are flagged and evaluated from the fully mixed initial state.
inline SpectrumRow steady_row(const SystemSpec& system, const DriveSpec& drive,
                              ChannelChoice choice, double param) {
  const QuantumChannel ch = build_channel(system, drive, choice);
  SpectrumRow row;
  row.param = param;
  try {
    const auto ss = steady_state(ch);
    row.nuclei = ss.nuclei;
    row.gap = ss.gap;
  } catch (const DegenerateFixedPoint&) {
    row.nuclei = observables(steady_state_from_mixed(ch));
    row.gap = 0.0;
    row.degenerate = true;
  }
  return row;
}

/// Calls fn(k) for k in [0, n) on up to `threads` workers. Work is handed out
/// by index, so callers that write only slot k get schedule-independent results.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < n; k = next++) fn(k);
    });
  }
  for (auto& t : pool) t.join();
}

/// Evaluates every grid point, on up to `threads` workers. Each point is
/// computed independently and stored at its own index, so the result does
/// not depend on the worker count.
inline Spectrum run_sweep(const SystemSpec& system, const DriveSpec& drive, const SweepSpec& sweep,
                          unsigned threads = 1) {
  validate(system);
  validate(drive);
  validate(sweep);
  const std::vector<double> grid = sweep_grid(sweep);

  Spectrum out{sweep.parameter, system, drive, std::vector<SpectrumRow>(grid.size())};
  std::vector<std::exception_ptr> errors(grid.size());

  auto point = [&](std::size_t k) {
    SystemSpec s = system;
    DriveSpec d = drive;
    switch (sweep.parameter) {
      case SweepParameter::larmor:
        s = with_larmor(system, grid[k]);
        break;
      case SweepParameter::rabi:
        d.omega = grid[k];
        break;
      case SweepParameter::reset_time:
        d.t_reset = grid[k];
        break;
    }
    try {
      out.rows[k] = steady_row(s, d, sweep.channel, grid[k]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };

  parallel_for(grid.size(), threads, point);
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

namespace detail {

inline std::vector<SpectrumRow> sorted_rows(const Spectrum& spectrum) {
  std::vector<SpectrumRow> rows = spectrum.rows;
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SpectrumRow& a, const SpectrumRow& b) { return a.param < b.param; });
  return rows;
}

inline void require_nucleus(const Spectrum& spectrum, std::size_t nucleus) {
  if (spectrum.rows.size() < 2) throw PreconditionError("spectrum: at least two rows required");
  for (const auto& r : spectrum.rows) {
    if (nucleus >= r.nuclei.size()) throw PreconditionError("spectrum: nucleus index out of range");
  }
}

inline double z_of(const SpectrumRow& r, std::size_t i) { return r.nuclei[i].z; }
inline double x_of(const SpectrumRow& r, std::size_t i) { return r.nuclei[i].x; }

/// Vertex of the parabola through three points; falls back to the middle one.
inline double parabolic_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double d0 = (y1 - y0) / (x1 - x0);
  const double d1 = (y2 - y1) / (x2 - x1);
  const double curv = (d1 - d0) / (x2 - x0);
  if (curv == 0.0) return x1;
  const double v = 0.5 * (x0 + x1) - d0 / (2.0 * curv);
  return std::clamp(v, x0, x2);
}

}  // namespace detail

/// Sign change of <2I_z>, located by linear interpolation between rows.
struct Crossing {
  double param = 0.0;
  double slope = 0.0;  // d<2I_z>/dparam between the bracketing rows
};

/// Every sign change of nucleus `nucleus`'s <2I_z>, in ascending order.
/// A row that is exactly zero counts once, as the crossing itself.
inline std::vector<Crossing> find_reversals(const Spectrum& spectrum, std::size_t nucleus = 0) {
  detail::require_nucleus(spectrum, nucleus);
  const auto rows = detail::sorted_rows(spectrum);
  std::vector<Crossing> out;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const double x0 = rows[k].param, x1 = rows[k + 1].param;
    const double z0 = detail::z_of(rows[k], nucleus), z1 = detail::z_of(rows[k + 1], nucleus);
    if ((z0 < 0.0) == (z1 < 0.0)) continue;
    if (z1 == 0.0) continue;  // counted when this row is the left end
    const double x = z0 == 0.0 ? x0 : x0 + (x1 - x0) * (z0 / (z0 - z1));
    out.push_back({x, (z1 - z0) / (x1 - x0)});
  }
  return out;
}

/// Crossing with the largest |slope|; throws when there is none.
inline Crossing steepest_reversal(const std::vector<Crossing>& crossings) {
  if (crossings.empty()) throw NumericalError("no sign reversal in the spectrum");
  return *std::max_element(crossings.begin(), crossings.end(), [](const Crossing& a, const Crossing& b) {
    return std::abs(a.slope) < std::abs(b.slope);
  });
}

/// Crossings falling from positive to negative with |slope| >= min_slope:
/// the sharp reversals of a Larmor sweep.
inline std::vector<Crossing> sharp_reversals(const std::vector<Crossing>& crossings,
                                             double min_slope) {
  std::vector<Crossing> out;
  for (const auto& c : crossings) {
    if (c.slope < 0.0 && -c.slope >= min_slope) out.push_back(c);
  }
  return out;
}

struct Trough {
  double param = 0.0;  // parabolic-refined position of the <2I_x> minimum
  double value = 0.0;  // <2I_x> at the nearest grid point
};

/// Local minima of <2I_x> that dip below zero, in ascending order.
inline std::vector<Trough> find_troughs(const Spectrum& spectrum, std::size_t nucleus = 0) {
  detail::require_nucleus(spectrum, nucleus);
  const auto rows = detail::sorted_rows(spectrum);
  std::vector<Trough> out;
  for (std::size_t k = 1; k + 1 < rows.size(); ++k) {
    const double a = detail::x_of(rows[k - 1], nucleus), b = detail::x_of(rows[k], nucleus),
                 c = detail::x_of(rows[k + 1], nucleus);
    if (b < 0.0 && b < a && b <= c) {
      out.push_back({detail::parabolic_vertex(rows[k - 1].param, a, rows[k].param, b,
                                              rows[k + 1].param, c),
                     b});
    }
  }
  return out;
}

struct LinewidthMeasurement {
  double peak_to_peak = 0.0;  // distance between the <2I_z> extrema flanking the reversal
  double z_extremum_low = 0.0;   // position of the extremum below the reversal
  double z_extremum_high = 0.0;  // position of the extremum above it
  double trough_param = 0.0;     // position of the <2I_x> minimum
  double trough_value = 0.0;
  double trough_fwhm = 0.0;  // full width at half minimum of the <2I_x> trough
};

/// Minimum number of grid intervals required between the two <2I_z> extrema.
inline constexpr std::size_t kMinPointsAcrossFeature = 8;

/// Widths of the feature around the reversal at `center` (a parameter value).
/// With `with_trough` false only the <2I_z> extrema are located and the
/// trough fields stay zero.
inline LinewidthMeasurement measure_linewidth(const Spectrum& spectrum, double center,
                                              std::size_t nucleus = 0, bool with_trough = true) {
  detail::require_nucleus(spectrum, nucleus);
  const auto rows = detail::sorted_rows(spectrum);
  const std::size_t n = rows.size();
  if (center < rows.front().param || center > rows.back().param) {
    throw ResolutionError("measure_linewidth: center lies outside the sweep window", 0.0);
  }
  auto z = [&](std::size_t k) { return detail::z_of(rows[k], nucleus); };
  auto x = [&](std::size_t k) { return detail::x_of(rows[k], nucleus); };
  auto p = [&](std::size_t k) { return rows[k].param; };

  // Bracketing rows: lo is the last row at or below center.
  std::size_t lo = 0;
  while (lo + 2 < n && p(lo + 1) <= center) ++lo;
  const std::size_t hi = lo + 1;

  // Walk away from the crossing while |<2I_z>| keeps growing with its sign.
  auto walk = [&](std::size_t start, int dir) {
    std::size_t k = start;
    const double sign = z(start) >= 0.0 ? 1.0 : -1.0;
    while (true) {
      if ((dir < 0 && k == 0) || (dir > 0 && k + 1 == n)) {
        throw ResolutionError("measure_linewidth: <2I_z> extremum not bracketed by the sweep", 0.0);
      }
      const std::size_t next = dir < 0 ? k - 1 : k + 1;
      if (sign * z(next) <= sign * z(k)) break;
      k = next;
    }
    return k;
  };
  const std::size_t k_low = walk(lo, -1);
  const std::size_t k_high = walk(hi, +1);
  const double step = (p(n - 1) - p(0)) / static_cast<double>(n - 1);

  auto refine = [&](std::size_t k, auto&& f) {
    if (k == 0 || k + 1 == n) return p(k);
    return detail::parabolic_vertex(p(k - 1), f(k - 1), p(k), f(k), p(k + 1), f(k + 1));
  };
  auto zf = [&](std::size_t k) { return z(k); };
  auto xf = [&](std::size_t k) { return x(k); };

  LinewidthMeasurement m;
  m.z_extremum_low = refine(k_low, zf);
  m.z_extremum_high = refine(k_high, zf);
  m.peak_to_peak = m.z_extremum_high - m.z_extremum_low;
  if (k_high - k_low < kMinPointsAcrossFeature) {
    throw ResolutionError("measure_linewidth: only " + std::to_string(k_high - k_low) +
                              " grid intervals across the feature",
                          m.peak_to_peak / static_cast<double>(kMinPointsAcrossFeature));
  }
  if (!with_trough) return m;

  // <2I_x> trough: descend from the nearer bracketing row.
  std::size_t kt = (center - p(lo) < p(hi) - center) ? lo : hi;
  while (true) {
    if (kt > 0 && x(kt - 1) < x(kt)) {
      --kt;
    } else if (kt + 1 < n && x(kt + 1) < x(kt)) {
      ++kt;
    } else {
      break;
    }
  }
  if (kt == 0 || kt + 1 == n) {
    throw ResolutionError("measure_linewidth: <2I_x> trough not bracketed by the sweep", 0.0);
  }
  m.trough_param = refine(kt, xf);
  m.trough_value = x(kt);
  if (!(m.trough_value < 0.0)) {
    throw ResolutionError("measure_linewidth: no negative <2I_x> trough near the reversal", 0.0);
  }
  const double half = 0.5 * m.trough_value;
  auto half_crossing = [&](int dir) {
    std::size_t k = kt;
    while (true) {
      if ((dir < 0 && k == 0) || (dir > 0 && k + 1 == n)) {
        throw ResolutionError("measure_linewidth: <2I_x> trough half-depth not reached", 0.0);
      }
      const std::size_t next = dir < 0 ? k - 1 : k + 1;
      if (x(next) >= half) {
        return p(k) + (p(next) - p(k)) * ((half - x(k)) / (x(next) - x(k)));
      }
      k = next;
    }
  };
  m.trough_fwhm = half_crossing(+1) - half_crossing(-1);
  if (m.trough_fwhm < static_cast<double>(kMinPointsAcrossFeature) * step * 0.5) {
    throw ResolutionError("measure_linewidth: <2I_x> trough under-resolved",
                          m.trough_fwhm / static_cast<double>(kMinPointsAcrossFeature));
  }
  return m;
}

struct SensitivityEstimate {
  double value = 0.0;             // Hz / sqrt(Hz)
  double slope_per_hz = 0.0;      // d<2I_z>/df at the feature, f in Hz
  double shots_per_second = 0.0;  // 1 / tau_converge at the feature
  double t2e_scaling = 0.0;       // 1/sqrt(T2e) in 1/sqrt(s); the claimed proportionality
};

/// Shot-noise frequency sensitivity of a Larmor or Rabi spectrum at
/// `center`: noise / (|slope| sqrt(shots per second)), with one shot per
/// convergence time. Throws NumericalError when the slope vanishes.
inline SensitivityEstimate sensitivity_estimate(const Spectrum& spectrum, double center,
                                                double readout_noise_per_shot, double t2e,
                                                std::size_t nucleus = 0) {
  detail::require_nucleus(spectrum, nucleus);
  if (spectrum.parameter == SweepParameter::reset_time) {
    throw PreconditionError("sensitivity_estimate: needs a frequency sweep");
  }
  if (!(readout_noise_per_shot >= 0.0) || !(t2e > 0.0)) {
    throw PreconditionError("sensitivity_estimate: noise must be >= 0 and t2e > 0");
  }
  const auto rows = detail::sorted_rows(spectrum);
  if (center < rows.front().param || center > rows.back().param) {
    throw PreconditionError("sensitivity_estimate: center outside the sweep window");
  }
  std::size_t lo = 0;
  while (lo + 2 < rows.size() && rows[lo + 1].param <= center) ++lo;
  const SpectrumRow& a = rows[lo];
  const SpectrumRow& b = rows[lo + 1];
  const double dp_hz = (b.param - a.param) / kTwoPi;
  const double slope = (detail::z_of(b, nucleus) - detail::z_of(a, nucleus)) / dp_hz;
  if (slope == 0.0) throw NumericalError("sensitivity_estimate: zero slope, sensitivity is infinite");
  const double w = (center - a.param) / (b.param - a.param);
  const double gap = (1.0 - w) * a.gap + w * b.gap;
  if (!(gap > 0.0)) throw NumericalError("sensitivity_estimate: no spectral gap at the feature");
  SensitivityEstimate e;
  e.slope_per_hz = slope;
  e.shots_per_second = gap / spectrum.t_reset_of(a);
  e.value = readout_noise_per_shot / (std::abs(slope) * std::sqrt(e.shots_per_second));
  e.t2e_scaling = 1.0 / std::sqrt(t2e);
  return e;
}

struct SpectrumFeatures {
  std::vector<Crossing> reversals;
  std::vector<Trough> troughs;
  std::optional<Crossing> steepest;
  std::optional<LinewidthMeasurement> linewidth;  // at the steepest reversal, when resolvable
  std::string linewidth_error;                    // why linewidth is absent
};

inline SpectrumFeatures extract_features(const Spectrum& spectrum, std::size_t nucleus = 0) {
  SpectrumFeatures f;
  f.reversals = find_reversals(spectrum, nucleus);
  f.troughs = find_troughs(spectrum, nucleus);
  if (f.reversals.empty()) {
    f.linewidth_error = "no reversal";
    return f;
  }
  f.steepest = steepest_reversal(f.reversals);
  try {
    f.linewidth = measure_linewidth(spectrum, f.steepest->param, nucleus);
  } catch (const ResolutionError& e) {
    f.linewidth_error = e.what();
  }
  return f;
}

}  // namespace resetpol
