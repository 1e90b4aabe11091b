// Scenario runners: decoherence robustness, the Hartmann-Hahn leakage
// baseline, two-spin resolution and convergence traces. Each returns typed
// results plus a ScenarioReport with verdicts for serialisation.

#pragma once

#include "resetpol/analytics.hpp"
#include "resetpol/sweep.hpp"
#include "resetpol/table.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace resetpol {

struct Verdict {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string rule;  // how measured is compared with threshold
};

struct ScenarioReport {
  std::string id;
  // Inputs and extracted numbers in user-facing units; a name ending in _hz
  // or _s carries its unit, other entries are dimensionless.
  std::vector<std::pair<std::string, double>> inputs;
  std::vector<std::pair<std::string, double>> features;
  std::vector<std::pair<std::string, Table>> tables;
  std::vector<Verdict> verdicts;
  std::vector<std::string> warnings;

  [[nodiscard]] bool passed() const {
    for (const auto& v : verdicts) {
      if (!v.passed) return false;
    }
    return true;
  }
};

namespace detail {

inline Verdict at_most(std::string name, double measured, double threshold) {
  return {std::move(name), measured <= threshold, measured, threshold, "measured <= threshold"};
}

inline Verdict at_least(std::string name, double measured, double threshold) {
  return {std::move(name), measured >= threshold, measured, threshold, "measured >= threshold"};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Decoherence robustness

struct DecoherenceRow {
  std::optional<double> t2e;  // absent: unitary cycle
  Spectrum spectrum;
  std::optional<Crossing> reversal;
  std::optional<LinewidthMeasurement> linewidth;
  std::string error;
};

struct DecoherenceResult {
  std::vector<DecoherenceRow> rows;  // unitary first, then t2e_values in order
  ScenarioReport report;
};

inline constexpr double kDecoherenceTolerance = 0.10;

/// Larmor sweep over `window` for the unitary cycle and for each finite T2e.
/// Reversal drift and width change are judged against the unitary row.
inline DecoherenceResult decoherence_robustness(const std::vector<double>& t2e_values,
                                                const SystemSpec& system, const DriveSpec& drive,
                                                const SweepSpec& window, unsigned threads = 1) {
  if (window.parameter != SweepParameter::larmor) {
    throw PreconditionError("decoherence_robustness: window must be a Larmor sweep");
  }
  DecoherenceResult out;
  out.report.id = "decoherence";
  out.report.inputs = {{"rabi_hz", drive.omega / kTwoPi},
                       {"t_reset_s", drive.t_reset},
                       {"a_perp_hz", system.nuclei.at(0).a_perp / kTwoPi},
                       {"a_par_hz", system.nuclei.at(0).a_par / kTwoPi},
                       {"sweep_start_hz", window.start / kTwoPi},
                       {"sweep_stop_hz", window.stop / kTwoPi},
                       {"sweep_steps", static_cast<double>(window.steps)}};

  std::vector<std::optional<double>> cases{std::nullopt};
  for (double t : t2e_values) {
    out.report.inputs.emplace_back("t2e_s", t);
    if (std::isfinite(t)) {
      cases.emplace_back(t);
      if (drive.t_reset >= t) {
        out.report.warnings.push_back("t_reset >= T2e = " + std::to_string(t) +
                                      " s: the reset period exceeds the electron coherence time");
      }
    }
  }

  for (const auto& t2e : cases) {
    DecoherenceRow row;
    row.t2e = t2e;
    DriveSpec d = drive;
    d.t2e = t2e;
    SweepSpec sw = window;
    sw.channel = t2e ? ChannelChoice::lindblad : ChannelChoice::unitary;
    row.spectrum = run_sweep(system, d, sw, threads);
    const auto f = extract_features(row.spectrum);
    row.reversal = f.steepest;
    row.linewidth = f.linewidth;
    row.error = f.linewidth_error;
    out.rows.push_back(std::move(row));
  }

  const auto& ref = out.rows.front();
  for (const auto& row : out.rows) {
    const std::string tag = row.t2e ? "t2e=" + std::to_string(*row.t2e) : std::string("unitary");
    out.report.tables.emplace_back(tag, spectrum_table(row.spectrum));
    if (row.reversal) {
      out.report.features.emplace_back(tag + ".reversal_hz", row.reversal->param / kTwoPi);
    }
    if (row.linewidth) {
      out.report.features.emplace_back(tag + ".peak_to_peak_hz", row.linewidth->peak_to_peak / kTwoPi);
      out.report.features.emplace_back(tag + ".trough_fwhm_hz", row.linewidth->trough_fwhm / kTwoPi);
    }
    if (!row.t2e) continue;
    if (!ref.reversal || !ref.linewidth || !row.reversal || !row.linewidth) {
      out.report.verdicts.push_back({tag + ".features", false, 0.0, 0.0,
                                     "reversal and linewidth measurable: " + row.error + ref.error});
      continue;
    }
    const double w = ref.linewidth->peak_to_peak;
    out.report.verdicts.push_back(detail::at_most(
        tag + ".reversal_drift_over_width", std::abs(row.reversal->param - ref.reversal->param) / w,
        kDecoherenceTolerance));
    out.report.verdicts.push_back(detail::at_most(
        tag + ".peak_to_peak_change", std::abs(row.linewidth->peak_to_peak / w - 1.0),
        kDecoherenceTolerance));
    out.report.verdicts.push_back(detail::at_most(
        tag + ".trough_fwhm_change",
        std::abs(row.linewidth->trough_fwhm / ref.linewidth->trough_fwhm - 1.0),
        kDecoherenceTolerance));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hartmann-Hahn leakage baseline

struct LeakageRow {
  double detuning = 0.0;  // delta', rad/s
  double sigma_z = 0.0;   // final <2 sigma_z>
};

struct HhBaselineResult {
  std::vector<LeakageRow> rows;
  double peak_leakage = 0.0;  // max of <2 sigma_z> + 1
  double peak_detuning = 0.0;
  double width = 0.0;         // FWHM of the leakage in delta', rad/s
  bool width_bounded = false;  // false: half maximum not reached inside the scan
  ScenarioReport report;
};

/// Final electron <2 sigma_z> after continuous evolution for t_probe from
/// |-x><-x| kron (fully mixed nuclei), with no resets.
inline double leakage_probe(const SystemSpec& system, const DriveSpec& drive, double t_probe) {
  const std::size_t n = system.nuclei.size();
  const Eigen::Index nd = ops::nuclear_dim(n);
  const Matrix rho0 = num::kron(reset_projector(), fully_mixed(nd));
  Matrix rho;
  if (has_dephasing(system, drive)) {
    const Matrix prop = num::expm_general(joint_lindbladian(system, drive) * t_probe);
    rho = num::unvec(prop * num::vec(rho0), rho0.rows());
  } else {
    const Matrix u = num::expm_hermitian(build_hamiltonian(system, drive), t_probe);
    rho = u * rho0 * u.adjoint();
  }
  return 2.0 * (rho * ops::joint_electron(Axis::z, n)).trace().real();
}

/// Scans the nuclear Larmor frequency by delta' about `resonance`, with the
/// dressed splitting held at `resonance` (Hartmann-Hahn matching).
inline HhBaselineResult hh_baseline(const std::vector<double>& detunings, double resonance,
                                    double t2e, double t_probe, const SystemSpec& system,
                                    unsigned threads = 1,
                                    DephasingFrame frame = DephasingFrame::lab) {
  if (detunings.size() < 3) throw PreconditionError("hh_baseline: need at least 3 detunings");
  if (!(t_probe > 0.0)) throw PreconditionError("hh_baseline: t_probe must be > 0");
  HhBaselineResult out;
  out.rows.resize(detunings.size());
  const DriveSpec drive{resonance, t_probe,
                        std::isfinite(t2e) ? std::optional(t2e) : std::nullopt, frame};
  parallel_for(detunings.size(), threads, [&](std::size_t k) {
    out.rows[k] = {detunings[k], leakage_probe(with_larmor(system, resonance + detunings[k]),
                                               drive, t_probe)};
  });

  std::size_t peak = 0;
  for (std::size_t k = 0; k < out.rows.size(); ++k) {
    if (out.rows[k].sigma_z > out.rows[peak].sigma_z) peak = k;
  }
  out.peak_leakage = out.rows[peak].sigma_z + 1.0;
  out.peak_detuning = out.rows[peak].detuning;
  const double half = 0.5 * out.peak_leakage;
  auto edge = [&](int dir) -> std::optional<double> {
    std::size_t k = peak;
    while ((dir < 0 && k > 0) || (dir > 0 && k + 1 < out.rows.size())) {
      const std::size_t next = dir < 0 ? k - 1 : k + 1;
      const double a = out.rows[k].sigma_z + 1.0, b = out.rows[next].sigma_z + 1.0;
      if (b <= half) {
        const double xa = out.rows[k].detuning, xb = out.rows[next].detuning;
        return xa + (xb - xa) * ((half - a) / (b - a));
      }
      k = next;
    }
    return std::nullopt;
  };
  const auto lo = edge(-1), hi = edge(+1);
  out.width_bounded = lo && hi && out.peak_leakage > 0.0;
  out.width = (hi ? *hi : out.rows.back().detuning) - (lo ? *lo : out.rows.front().detuning);

  auto& rep = out.report;
  rep.id = "hh-baseline";
  rep.inputs = {{"resonance_hz", resonance / kTwoPi},
                {"t2e_s", t2e},
                {"t_probe_s", t_probe},
                {"a_perp_hz", system.nuclei.at(0).a_perp / kTwoPi},
                {"a_par_hz", system.nuclei.at(0).a_par / kTwoPi},
                {"detuning_start_hz", detunings.front() / kTwoPi},
                {"detuning_stop_hz", detunings.back() / kTwoPi},
                {"detuning_steps", static_cast<double>(detunings.size())}};
  rep.features = {{"peak_leakage", out.peak_leakage},
                  {"peak_detuning_hz", out.peak_detuning / kTwoPi},
                  {"width_hz", out.width / kTwoPi},
                  {"width_bounded", out.width_bounded ? 1.0 : 0.0}};
  Table t;
  t.columns = {"detuning_hz", "sigma_z"};
  for (const auto& r : out.rows) t.rows.push_back({r.detuning / kTwoPi, r.sigma_z});
  rep.tables.emplace_back("leakage", std::move(t));
  if (!out.width_bounded) {
    rep.warnings.push_back("leakage half maximum not reached inside the scan; width is a lower bound");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-spin resolution

struct TwoSpinOptions {
  double evolution_time = 320e-3;  // s; horizon the fixed point stands in for
  bool literal_iteration = false;  // iterate the channel for evolution_time instead
};

enum class FeatureKind { reversal, trough };

struct SummedFeature {
  double param = 0.0;
  FeatureKind kind = FeatureKind::reversal;
};

struct TwoSpinResult {
  Spectrum spectrum;                  // per-nucleus rows
  std::vector<double> summed_z;       // sum over nuclei of <2I_z>, per row
  std::vector<double> summed_x;
  std::vector<Crossing> nucleus_reversal;  // steepest reversal of each nucleus
  std::vector<SummedFeature> summed_features;  // falling <2I_z> crossings and <2I_x> troughs of the sum
  std::vector<int> assignment;  // index into summed_features per nucleus, -1 if none
  bool resolved = false;
  double min_horizon_ratio = 0.0;  // evolution_time / max tau_converge over the rows
  ScenarioReport report;
};

inline TwoSpinResult two_spin_resolution(const SystemSpec& system, const DriveSpec& drive,
                                         const SweepSpec& window, const TwoSpinOptions& opts = {},
                                         unsigned threads = 1) {
  if (system.nuclei.size() != 2) throw PreconditionError("two_spin_resolution: exactly 2 nuclei");
  if (window.parameter != SweepParameter::larmor) {
    throw PreconditionError("two_spin_resolution: window must be a Larmor sweep");
  }
  TwoSpinResult out;
  if (opts.literal_iteration) {
    validate(system);
    validate(drive);
    validate(window);
    const auto grid = sweep_grid(window);
    const auto cycles = static_cast<std::size_t>(std::llround(opts.evolution_time / drive.t_reset));
    out.spectrum = {window.parameter, system, drive, std::vector<SpectrumRow>(grid.size())};
    parallel_for(grid.size(), threads, [&](std::size_t k) {
      const QuantumChannel ch = build_channel(with_larmor(system, grid[k]), drive, window.channel);
      Vector v = num::vec(fully_mixed(ch.dim));
      for (std::size_t c = 0; c < cycles; ++c) v = ch.superop * v;
      SpectrumRow row;
      row.param = grid[k];
      row.nuclei = observables(num::hermitian_part(num::unvec(v, ch.dim)));
      row.gap = spectral_gap(ch).gap;
      out.spectrum.rows[k] = std::move(row);
    });
  } else {
    out.spectrum = run_sweep(system, drive, window, threads);
  }

  double max_tau = 0.0;
  for (const auto& r : out.spectrum.rows) {
    out.summed_z.push_back(r.nuclei[0].z + r.nuclei[1].z);
    out.summed_x.push_back(r.nuclei[0].x + r.nuclei[1].x);
    max_tau = std::max(max_tau, r.gap > 0.0 ? drive.t_reset / r.gap
                                            : std::numeric_limits<double>::infinity());
  }
  out.min_horizon_ratio = opts.evolution_time / max_tau;

  Spectrum summed = out.spectrum;
  for (std::size_t k = 0; k < summed.rows.size(); ++k) {
    summed.rows[k].nuclei = {{out.summed_z[k], out.summed_x[k], 0.0}};
  }
  for (const auto& c : find_reversals(summed)) {
    if (c.slope < 0.0) out.summed_features.push_back({c.param, FeatureKind::reversal});
  }
  for (const auto& t : find_troughs(summed)) {
    out.summed_features.push_back({t.param, FeatureKind::trough});
  }
  for (std::size_t i = 0; i < 2; ++i) {
    out.nucleus_reversal.push_back(steepest_reversal(find_reversals(out.spectrum, i)));
  }

  // Match each nucleus's reversal to the nearest feature of the summed signal.
  const double separation = std::abs(out.nucleus_reversal[0].param - out.nucleus_reversal[1].param);
  const double step = (window.stop - window.start) / static_cast<double>(window.steps - 1);
  const double tolerance = std::max(2.0 * step, 0.25 * separation);
  for (std::size_t i = 0; i < 2; ++i) {
    int best = -1;
    double best_dist = tolerance;
    for (std::size_t c = 0; c < out.summed_features.size(); ++c) {
      const double d = std::abs(out.summed_features[c].param - out.nucleus_reversal[i].param);
      if (d <= best_dist) {
        best = static_cast<int>(c);
        best_dist = d;
      }
    }
    out.assignment.push_back(best);
  }
  out.resolved = out.assignment[0] >= 0 && out.assignment[1] >= 0 &&
                 out.assignment[0] != out.assignment[1] && separation > 2.0 * step &&
                 std::abs(out.summed_features[out.assignment[0]].param -
                          out.summed_features[out.assignment[1]].param) > 2.0 * step;

  auto& rep = out.report;
  rep.id = "two-spin";
  rep.inputs = {{"rabi_hz", drive.omega / kTwoPi},
                {"t_reset_s", drive.t_reset},
                {"t2e_s", drive.t2e ? *drive.t2e : std::numeric_limits<double>::infinity()},
                {"evolution_time_s", opts.evolution_time},
                {"literal_iteration", opts.literal_iteration ? 1.0 : 0.0},
                {"sweep_start_hz", window.start / kTwoPi},
                {"sweep_stop_hz", window.stop / kTwoPi},
                {"sweep_steps", static_cast<double>(window.steps)}};
  for (std::size_t i = 0; i < 2; ++i) {
    const auto idx = std::to_string(i);
    rep.inputs.emplace_back("a_perp_" + idx + "_hz", system.nuclei[i].a_perp / kTwoPi);
    rep.inputs.emplace_back("a_par_" + idx + "_hz", system.nuclei[i].a_par / kTwoPi);
    rep.inputs.emplace_back("larmor_" + idx + "_hz", larmor_of(system, i) / kTwoPi);
    rep.features.emplace_back("reversal_" + idx + "_hz", out.nucleus_reversal[i].param / kTwoPi);
    if (out.assignment[i] >= 0) {
      rep.features.emplace_back("summed_feature_" + idx + "_hz",
                                out.summed_features[out.assignment[i]].param / kTwoPi);
    }
  }
  rep.features.emplace_back("separation_hz", separation / kTwoPi);
  rep.features.emplace_back("horizon_over_tau", out.min_horizon_ratio);
  Table t = spectrum_table(out.spectrum);
  t.columns.insert(t.columns.end(), {"Iz_sum", "Ix_sum"});
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    t.rows[k].push_back(out.summed_z[k]);
    t.rows[k].push_back(out.summed_x[k]);
  }
  rep.tables.emplace_back("spectrum", std::move(t));
  rep.verdicts.push_back({"two_features_resolved", out.resolved, separation / kTwoPi,
                          2.0 * step / kTwoPi,
                          "each nucleus matched to its own summed feature, separation > 2 steps"});
  if (out.min_horizon_ratio < 5.0) {
    rep.warnings.push_back("evolution_time is shorter than 5 tau_converge; the fixed point is the "
                           "long-time limit, not the state reached at evolution_time");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convergence traces

struct ExponentialFit {
  double tau = 0.0;        // s
  double amplitude = 0.0;  // asymptote of the fitted x(t) = amplitude (1 - exp(-t/tau))
  double rms = 0.0;
};

/// Least-squares fit of x(t) = A (1 - exp(-t/tau)); A is solved linearly for
/// each tau, and tau by a log-spaced scan followed by golden-section search.
inline ExponentialFit fit_exponential(const std::vector<double>& t, const std::vector<double>& x) {
  if (t.size() != x.size() || t.size() < 3) {
    throw PreconditionError("fit_exponential: need >= 3 samples of matching length");
  }
  const double t_max = *std::max_element(t.begin(), t.end());
  double t_min = t_max;
  for (double v : t) {
    if (v > 0.0) t_min = std::min(t_min, v);
  }
  auto solve = [&](double log_tau) {
    const double tau = std::exp(log_tau);
    double fx = 0.0, ff = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double f = -std::expm1(-t[k] / tau);
      fx += f * x[k];
      ff += f * f;
    }
    const double a = ff > 0.0 ? fx / ff : 0.0;
    double sse = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double r = x[k] + a * std::expm1(-t[k] / tau);
      sse += r * r;
    }
    return std::pair{sse, a};
  };
  double lo = std::log(0.1 * t_min), hi = std::log(100.0 * t_max);
  constexpr int kScan = 400;
  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kScan; ++k) {
    const double s = solve(lo + (hi - lo) * k / kScan).first;
    if (s < best_sse) {
      best_sse = s;
      best = k;
    }
  }
  const double cell = (hi - lo) / kScan;
  double a = lo + cell * std::max(best - 1, 0), b = lo + cell * std::min(best + 1, kScan);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = solve(c).first, fd = solve(d).first;
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = solve(c).first;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = solve(d).first;
    }
  }
  const double log_tau = 0.5 * (a + b);
  const auto [sse, amp] = solve(log_tau);
  return {std::exp(log_tau), amp, std::sqrt(sse / static_cast<double>(t.size()))};
}

struct ConvergenceVariant {
  std::string label;
  SystemSpec system;
  DriveSpec drive;
};

struct ConvergenceTrace {
  std::string label;
  Trajectory trajectory;
  ExponentialFit fit;
  std::optional<double> tau_gap;  // t_reset / spectral gap
  double predicted_tau = 0.0;     // 16 / (a_par^2 t_reset)
};

struct ConvergenceResult {
  std::vector<ConvergenceTrace> traces;
  ScenarioReport report;
};

/// Sweeps the Larmor frequency of nucleus 0 over `center -+ half_width` and
/// returns the position of the deepest <2I_x> trough.
inline double locate_trough(const SystemSpec& system, const DriveSpec& drive, double center,
                            double half_width, std::size_t steps, unsigned threads = 1) {
  const auto spec = run_sweep(system, drive,
                              {SweepParameter::larmor, center - half_width, center + half_width,
                               steps, ChannelChoice::automatic},
                              threads);
  const auto troughs = find_troughs(spec);
  if (troughs.empty()) throw NumericalError("locate_trough: no <2I_x> trough in the window");
  return std::min_element(troughs.begin(), troughs.end(), [](const Trough& a, const Trough& b) {
           return a.value < b.value;
         })->param;
}

/// Evolves each variant from the fully mixed state for `horizon` seconds and
/// fits the <2I_x> build-up of nucleus 0 with a single exponential.
inline ConvergenceResult convergence_traces(const std::vector<ConvergenceVariant>& variants,
                                            double horizon, unsigned threads = 1) {
  if (!(horizon > 0.0)) throw PreconditionError("convergence_traces: horizon must be > 0");
  ConvergenceResult out;
  out.traces.resize(variants.size());
  parallel_for(variants.size(), threads, [&](std::size_t k) {
    const auto& v = variants[k];
    const QuantumChannel ch = cycle_channel(v.system, v.drive);
    const auto cycles = static_cast<std::size_t>(std::ceil(horizon / v.drive.t_reset));
    ConvergenceTrace tr;
    tr.label = v.label;
    tr.trajectory = evolve(ch, fully_mixed(ch.dim), cycles);
    std::vector<double> t, x;
    for (const auto& r : tr.trajectory) {
      t.push_back(r.time);
      x.push_back(r.nuclei[0].x);
    }
    tr.fit = fit_exponential(t, x);
    tr.tau_gap = spectral_gap(ch).tau_converge;
    const double rate = convergence_rate(v.system.nuclei[0].a_par, v.drive.t_reset);
    tr.predicted_tau = rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
    out.traces[k] = std::move(tr);
  });

  auto& rep = out.report;
  rep.id = "convergence";
  rep.inputs.emplace_back("horizon_s", horizon);
  for (std::size_t k = 0; k < variants.size(); ++k) {
    const auto& v = variants[k];
    const auto& tr = out.traces[k];
    rep.inputs.emplace_back(v.label + ".rabi_hz", v.drive.omega / kTwoPi);
    rep.inputs.emplace_back(v.label + ".t_reset_s", v.drive.t_reset);
    rep.inputs.emplace_back(v.label + ".a_perp_hz", v.system.nuclei[0].a_perp / kTwoPi);
    rep.inputs.emplace_back(v.label + ".a_par_hz", v.system.nuclei[0].a_par / kTwoPi);
    rep.inputs.emplace_back(v.label + ".larmor_hz", larmor_of(v.system, 0) / kTwoPi);
    rep.features.emplace_back(v.label + ".tau_fit_s", tr.fit.tau);
    rep.features.emplace_back(v.label + ".x_asymptote", tr.fit.amplitude);
    rep.features.emplace_back(v.label + ".tau_gap_s",
                              tr.tau_gap ? *tr.tau_gap : std::numeric_limits<double>::infinity());
    rep.features.emplace_back(v.label + ".tau_predicted_s", tr.predicted_tau);
    rep.tables.emplace_back(v.label, trajectory_table(tr.trajectory));
  }
  if (!out.traces.empty()) {
    const auto& base = out.traces.front();
    rep.verdicts.push_back({"base_tau_within_2x_of_prediction",
                            base.fit.tau >= 0.5 * base.predicted_tau &&
                                base.fit.tau <= 2.0 * base.predicted_tau,
                            base.fit.tau / base.predicted_tau, 2.0,
                            "1/threshold <= tau_fit / tau_predicted <= threshold"});
    // Scaling law for the halving variants, when present.
    struct Law {
      const char* label;
      double expected;  // tau_variant / tau_base
      double tolerance;  // relative
    };
    static constexpr Law kLaws[] = {{"a_par_half", 4.0, 0.30},
                                    {"t_reset_half", 2.0, 0.30},
                                    {"rabi_half", 1.0, 0.25},
                                    {"a_perp_half", 1.0, 0.25}};
    for (const auto& law : kLaws) {
      for (const auto& tr : out.traces) {
        if (tr.label != law.label) continue;
        const double ratio = tr.fit.tau / base.fit.tau;
        rep.features.emplace_back(tr.label + ".tau_ratio", ratio);
        rep.verdicts.push_back({tr.label + ".tau_ratio",
                                std::abs(ratio / law.expected - 1.0) <= law.tolerance, ratio,
                                law.expected,
                                "|measured / threshold - 1| <= " + std::to_string(law.tolerance)});
      }
    }
  }
  return out;
}

/// The base operating point and its four single-parameter variants
/// (Rabi, a_perp, a_par, t_reset halved), each moved to its own <2I_x>
/// trough when `retune` is set.
inline std::vector<ConvergenceVariant> halving_variants(const SystemSpec& base_system,
                                                        const DriveSpec& base_drive, bool retune,
                                                        unsigned threads = 1) {
  std::vector<ConvergenceVariant> v(5, {"", base_system, base_drive});
  v[0].label = "base";
  v[1].label = "rabi_half";
  v[1].drive.omega *= 0.5;
  v[2].label = "a_perp_half";
  v[2].system.nuclei[0].a_perp *= 0.5;
  v[3].label = "a_par_half";
  v[3].system.nuclei[0].a_par *= 0.5;
  v[4].label = "t_reset_half";
  v[4].drive.t_reset *= 0.5;
  if (retune) {
    for (auto& var : v) {
      const double wn = larmor_of(var.system, 0);
      // Predicted reversal of the resonance nearest the current Larmor frequency.
      const double spacing = kTwoPi / var.drive.t_reset;
      const double k = std::max(1.0, std::round(wn / spacing));
      const double target = k * spacing - reversal_shift(var.system.nuclei[0].a_perp, k * spacing);
      const double half = std::max(4.0 * linewidth(var.system.nuclei[0].a_par, var.drive.t_reset),
                                   kTwoPi * 20.0);
      const double trough = locate_trough(var.system, var.drive, target, half, 161, threads);
      var.system = with_larmor(var.system, trough);
    }
  }
  return v;
}

}  // namespace resetpol
