// resetpol: steady-state nuclear polarisation under periodic electron reset.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 I/O error.

#include "resetpol/estimator.hpp"
#include "resetpol/experiments.hpp"
#include "resetpol/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

using namespace resetpol;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kNumerical = 2, kIo = 3 };

struct Options {
  std::string config;
  std::string out;
  std::string plot;
  unsigned threads = 1;
  std::string scenario;
};

struct Outputs {
  std::string csv;   // empty: stdout
  std::string plot;  // empty: none
};

Outputs resolve_outputs(const Options& o, const RunConfig& cfg) {
  return {o.out.empty() ? cfg.output.csv : o.out, o.plot.empty() ? cfg.output.plot : o.plot};
}

void write_table(const Table& t, const Outputs& out) {
  if (out.csv.empty()) {
    std::cout << csv_text(t);
  } else {
    emit_csv(t, out.csv);
  }
}

/// Secondary tables land next to the main CSV as <stem>.<name>.csv.
std::string sidecar(const std::string& main, const std::string& name) {
  if (main.empty()) return "";
  std::filesystem::path p(main);
  std::string clean;
  for (const char c : name) clean += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return (p.parent_path() / (p.stem().string() + "." + clean + ".csv")).string();
}

double to_hz(double rad_per_s) { return rad_per_s / kTwoPi; }

SweepSpec frequency_sweep(const RunConfig& cfg, SweepParameter parameter) {
  if (!cfg.sweep.start_freq) throw ConfigError(0, "missing required key sweep.start_hz");
  if (!cfg.sweep.stop_freq) throw ConfigError(0, "missing required key sweep.stop_hz");
  return {parameter, *cfg.sweep.start_freq, *cfg.sweep.stop_freq, cfg.sweep.steps, cfg.sweep.channel};
}

SweepSpec time_sweep(const RunConfig& cfg) {
  if (!cfg.sweep.start_time) throw ConfigError(0, "missing required key sweep.start_s");
  if (!cfg.sweep.stop_time) throw ConfigError(0, "missing required key sweep.stop_s");
  return {SweepParameter::reset_time, *cfg.sweep.start_time, *cfg.sweep.stop_time,
          cfg.sweep.steps, cfg.sweep.channel};
}

int run_sweep_command(const RunConfig& cfg, const Options& o, SweepParameter parameter) {
  const SweepSpec sw =
      parameter == SweepParameter::reset_time ? time_sweep(cfg) : frequency_sweep(cfg, parameter);
  const Spectrum sp = run_sweep(cfg.system, cfg.drive, sw, o.threads);
  const Outputs out = resolve_outputs(o, cfg);
  write_table(spectrum_table(sp), out);
  std::size_t degenerate = 0;
  for (const auto& r : sp.rows) degenerate += r.degenerate ? 1 : 0;
  if (degenerate) {
    std::cerr << "warning: " << degenerate
              << " grid points have a degenerate fixed point; observables there start from the "
                 "fully mixed state\n";
  }
  if (!out.plot.empty()) emit_plot(spectrum_plot(sp), out.plot);
  return kOk;
}

int run_steady(const RunConfig& cfg, const Options& o) {
  const QuantumChannel ch = cycle_channel(cfg.system, cfg.drive);
  const auto ss = steady_state(ch);
  Table t;
  t.columns = {"larmor_hz"};
  for (std::size_t i = 0; i < ss.nuclei.size(); ++i) {
    const auto idx = std::to_string(i);
    t.columns.insert(t.columns.end(), {"Iz_" + idx, "Ix_" + idx, "Iy_" + idx});
  }
  t.columns.insert(t.columns.end(), {"gap", "tau_converge_s", "residual"});
  std::vector<double> row{to_hz(larmor_of(cfg.system, 0))};
  for (const auto& p : ss.nuclei) row.insert(row.end(), {p.z, p.x, p.y});
  row.push_back(ss.gap);
  row.push_back(ss.tau_converge ? *ss.tau_converge : std::numeric_limits<double>::infinity());
  row.push_back(ss.residual);
  t.rows.push_back(std::move(row));
  write_table(t, resolve_outputs(o, cfg));
  return kOk;
}

int run_converge(const RunConfig& cfg, const Options& o) {
  const QuantumChannel ch = cycle_channel(cfg.system, cfg.drive);
  const Trajectory traj = evolve(ch, fully_mixed(ch.dim), cfg.converge.cycles);
  const Outputs out = resolve_outputs(o, cfg);
  write_table(trajectory_table(traj), out);
  std::vector<double> t, x;
  for (const auto& r : traj) {
    t.push_back(r.time);
    x.push_back(r.nuclei[0].x);
  }
  const auto fit = fit_exponential(t, x);
  std::cerr << "exponential fit of Ix_0: tau = " << format_double(fit.tau)
            << " s, asymptote = " << format_double(fit.amplitude) << "\n";
  if (!out.plot.empty()) emit_plot(trajectory_plot(traj), out.plot);
  return kOk;
}

int run_features(const RunConfig& cfg, const Options& o) {
  const Spectrum sp = run_sweep(cfg.system, cfg.drive, frequency_sweep(cfg, SweepParameter::larmor),
                                o.threads);
  const auto f = extract_features(sp);
  Table t;
  t.label_column = "feature";
  t.columns = {"param_hz", "value"};
  auto add = [&](const std::string& label, double param, double value) {
    t.labels.push_back(label);
    t.rows.push_back({param, value});
  };
  for (const auto& c : f.reversals) add("reversal", to_hz(c.param), c.slope * kTwoPi);
  for (const auto& tr : f.troughs) add("trough", to_hz(tr.param), tr.value);
  if (f.steepest) add("steepest_reversal", to_hz(f.steepest->param), f.steepest->slope * kTwoPi);
  if (f.linewidth) {
    const auto& w = *f.linewidth;
    add("peak_to_peak_hz", to_hz(0.5 * (w.z_extremum_low + w.z_extremum_high)), to_hz(w.peak_to_peak));
    add("trough_fwhm_hz", to_hz(w.trough_param), to_hz(w.trough_fwhm));
  } else {
    std::cerr << "warning: linewidth not measured: " << f.linewidth_error << "\n";
  }
  const Outputs out = resolve_outputs(o, cfg);
  write_table(t, out);
  if (!out.plot.empty()) emit_plot(spectrum_plot(sp), out.plot);
  return kOk;
}

Table fit_table(const FitResult& r) {
  Table t;
  t.label_column = "quantity";
  t.columns = {"value", "ci_low", "ci_high"};
  auto add = [&](const std::string& label, double v, double lo, double hi) {
    t.labels.push_back(label);
    t.rows.push_back({v, lo, hi});
  };
  add("a_perp_hz", to_hz(r.a_perp), to_hz(r.a_perp_ci.lo), to_hz(r.a_perp_ci.hi));
  add("a_par_hz", to_hz(r.a_par), to_hz(r.a_par_ci.lo), to_hz(r.a_par_ci.hi));
  add("larmor_offset_hz", to_hz(r.larmor_offset), to_hz(r.larmor_offset_ci.lo),
      to_hz(r.larmor_offset_ci.hi));
  add("seed_a_perp_hz", to_hz(r.seed.a_perp), NAN, NAN);
  add("seed_a_par_hz", to_hz(r.seed.a_par), NAN, NAN);
  add("residual_rms", r.residual, NAN, NAN);
  add("iterations", r.iterations, NAN, NAN);
  add("converged", r.converged ? 1.0 : 0.0, NAN, NAN);
  return t;
}

int run_fit(const RunConfig& cfg, const Options& o) {
  if (cfg.fit.spectrum_csv.empty()) throw ConfigError(0, "missing required key fit.spectrum_csv");
  const Table in = read_csv(cfg.fit.spectrum_csv);
  const std::size_t pc = column_index(in, "param_hz"), zc = column_index(in, "Iz_0");
  SpectrumData data;
  data.drive = cfg.drive;
  for (const auto& r : in.rows) {
    data.larmor.push_back(kTwoPi * r[pc]);
    data.iz.push_back(r[zc]);
  }
  FitOptions opts;
  opts.fit_larmor_offset = cfg.fit.larmor_offset;
  opts.noise_sigma = cfg.fit.noise_sigma;
  opts.max_iterations = cfg.fit.max_iterations;
  opts.threads = o.threads;
  const Outputs out = resolve_outputs(o, cfg);
  try {
    write_table(fit_table(fit_couplings(data, cfg.fit.k, opts)), out);
  } catch (const FitNotConverged& e) {
    write_table(fit_table(e.best()), out);
    throw;
  }
  std::cerr << "note: only |a_par| is identifiable; its sign is not determined by the spectrum\n";
  return kOk;
}

Table report_table(const ScenarioReport& rep) {
  Table t;
  t.label_column = "name";
  t.columns = {"value", "threshold", "passed"};
  for (const auto& [k, v] : rep.inputs) {
    t.labels.push_back("input." + k);
    t.rows.push_back({v, NAN, NAN});
  }
  for (const auto& [k, v] : rep.features) {
    t.labels.push_back("feature." + k);
    t.rows.push_back({v, NAN, NAN});
  }
  for (const auto& v : rep.verdicts) {
    t.labels.push_back("verdict." + v.name);
    t.rows.push_back({v.measured, v.threshold, v.passed ? 1.0 : 0.0});
  }
  return t;
}

int finish_scenario(const ScenarioReport& rep, const Outputs& out, const PlotSpec* plot) {
  write_table(report_table(rep), out);
  for (const auto& [name, table] : rep.tables) {
    if (!out.csv.empty()) emit_csv(table, sidecar(out.csv, name));
  }
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& v : rep.verdicts) {
    std::cerr << (v.passed ? "PASS " : "FAIL ") << v.name << ": " << format_double(v.measured)
              << " (" << v.rule << ", threshold " << format_double(v.threshold) << ")\n";
  }
  if (plot && !out.plot.empty()) emit_plot(*plot, out.plot);
  return kOk;
}

int run_scenario(const RunConfig& cfg, const Options& o) {
  const Outputs out = resolve_outputs(o, cfg);
  if (o.scenario == "decoherence") {
    const auto r = decoherence_robustness(cfg.scenario.t2e_values, cfg.system, cfg.drive,
                                          frequency_sweep(cfg, SweepParameter::larmor), o.threads);
    PlotSpec p{"decoherence robustness", "Larmor frequency (Hz)", "<2I_z> (dimensionless)", {}};
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
      PlotSeries s{r.report.tables[k].first, {}, {}};
      for (const auto& row : r.rows[k].spectrum.rows) {
        s.x.push_back(to_hz(row.param));
        s.y.push_back(row.nuclei[0].z);
      }
      p.series.push_back(std::move(s));
    }
    return finish_scenario(r.report, out, &p);
  }
  if (o.scenario == "hh-baseline") {
    const std::size_t n = cfg.scenario.detuning_steps;
    std::vector<double> det(n);
    for (std::size_t k = 0; k < n; ++k) {
      det[k] = cfg.scenario.detuning_span * (static_cast<double>(k) / static_cast<double>(n - 1) - 0.5);
    }
    const double t2e = cfg.drive.t2e ? *cfg.drive.t2e : std::numeric_limits<double>::infinity();
    const auto r = hh_baseline(det, cfg.drive.omega, t2e, cfg.scenario.probe, cfg.system,
                               o.threads, cfg.drive.t2e_frame);
    const PlotSpec p = table_plot(r.report.tables.front().second, "detuning_hz", {"sigma_z"},
                                  "Hartmann-Hahn leakage", "detuning (Hz)",
                                  "<2 sigma_z> (dimensionless)");
    return finish_scenario(r.report, out, &p);
  }
  if (o.scenario == "two-spin") {
    TwoSpinOptions opts{cfg.scenario.evolution, cfg.scenario.literal};
    const auto r = two_spin_resolution(cfg.system, cfg.drive,
                                       frequency_sweep(cfg, SweepParameter::larmor), opts, o.threads);
    const PlotSpec p = table_plot(r.report.tables.front().second, "param_hz",
                                  {"Iz_0", "Iz_1", "Iz_sum", "Ix_sum"}, "two-spin spectrum",
                                  "Larmor frequency (Hz)", "<2I> (dimensionless)");
    return finish_scenario(r.report, out, &p);
  }
  // convergence
  const auto variants = halving_variants(cfg.system, cfg.drive, cfg.scenario.retune, o.threads);
  const auto r = convergence_traces(variants, cfg.scenario.horizon, o.threads);
  PlotSpec p{"Ix build-up", "time (s)", "<2I_x> (dimensionless)", {}};
  for (const auto& tr : r.traces) {
    PlotSeries s{tr.label, {}, {}};
    for (const auto& row : tr.trajectory) {
      s.x.push_back(row.time);
      s.y.push_back(row.nuclei[0].x);
    }
    p.series.push_back(std::move(s));
  }
  return finish_scenario(r.report, out, &p);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady-state nuclear polarisation under a periodically reset electron spin"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "configuration file")->required();
    sub->add_option("--out", opts.out, "CSV output path (default: output.csv, else stdout)");
    sub->add_option("--plot", opts.plot, "SVG plot path");
    sub->add_option("--threads", opts.threads, "worker threads")->check(CLI::Range(1u, 1024u));
  };
  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"sweep-larmor", "steady state over sweep.start_hz..stop_hz of the nuclear Larmor frequency"},
      {"sweep-rabi", "steady state over sweep.start_hz..stop_hz of the Rabi frequency"},
      {"sweep-reset", "steady state over sweep.start_s..stop_s of the reset period"},
      {"steady", "steady state at the configured operating point"},
      {"converge", "cycle-by-cycle build-up from the fully mixed state"},
      {"features", "reversals, troughs and linewidth of a Larmor sweep"},
      {"fit", "estimate couplings from the Larmor spectrum in fit.spectrum_csv"},
      {"scenario", "run a named scenario: decoherence, hh-baseline, two-spin, convergence"},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    if (std::string(c.name) == "scenario") {
      sub->add_option("id", opts.scenario, "scenario id")
          ->required()
          ->check(CLI::IsMember({"decoherence", "hh-baseline", "two-spin", "convergence"}));
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = load_config(opts.config);
    std::cout << provenance_header(cfg, command + (opts.scenario.empty() ? "" : " " + opts.scenario),
                                   opts.threads);
    std::cout.flush();
    if (command == "sweep-larmor") return run_sweep_command(cfg, opts, SweepParameter::larmor);
    if (command == "sweep-rabi") return run_sweep_command(cfg, opts, SweepParameter::rabi);
    if (command == "sweep-reset") return run_sweep_command(cfg, opts, SweepParameter::reset_time);
    if (command == "steady") return run_steady(cfg, opts);
    if (command == "converge") return run_converge(cfg, opts);
    if (command == "features") return run_features(cfg, opts);
    if (command == "fit") return run_fit(cfg, opts);
    return run_scenario(cfg, opts);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
