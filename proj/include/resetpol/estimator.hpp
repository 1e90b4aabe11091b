// Coupling estimation from a Larmor-swept <2I_z> spectrum: closed-form seeds
// from the reversal position and width, refined by damped Gauss-Newton
// against the exact steady-state simulator.

#pragma once

#include "resetpol/analytics.hpp"
#include "resetpol/sweep.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace resetpol {

/// The reversal lies above k 2 pi / t_reset, which no positive a_perp^2 explains.
class NoPhysicalSeed : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

struct CouplingSeed {
  double a_perp = 0.0;  // rad/s
  double a_par = 0.0;   // rad/s, magnitude only
};

/// Inverts shift = a_perp^2 / (8 omega_n) and width = a_par^2 t_reset.
/// `reversal_hz` and `width_hz` are linear frequencies; the result is in rad/s.
inline CouplingSeed seed_from_features(double reversal_hz, double width_hz, double t_reset,
                                       int k) {
  if (!(t_reset > 0.0) || k < 1) throw PreconditionError("seed_from_features: need t_reset > 0, k >= 1");
  if (!(reversal_hz > 0.0) || width_hz < 0.0) {
    throw PreconditionError("seed_from_features: need reversal > 0 and width >= 0");
  }
  const double shift_hz = k / t_reset - reversal_hz;
  if (shift_hz < 0.0) {
    throw NoPhysicalSeed("seed_from_features: reversal lies " + std::to_string(-shift_hz) +
                         " Hz above k / t_reset");
  }
  // In rad/s: a_perp^2 = 8 omega_n shift, a_par^2 = width / t_reset.
  const double omega_n = kTwoPi * reversal_hz;
  return {std::sqrt(8.0 * omega_n * kTwoPi * shift_hz), std::sqrt(kTwoPi * width_hz / t_reset)};
}

/// Observed <2I_z> at a set of effective Larmor frequencies (rad/s).
struct SpectrumData {
  std::vector<double> larmor;
  std::vector<double> iz;
  DriveSpec drive;
};

inline SpectrumData spectrum_data(const Spectrum& spectrum, std::size_t nucleus = 0) {
  if (spectrum.parameter != SweepParameter::larmor) {
    throw PreconditionError("fit: spectrum must be a Larmor sweep");
  }
  detail::require_nucleus(spectrum, nucleus);
  SpectrumData d;
  d.drive = spectrum.drive;
  for (const auto& r : detail::sorted_rows(spectrum)) {
    d.larmor.push_back(r.param);
    d.iz.push_back(r.nuclei[nucleus].z);
  }
  return d;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] bool contains(double v) const { return lo <= v && v <= hi; }
};

struct FitOptions {
  int max_iterations = 60;
  double relative_step_tol = 1e-6;
  double residual_tol = 1e-10;  // rms of <2I_z>
  /// Accepted steps that lower the squared misfit by less than this fraction
  /// end the fit; near a_par = 0 the grid-scale structure makes steps crawl.
  double relative_cost_tol = 1e-6;
  bool fit_larmor_offset = false;
  double confidence_z = 1.96;
  /// Known observation noise (std of <2I_z>); estimated from the residual when absent.
  std::optional<double> noise_sigma;
  unsigned threads = 1;
};

struct FitResult {
  double a_perp = 0.0;  // rad/s, magnitude
  Interval a_perp_ci;
  double a_par = 0.0;  // rad/s, magnitude; the sign is not identifiable
  Interval a_par_ci;
  double larmor_offset = 0.0;  // rad/s added to every grid frequency
  Interval larmor_offset_ci;
  double residual = 0.0;  // rms misfit of <2I_z>
  int iterations = 0;
  bool converged = false;
  CouplingSeed seed;
  std::vector<double> residual_history;  // rms after the seed and every accepted step
};

/// The iteration budget ran out; `best()` holds the lowest-residual point.
class FitNotConverged : public NumericalError {
 public:
  explicit FitNotConverged(FitResult best)
      : NumericalError("fit_couplings: no convergence after " + std::to_string(best.iterations) +
                       " iterations (rms " + std::to_string(best.residual) + ")"),
        best_(std::move(best)) {}
  [[nodiscard]] const FitResult& best() const { return best_; }

 private:
  FitResult best_;
};

inline constexpr std::size_t kMinFitPoints = 12;

namespace detail {

/// Simulated <2I_z> for one nucleus with the given couplings over `larmor + offset`.
inline Eigen::VectorXd simulate_iz(const SpectrumData& data, double a_perp, double a_par, double offset,
                          unsigned threads) {
  SystemSpec s;
  s.nuclei.push_back({a_perp, a_par, std::nullopt, std::nullopt});
  Eigen::VectorXd out(static_cast<Eigen::Index>(data.larmor.size()));
  std::vector<std::exception_ptr> errors(data.larmor.size());
  parallel_for(data.larmor.size(), threads, [&](std::size_t k) {
    try {
      const auto row = steady_row(with_larmor(s, data.larmor[k] + offset), data.drive,
                                  ChannelChoice::automatic, data.larmor[k]);
      out(static_cast<Eigen::Index>(k)) = row.nuclei[0].z;
    } catch (...) {
      errors[k] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

inline Eigen::VectorXd observed(const SpectrumData& data) {
  return Eigen::Map<const Eigen::VectorXd>(data.iz.data(), static_cast<Eigen::Index>(data.iz.size()));
}

/// Seed from the steepest falling crossing of the data. Without one (a_par = 0
/// leaves only a gentle rising crossing, mirrored about the resonance) the
/// steepest crossing is used with the magnitude of its shift.
inline CouplingSeed seed_from_data(const SpectrumData& data, int k) {
  Spectrum sp;
  sp.drive = data.drive;
  for (std::size_t i = 0; i < data.larmor.size(); ++i) {
    SpectrumRow r;
    r.param = data.larmor[i];
    r.nuclei.push_back({data.iz[i], 0.0, 0.0});
    sp.rows.push_back(r);
  }
  const auto crossings = find_reversals(sp);
  if (crossings.empty()) throw PreconditionError("fit_couplings: spectrum has no <2I_z> sign reversal");
  const auto falling = sharp_reversals(crossings, 0.0);
  const Crossing c = steepest_reversal(falling.empty() ? crossings : falling);
  double width = 0.0;
  try {
    width = measure_linewidth(sp, c.param, 0, false).peak_to_peak;
  } catch (const ResolutionError&) {
    // unresolved: start from a_par = 0 and let the fit find it
  }
  const double resonance = kTwoPi * k / data.drive.t_reset;
  const double reversal = resonance - std::abs(resonance - c.param);
  return seed_from_features(reversal / kTwoPi, width / kTwoPi, data.drive.t_reset, k);
}

}  // namespace detail

/// Least-squares (a_perp, a_par^2[, offset]) fit of `data` with a single-nucleus
/// model, resonance index `k`. Steps are accepted only when they lower the
/// residual. a_par^2 is kept >= 0; intervals are normal-approximation ones
/// mapped through the square root, so a_par's interval may start at 0.
inline FitResult fit_couplings(const SpectrumData& data, int k, const FitOptions& opts = {}) {
  validate(data.drive);
  if (data.larmor.size() != data.iz.size()) throw PreconditionError("fit_couplings: size mismatch");
  if (data.larmor.size() < kMinFitPoints) {
    throw PreconditionError("fit_couplings: need at least " + std::to_string(kMinFitPoints) +
                            " spectrum rows");
  }
  FitResult res;
  res.seed = detail::seed_from_data(data, k);
  const double lo = data.larmor.front(), hi = data.larmor.back();
  const double predicted = kTwoPi * k / data.drive.t_reset -
                           reversal_shift(res.seed.a_perp, 0.5 * (lo + hi));
  if (predicted < lo || predicted > hi) {
    throw PreconditionError("fit_couplings: spectrum does not bracket the k = " +
                            std::to_string(k) + " reversal");
  }

  // Scaled unknowns u = (a_perp / s0, a_par^2 / s1, offset / s2).
  const double s0 = std::max(res.seed.a_perp, kTwoPi * 100.0);
  const double s1 = std::max(res.seed.a_par * res.seed.a_par, std::pow(kTwoPi * 100.0, 2));
  const double s2 = kTwoPi * 10.0;
  const Eigen::Index np = opts.fit_larmor_offset ? 3 : 2;
  Eigen::VectorXd u(np);
  u(0) = res.seed.a_perp / s0;
  u(1) = res.seed.a_par * res.seed.a_par / s1;
  if (np == 3) u(2) = 0.0;

  const Eigen::VectorXd y = detail::observed(data);
  auto project = [](Eigen::VectorXd v) {
    v(0) = std::abs(v(0));
    v(1) = std::max(v(1), 0.0);
    return v;
  };
  auto residual_at = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return detail::simulate_iz(data, s0 * v(0), std::sqrt(s1 * v(1)),
                               np == 3 ? s2 * v(2) : 0.0, opts.threads) - y;
  };
  // Central differences; at the a_par^2 = 0 bound a one-sided step.
  auto jacobian = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd j(static_cast<Eigen::Index>(y.size()), np);
    for (Eigen::Index p = 0; p < np; ++p) {
      const double h = 1e-5 * std::max(1.0, std::abs(v(p)));
      Eigen::VectorXd up = v, dn = v;
      up(p) += h;
      dn(p) -= h;
      if (p == 1 && dn(p) < 0.0) {
        j.col(p) = (residual_at(up) - residual_at(v)) / h;
      } else {
        j.col(p) = (residual_at(up) - residual_at(dn)) / (2.0 * h);
      }
    }
    return j;
  };

  const double n = static_cast<double>(y.size());
  Eigen::VectorXd r = residual_at(u);
  double cost = r.squaredNorm();
  res.residual_history.push_back(std::sqrt(cost / n));
  double lambda = 1e-3;
  Eigen::MatrixXd j = jacobian(u);

  while (res.iterations < opts.max_iterations) {
    if (std::sqrt(cost / n) < opts.residual_tol) {
      res.converged = true;
      break;
    }
    ++res.iterations;
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    Eigen::MatrixXd a = jtj;
    a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
    // a_par^2 sitting on its bound and pushed further down is held fixed.
    Eigen::VectorXd rhs = g;
    if (u(1) <= 0.0 && g(1) > 0.0) {
      a.row(1).setZero();
      a.col(1).setZero();
      a(1, 1) = 1.0;
      rhs(1) = 0.0;
    }
    const Eigen::VectorXd trial = project(u - a.ldlt().solve(rhs));
    const double step = (trial - u).norm() / std::max(u.norm(), 1e-12);
    const Eigen::VectorXd r_trial = residual_at(trial);
    const double c_trial = r_trial.squaredNorm();
    if (c_trial < cost) {
      const bool stalled = cost - c_trial < opts.relative_cost_tol * cost;
      u = trial;
      r = r_trial;
      cost = c_trial;
      res.residual_history.push_back(std::sqrt(cost / n));
      lambda = std::max(lambda / 3.0, 1e-9);
      if (step < opts.relative_step_tol || stalled) {
        res.converged = true;
        break;
      }
      j = jacobian(u);
    } else {
      // A rejected step this small means the minimum is reached to rounding.
      if (step < opts.relative_step_tol) {
        res.converged = true;
        break;
      }
      lambda *= 4.0;
    }
  }

  res.a_perp = s0 * u(0);
  res.a_par = std::sqrt(s1 * u(1));
  res.larmor_offset = np == 3 ? s2 * u(2) : 0.0;
  res.residual = std::sqrt(cost / n);

  // Normal-approximation intervals from the Gauss-Newton covariance.
  const double dof = std::max(1.0, n - static_cast<double>(np));
  const double sigma = opts.noise_sigma.value_or(std::max(std::sqrt(cost / dof), 1e-6));
  const Eigen::MatrixXd cov =
      sigma * sigma * (j.transpose() * j).completeOrthogonalDecomposition().pseudoInverse();
  auto half = [&](Eigen::Index p) {
    const double v = cov(p, p);
    return v > 0.0 ? opts.confidence_z * std::sqrt(v) : std::numeric_limits<double>::infinity();
  };
  res.a_perp_ci = {s0 * std::max(0.0, u(0) - half(0)), s0 * (u(0) + half(0))};
  res.a_par_ci = {std::sqrt(s1 * std::max(0.0, u(1) - half(1))), std::sqrt(s1 * (u(1) + half(1)))};
  if (np == 3) res.larmor_offset_ci = {s2 * (u(2) - half(2)), s2 * (u(2) + half(2))};

  if (!res.converged) throw FitNotConverged(res);
  return res;
}

inline FitResult fit_couplings(const Spectrum& spectrum, int k, const FitOptions& opts = {}) {
  return fit_couplings(spectrum_data(spectrum), k, opts);
}

}  // namespace resetpol
