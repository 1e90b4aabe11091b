// Closed-form predictions for the reset-cycle polarisation, evaluated
// independently of the exact channel so that each can be cross-checked
// against it, and a second-order (Dyson) approximation of the channel itself.
//
// Notation: Delta_pm = Omega +- omega_n; delta = omega_n - 2 pi k / t_reset.

#pragma once

#include "resetpol/channel.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace resetpol {

/// A closed form was evaluated exactly on one of its poles.
class SingularPrediction : public PreconditionError {
 public:
  SingularPrediction(const std::string& what, double limit)
      : PreconditionError(what), limit_(limit) {}
  /// Value the prediction tends to at the pole, when one exists (NaN otherwise).
  [[nodiscard]] double limit() const { return limit_; }

 private:
  double limit_;
};

enum class PredictionKind {
  far_detuned_polarisation,
  reversal_shift,
  linewidth,
  convergence_rate,
  near_resonant_profile,
  golden_rule_ratio,
};

struct ClosedFormPrediction {
  PredictionKind kind;
  std::vector<double> values;
  std::string unit;
  std::string validity_note;
};

namespace detail {

inline double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

/// 2 (1 - cos(d t)) / d^2, continuous through d = 0 (value t^2).
inline double detuning_weight(double detuning, double t) {
  const double s = t * sinc(0.5 * detuning * t);
  return s * s;
}

inline double polarisation_from_ratio(double up_over_down) {
  return (up_over_down - 1.0) / (up_over_down + 1.0);
}

}  // namespace detail

/// Steady <2I_z> far from the sharp reversals, from the population ratio
/// r = (1 - cos Delta_+ t) / (1 - cos Delta_- t) of |up> to |down>.
/// Throws SingularPrediction (limit +1) when Delta_- t is a multiple of 2 pi.
inline double far_detuned_polarisation(double omega, double omega_n, double t_reset) {
  const double num = 1.0 - std::cos((omega + omega_n) * t_reset);
  const double den = 1.0 - std::cos((omega - omega_n) * t_reset);
  if (den <= 1e-14 * std::max(1.0, num)) {
    throw SingularPrediction("far_detuned_polarisation: Delta_- t_reset is a multiple of 2 pi",
                             1.0);
  }
  return detail::polarisation_from_ratio(num / den);
}

/// Same population balance with the full golden-rule weights
/// 2(1 - cos Delta t)/Delta^2 for each process.
inline double golden_rule_polarisation(double omega, double omega_n, double t_reset) {
  const double flip = detail::detuning_weight(omega + omega_n, t_reset);
  const double flop = detail::detuning_weight(omega - omega_n, t_reset);
  if (flop <= 1e-30 * std::max(1.0, flip)) {
    throw SingularPrediction("golden_rule_polarisation: flip-flop probability vanishes", 1.0);
  }
  return detail::polarisation_from_ratio(flip / flop);
}

/// Offset a_perp^2 / (8 omega_n) of the sharp reversal below 2 pi k / t_reset.
inline double reversal_shift(double a_perp, double omega_n) {
  if (omega_n == 0.0) throw SingularPrediction("reversal_shift: omega_n = 0", NAN);
  return a_perp * a_perp / (8.0 * omega_n);
}

/// Predicted width a_par^2 t_reset of the sharp reversal.
inline double linewidth(double a_par, double t_reset) { return a_par * a_par * t_reset; }

/// Predicted convergence rate a_par^2 t_reset / 16 (per unit time).
inline double convergence_rate(double a_par, double t_reset) {
  return a_par * a_par * t_reset / 16.0;
}

struct NearResonantValue {
  double ratio = 0.0;  // population ratio R of |down> to |up>
  std::optional<double> polarisation;  // absent where R <= 0 (inside the linewidth)
  bool valid = false;
};

/// Near-resonant reversal profile with R = (delta - s + w/2) / (delta - s - w/2),
/// s = a_perp^2/(8 omega_n), w = a_par^2 t_reset. <2I_z> = (1 - R)/(1 + R)
/// where R > 0; inside |delta - s| < w/2 the ratio is negative and the
/// asymptotic form has broken down, which is reported through `valid`.
inline NearResonantValue near_resonant_profile(double delta, double a_perp, double a_par,
                                               double omega_n, double t_reset) {
  const double s = reversal_shift(a_perp, omega_n);
  const double w = linewidth(a_par, t_reset);
  const double den = delta - s - 0.5 * w;
  if (den == 0.0) {
    throw SingularPrediction("near_resonant_profile: pole at delta = s + w/2", NAN);
  }
  NearResonantValue v;
  v.ratio = (delta - s + 0.5 * w) / den;
  v.valid = v.ratio > 0.0;
  if (v.valid) v.polarisation = (1.0 - v.ratio) / (1.0 + v.ratio);
  return v;
}

struct GoldenRuleRates {
  double flip_flop = 0.0;   // |-,up> <-> |+,down>, detuning Delta_-
  double flip_flip = 0.0;   // |-,down> <-> |+,up>, detuning Delta_+
};

/// First-order per-cycle transition probabilities (a_perp/4)^2 2(1 - cos Delta t)/Delta^2.
inline GoldenRuleRates golden_rule_rates(double omega, double omega_n, double a_perp,
                                         double t_reset) {
  const double amp2 = 0.0625 * a_perp * a_perp;
  return {amp2 * detail::detuning_weight(omega - omega_n, t_reset),
          amp2 * detail::detuning_weight(omega + omega_n, t_reset)};
}

/// Predictions for nucleus `i` at the drive's operating point, with the
/// resonance index k chosen nearest to omega_n t_reset / 2 pi.
inline std::vector<ClosedFormPrediction> predictions(const SystemSpec& system,
                                                     const DriveSpec& drive, std::size_t i = 0) {
  const auto& n = system.nuclei.at(i);
  const double wn = larmor_of(system, i);
  std::vector<ClosedFormPrediction> out;
  out.push_back({PredictionKind::reversal_shift, {reversal_shift(n.a_perp, wn)}, "rad/s",
                 "offset of the sharp reversal below 2 pi k / t_reset"});
  out.push_back({PredictionKind::linewidth, {linewidth(n.a_par, drive.t_reset)}, "rad/s",
                 "width of the sharp reversal; approximate, broadened at small Omega t_reset"});
  out.push_back({PredictionKind::convergence_rate, {convergence_rate(n.a_par, drive.t_reset)},
                 "1/s", "build-up rate at the reversal trough"});
  const auto rates = golden_rule_rates(drive.omega, wn, n.a_perp, drive.t_reset);
  out.push_back({PredictionKind::golden_rule_ratio, {rates.flip_flip, rates.flip_flop},
                 "probability per cycle", "first order in a_perp"});
  try {
    out.push_back({PredictionKind::far_detuned_polarisation,
                   {far_detuned_polarisation(drive.omega, wn, drive.t_reset),
                    golden_rule_polarisation(drive.omega, wn, drive.t_reset)},
                   "<2I_z>",
                   "valid when |delta| is large compared with the linewidth; the second value "
                   "keeps the 1/Delta^2 weights"});
  } catch (const SingularPrediction&) {
    // at an exact resonance the far-detuned form does not apply
  }
  return out;
}

/// Second-order Dyson expansion of the reset cycle, split by coupling order.
/// `second_cross` collects every term proportional to a_par * a_perp.
struct PerturbativeExpansion {
  QuantumChannel free_rotation;
  QuantumChannel first_order;
  QuantumChannel second_longitudinal;
  QuantumChannel second_transverse;
  QuantumChannel second_cross;

  [[nodiscard]] QuantumChannel total() const {
    QuantumChannel t = free_rotation;
    t.superop += first_order.superop + second_longitudinal.superop +
                 second_transverse.superop + second_cross.superop;
    t.kind = ChannelKind::perturbative;
    return t;
  }
};

namespace detail {

/// Time-ordered integrals of the propagator expansion via the exponential of
/// a block upper-triangular generator (Van Loan):
/// exp([[X, Y1, 0], [0, X, Y2], [0, 0, X]] T) has
///   block (0,1) = int_0^T e^{X(T-s)} Y1 e^{Xs} ds
///   block (0,2) = int_0^T int_0^s1 e^{X(T-s1)} Y1 e^{X(s1-s2)} Y2 e^{X s2} ds2 ds1.
struct DysonBlocks {
  Matrix zeroth;
  Matrix first;
  Matrix second;
};

inline DysonBlocks dyson_blocks(const Matrix& x, const Matrix& y1, const Matrix& y2, double t) {
  const Eigen::Index d = x.rows();
  Matrix gen = Matrix::Zero(3 * d, 3 * d);
  for (int k = 0; k < 3; ++k) gen.block(k * d, k * d, d, d) = x;
  gen.block(0, d, d, d) = y1;
  gen.block(d, 2 * d, d, d) = y2;
  const Matrix e = num::expm_general(gen * t);
  return {e.block(0, 0, d, d), e.block(0, d, d, d), e.block(0, 2 * d, d, d)};
}

}  // namespace detail

inline PerturbativeExpansion perturbative_expansion(const SystemSpec& system,
                                                    const DriveSpec& drive) {
  validate(system);
  validate(drive);
  const double t = drive.t_reset;
  const Matrix x = -kI * free_hamiltonian(system, drive);
  const Matrix v_par = -kI * coupling_hamiltonian(system, true, false);
  const Matrix v_perp = -kI * coupling_hamiltonian(system, false, true);

  const auto pp = detail::dyson_blocks(x, v_par, v_par, t);
  const auto tt = detail::dyson_blocks(x, v_perp, v_perp, t);
  const auto pt = detail::dyson_blocks(x, v_par, v_perp, t);
  const auto tp = detail::dyson_blocks(x, v_perp, v_par, t);

  const Matrix& u0 = pp.zeroth;
  const Matrix& u1_par = pp.first;
  const Matrix& u1_perp = tt.first;
  const Matrix& u2_par = pp.second;
  const Matrix& u2_perp = tt.second;
  const Matrix u2_cross = pt.second + tp.second;

  const Matrix reset = reset_projector();
  const Eigen::Index nd = ops::nuclear_dim(system.nuclei.size());

  // Tr_e[A (reset kron rho) B^dagger] for each term of the expansion.
  auto term = [&](std::initializer_list<std::pair<const Matrix*, const Matrix*>> pairs) {
    return channel_from_map(
        nd,
        [&](const Matrix& rho) {
          const Matrix joint = num::kron(reset, rho);
          Matrix acc = Matrix::Zero(joint.rows(), joint.cols());
          for (const auto& [a, b] : pairs) acc += (*a) * joint * b->adjoint();
          return detail::trace_out_electron(acc);
        },
        ChannelKind::perturbative, t);
  };

  const Matrix u1 = u1_par + u1_perp;
  return {
      term({{&u0, &u0}}),
      term({{&u1, &u0}, {&u0, &u1}}),
      term({{&u2_par, &u0}, {&u0, &u2_par}, {&u1_par, &u1_par}}),
      term({{&u2_perp, &u0}, {&u0, &u2_perp}, {&u1_perp, &u1_perp}}),
      term({{&u2_cross, &u0}, {&u0, &u2_cross}, {&u1_par, &u1_perp}, {&u1_perp, &u1_par}}),
  };
}

/// Channel accurate to second order in the couplings; its deviation from the
/// exact cycle channel scales as the third power of the coupling strength.
inline QuantumChannel perturbative_cycle_channel(const SystemSpec& system, const DriveSpec& drive) {
  return perturbative_expansion(system, drive).total();
}

}  // namespace resetpol
