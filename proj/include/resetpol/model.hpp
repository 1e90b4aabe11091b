// Physical scene: one driven electron (two dressed levels) coupled to one to
// three spin-1/2 nuclei.
//
// Units: every frequency is an angular frequency in rad/s and every time is in
// seconds. Conversion from user-facing Hz happens once, in io.hpp.
//
// Tensor order of the joint space is electron first, then nuclei 0..N-1.
// The electron factor is written in the dressed basis {|+x>, |-x>}, in which
// the drive term Omega*sigma_z is diagonal.

#pragma once

#include "resetpol/numerics.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace resetpol {

inline constexpr std::size_t kMaxNuclei = 3;

class UnsupportedDimension : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

struct NucleusSpec {
  double a_perp = 0.0;  // transverse hyperfine component, rad/s
  double a_par = 0.0;   // longitudinal hyperfine component, rad/s
  std::optional<double> t2n;              // nuclear dephasing time, s
  std::optional<double> larmor_override;  // effective Larmor, rad/s
};

struct SystemSpec {
  std::vector<NucleusSpec> nuclei;
  double gamma_b0 = 0.0;  // bare Larmor frequency, rad/s
};

/// Axis of electron dephasing. `lab` dephases the bare {|0>, |-1>} basis
/// (sigma_x in the dressed frame); `dressed` dephases {|+x>, |-x>}.
enum class DephasingFrame { lab, dressed };

struct DriveSpec {
  double omega = 0.0;    // dressed splitting, rad/s
  double t_reset = 0.0;  // reset period, s
  std::optional<double> t2e;  // electron dephasing time, s
  DephasingFrame t2e_frame = DephasingFrame::lab;
};

enum class Axis { x, y, z };

enum class Dressed { plus, minus };

enum class ElectronBasis {
  dressed,  // {|+x>, |-x>}, the basis used by build_hamiltonian
  bare,     // {|m_s=0>, |m_s=-1>}
};

inline double effective_larmor(double gamma_b0, double a_par) { return gamma_b0 - 0.5 * a_par; }

inline double larmor_of(const SystemSpec& system, std::size_t i) {
  const auto& n = system.nuclei.at(i);
  return n.larmor_override ? *n.larmor_override : effective_larmor(system.gamma_b0, n.a_par);
}

inline void validate(const SystemSpec& system) {
  if (system.nuclei.empty()) throw PreconditionError("system: at least one nucleus required");
  if (system.nuclei.size() > kMaxNuclei) {
    throw UnsupportedDimension("system: at most " + std::to_string(kMaxNuclei) +
                               " nuclei are supported, got " +
                               std::to_string(system.nuclei.size()));
  }
  for (const auto& n : system.nuclei) {
    if (!(n.a_perp >= 0.0) || !std::isfinite(n.a_perp)) {
      throw PreconditionError("nucleus: a_perp must be finite and >= 0");
    }
    if (!std::isfinite(n.a_par)) throw PreconditionError("nucleus: a_par must be finite");
    if (n.t2n && !(*n.t2n > 0.0)) throw PreconditionError("nucleus: t2n must be > 0");
    if (n.larmor_override && !std::isfinite(*n.larmor_override)) {
      throw PreconditionError("nucleus: larmor override must be finite");
    }
  }
  if (!std::isfinite(system.gamma_b0)) throw PreconditionError("system: gamma_b0 must be finite");
}

inline void validate(const DriveSpec& drive) {
  if (!(drive.omega >= 0.0) || !std::isfinite(drive.omega)) {
    throw PreconditionError("drive: omega must be finite and >= 0");
  }
  if (!(drive.t_reset > 0.0) || !std::isfinite(drive.t_reset)) {
    throw PreconditionError("drive: t_reset must be finite and > 0");
  }
  if (drive.t2e && !(*drive.t2e > 0.0)) throw PreconditionError("drive: t2e must be > 0");
}

namespace ops {

/// Spin-1/2 operator with eigenvalues +-1/2; |up> is the first basis state.
inline Matrix spin_half(Axis axis) {
  Matrix m = Matrix::Zero(2, 2);
  switch (axis) {
    case Axis::x:
      m(0, 1) = m(1, 0) = 0.5;
      break;
    case Axis::y:
      m(0, 1) = -0.5 * kI;
      m(1, 0) = 0.5 * kI;
      break;
    case Axis::z:
      m(0, 0) = 0.5;
      m(1, 1) = -0.5;
      break;
  }
  return m;
}

/// Dressed-frame electron operator sigma_axis expressed in `basis`.
/// sigma_z = (|+x><+x| - |-x><-x|)/2, sigma_x flips |+x> <-> |-x> with
/// amplitude 1/2.
inline Matrix electron(Axis axis, ElectronBasis basis = ElectronBasis::dressed) {
  const Matrix dressed = spin_half(axis);
  if (basis == ElectronBasis::dressed) return dressed;
  // Columns are |+x>, |-x> in bare coordinates.
  Matrix h(2, 2);
  const double r = 1.0 / std::sqrt(2.0);
  h << r, r, r, -r;
  return h * dressed * h.adjoint();
}

/// Operator on the 2^n nuclear space acting as I_axis on nucleus i.
inline Matrix nuclear(Axis axis, std::size_t i, std::size_t n_nuclei) {
  if (i >= n_nuclei) throw PreconditionError("nuclear operator index out of range");
  Matrix out = Matrix::Identity(1, 1);
  for (std::size_t k = 0; k < n_nuclei; ++k) {
    out = num::kron(out, k == i ? spin_half(axis) : num::identity(2));
  }
  return out;
}

inline Eigen::Index nuclear_dim(std::size_t n_nuclei) { return Eigen::Index{1} << n_nuclei; }

/// Electron operator padded with identity on all nuclei.
inline Matrix joint_electron(Axis axis, std::size_t n_nuclei) {
  return num::kron(electron(axis), num::identity(nuclear_dim(n_nuclei)));
}

/// Nuclear operator padded with identity on the electron.
inline Matrix joint_nuclear(Axis axis, std::size_t i, std::size_t n_nuclei) {
  return num::kron(num::identity(2), nuclear(axis, i, n_nuclei));
}

}  // namespace ops

/// |+-x> = (|0> +- |-1>)/sqrt(2). In the dressed basis these are unit vectors.
inline Vector dressed_state(Dressed sign, ElectronBasis basis = ElectronBasis::dressed) {
  Vector v = Vector::Zero(2);
  if (basis == ElectronBasis::dressed) {
    v(sign == Dressed::plus ? 0 : 1) = 1.0;
  } else {
    const double r = 1.0 / std::sqrt(2.0);
    v(0) = r;
    v(1) = sign == Dressed::plus ? r : -r;
  }
  return v;
}

/// Free part Omega*sigma_z + sum_i omega_n_i I_z^i on the joint space.
inline Matrix free_hamiltonian(const SystemSpec& system, const DriveSpec& drive) {
  const std::size_t n = system.nuclei.size();
  Matrix h = drive.omega * ops::joint_electron(Axis::z, n);
  for (std::size_t i = 0; i < n; ++i) h += larmor_of(system, i) * ops::joint_nuclear(Axis::z, i, n);
  return h;
}

/// Electron-nuclear coupling sigma_x * sum_i (a_par_i I_z^i + a_perp_i I_x^i),
/// optionally restricted to the longitudinal or transverse part.
inline Matrix coupling_hamiltonian(const SystemSpec& system, bool longitudinal = true,
                                   bool transverse = true) {
  const std::size_t n = system.nuclei.size();
  Matrix nuc = Matrix::Zero(ops::nuclear_dim(n), ops::nuclear_dim(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& spec = system.nuclei[i];
    if (longitudinal) nuc += spec.a_par * ops::nuclear(Axis::z, i, n);
    if (transverse) nuc += spec.a_perp * ops::nuclear(Axis::x, i, n);
  }
  return num::kron(ops::electron(Axis::x), nuc);
}

/// H = Omega sigma_z + sum_i omega_n_i I_z^i + sigma_x sum_i (a_par_i I_z^i + a_perp_i I_x^i).
inline Matrix build_hamiltonian(const SystemSpec& system, const DriveSpec& drive) {
  validate(system);
  validate(drive);
  return free_hamiltonian(system, drive) + coupling_hamiltonian(system);
}

}  // namespace resetpol
