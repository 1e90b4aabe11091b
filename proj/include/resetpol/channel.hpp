// One-cycle nuclear channel: evolve electron and nuclei jointly for t_reset,
// trace out the electron and re-inject it in |-x>.
//
// Superoperators use the column-stacking convention, vec(rho)[i + j*d] = rho(i, j),
// so vec(A rho B) = (B^T kron A) vec(rho).

#pragma once

#include "resetpol/model.hpp"
#include "resetpol/observables.hpp"

#include <array>
#include <functional>
#include <limits>
#include <vector>

namespace resetpol {

enum class ChannelKind { unitary_cycle, lindblad_cycle, perturbative, generic };

struct QuantumChannel {
  Eigen::Index dim = 0;  // nuclear Hilbert dimension
  Matrix superop;        // dim^2 x dim^2
  ChannelKind kind = ChannelKind::generic;
  double t_reset = 0.0;  // duration of one application, s
};

/// Builds the superoperator of a linear map by applying it to matrix units.
inline QuantumChannel channel_from_map(Eigen::Index dim,
                                       const std::function<Matrix(const Matrix&)>& map,
                                       ChannelKind kind, double t_reset) {
  QuantumChannel ch{dim, Matrix::Zero(dim * dim, dim * dim), kind, t_reset};
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      Matrix unit = Matrix::Zero(dim, dim);
      unit(i, j) = 1.0;
      ch.superop.col(i + j * dim) = num::vec(map(unit));
    }
  }
  return ch;
}

inline QuantumChannel identity_channel(Eigen::Index dim, double t_reset = 0.0) {
  return {dim, Matrix::Identity(dim * dim, dim * dim), ChannelKind::generic, t_reset};
}

/// rho -> U rho U^dagger.
inline QuantumChannel unitary_conjugation_channel(const Matrix& u, double t_reset = 0.0) {
  return {u.rows(), num::sandwich_superop(u, u.adjoint()), ChannelKind::generic, t_reset};
}

/// Electron reset state |-x><-x| in the dressed basis.
inline Matrix reset_projector() {
  const Vector m = dressed_state(Dressed::minus);
  return m * m.adjoint();
}

namespace detail {

inline Matrix trace_out_electron(const Matrix& joint) {
  const auto nd = static_cast<int>(joint.rows() / 2);
  const std::array<int, 2> dims{2, nd};
  const std::array<int, 1> keep{1};
  return num::partial_trace(joint, dims, keep);
}

inline void require_coupled_spec(const SystemSpec& system, const DriveSpec& drive) {
  validate(system);
  validate(drive);
}

}  // namespace detail

/// T(rho) = Tr_e[U (|-x><-x| kron rho) U^dagger], U = exp(-i H t_reset).
inline QuantumChannel unitary_cycle_channel(const SystemSpec& system, const DriveSpec& drive) {
  detail::require_coupled_spec(system, drive);
  const Matrix u = num::expm_hermitian(build_hamiltonian(system, drive), drive.t_reset);
  const Matrix u_dag = u.adjoint();
  const Matrix reset = reset_projector();
  const Eigen::Index nd = ops::nuclear_dim(system.nuclei.size());
  return channel_from_map(
      nd,
      [&](const Matrix& rho) {
        return detail::trace_out_electron(u * num::kron(reset, rho) * u_dag);
      },
      ChannelKind::unitary_cycle, drive.t_reset);
}

inline bool has_dephasing(const SystemSpec& system, const DriveSpec& drive) {
  if (drive.t2e && std::isfinite(*drive.t2e)) return true;
  for (const auto& n : system.nuclei) {
    if (n.t2n && std::isfinite(*n.t2n)) return true;
  }
  return false;
}

/// Vectorised Lindblad generator on the joint space: coherent part plus
/// electron dephasing (rate 2/T2e, jump sigma_x for lab-frame noise or
/// sigma_z for dressed-frame noise) and nuclear dephasing (jump I_z^i, rate
/// 2/T2n_i). Coherences between the +-1/2 eigenstates of a jump operator then
/// decay as exp(-t/T2).
inline Matrix joint_lindbladian(const SystemSpec& system, const DriveSpec& drive) {
  const Matrix h = build_hamiltonian(system, drive);
  const Eigen::Index d = h.rows();
  const Matrix id = num::identity(d);
  Matrix l = -kI * (num::kron(id, h) - num::kron(h.transpose(), id));

  auto add_dephasing = [&](const Matrix& jump, double rate) {
    const Matrix jj = jump.adjoint() * jump;
    l += rate * (num::kron(jump.conjugate(), jump) - 0.5 * num::kron(id, jj) -
                 0.5 * num::kron(jj.transpose(), id));
  };

  const std::size_t n = system.nuclei.size();
  if (drive.t2e && std::isfinite(*drive.t2e)) {
    const Axis axis = drive.t2e_frame == DephasingFrame::lab ? Axis::x : Axis::z;
    add_dephasing(ops::joint_electron(axis, n), 2.0 / *drive.t2e);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t2n = system.nuclei[i].t2n;
    if (t2n && std::isfinite(*t2n)) add_dephasing(ops::joint_nuclear(Axis::z, i, n), 2.0 / *t2n);
  }
  return l;
}

/// Same cycle as unitary_cycle_channel, with the intra-cycle evolution given
/// by the exponential of the vectorised Lindblad generator.
inline QuantumChannel lindblad_cycle_channel(const SystemSpec& system, const DriveSpec& drive) {
  detail::require_coupled_spec(system, drive);
  if (!has_dephasing(system, drive)) {
    throw PreconditionError(
        "lindblad_cycle_channel: no finite dephasing time present; use unitary_cycle_channel");
  }
  const Matrix prop = num::expm_general(joint_lindbladian(system, drive) * drive.t_reset);
  const Eigen::Index jd = 2 * ops::nuclear_dim(system.nuclei.size());
  const Matrix reset = reset_projector();
  return channel_from_map(
      ops::nuclear_dim(system.nuclei.size()),
      [&](const Matrix& rho) {
        const Vector out = prop * num::vec(num::kron(reset, rho));
        return detail::trace_out_electron(num::unvec(out, jd));
      },
      ChannelKind::lindblad_cycle, drive.t_reset);
}

/// Unitary cycle when no finite dephasing time is configured, Lindblad cycle otherwise.
inline QuantumChannel cycle_channel(const SystemSpec& system, const DriveSpec& drive) {
  return has_dephasing(system, drive) ? lindblad_cycle_channel(system, drive)
                                      : unitary_cycle_channel(system, drive);
}

/// Applies the channel; output is Hermitised and trace-normalised when the
/// input has non-zero trace.
inline Matrix apply(const QuantumChannel& channel, const Matrix& rho) {
  if (rho.rows() != channel.dim || rho.cols() != channel.dim) {
    throw PreconditionError("apply: state dimension does not match channel");
  }
  Matrix out = num::unvec(channel.superop * num::vec(rho), channel.dim);
  out = num::hermitian_part(out);
  const cplx tr = out.trace();
  if (std::abs(tr) > 1e-300) out /= tr.real();
  return out;
}

struct TrajectoryRow {
  std::size_t cycle = 0;
  double time = 0.0;  // s
  std::vector<Polarisation> nuclei;
};

using Trajectory = std::vector<TrajectoryRow>;

/// Iterates the channel n_cycles times from rho0, recording per-nucleus
/// observables after every cycle (row 0 is the initial state).
inline Trajectory evolve(const QuantumChannel& channel, const Matrix& rho0, std::size_t n_cycles) {
  if (rho0.rows() != channel.dim || rho0.cols() != channel.dim) {
    throw PreconditionError("evolve: state dimension does not match channel");
  }
  Trajectory out;
  out.reserve(n_cycles + 1);
  Matrix rho = rho0;
  for (std::size_t k = 0;; ++k) {
    out.push_back({k, static_cast<double>(k) * channel.t_reset, observables(rho)});
    if (k == n_cycles) break;
    rho = resetpol::apply(channel, rho);
  }
  return out;
}

/// Choi matrix J = sum_ij |i><j| kron T(|i><j|).
inline Matrix choi_matrix(const QuantumChannel& channel) {
  const Eigen::Index d = channel.dim;
  Matrix choi = Matrix::Zero(d * d, d * d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      choi.block(i * d, j * d, d, d) = num::unvec(channel.superop.col(i + j * d), d);
    }
  }
  return choi;
}

struct CptpReport {
  double trace_error = 0.0;        // max |Tr T(E_ij) - delta_ij|
  double hermiticity_error = 0.0;  // max |T(E_ji) - T(E_ij)^dagger|
  double choi_min_eigenvalue = 0.0;
  bool trace_preserving = false;
  bool hermiticity_preserving = false;
  bool completely_positive = false;

  [[nodiscard]] bool ok() const {
    return trace_preserving && hermiticity_preserving && completely_positive;
  }
};

inline CptpReport is_cptp(const QuantumChannel& channel, double tol = 1e-9) {
  const Eigen::Index d = channel.dim;
  CptpReport r;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const Matrix out = num::unvec(channel.superop.col(i + j * d), d);
      const cplx expected = i == j ? cplx{1.0} : cplx{0.0};
      r.trace_error = std::max(r.trace_error, std::abs(out.trace() - expected));
      const Matrix swapped = num::unvec(channel.superop.col(j + i * d), d);
      r.hermiticity_error = std::max(r.hermiticity_error, num::max_abs(swapped - out.adjoint()));
    }
  }
  const Matrix choi = choi_matrix(channel);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(num::hermitian_part(choi),
                                                  Eigen::EigenvaluesOnly);
  r.choi_min_eigenvalue = eig.eigenvalues().minCoeff();
  r.trace_preserving = r.trace_error <= tol;
  r.hermiticity_preserving = r.hermiticity_error <= tol;
  r.completely_positive = r.choi_min_eigenvalue >= -tol;
  return r;
}

}  // namespace resetpol
