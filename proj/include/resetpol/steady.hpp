// Fixed points and convergence structure of a one-cycle channel.

#pragma once

#include "resetpol/channel.hpp"

#include <optional>
#include <vector>

namespace resetpol {

/// Eigenvalues within this distance of 1 count as fixed-point eigenvalues.
inline constexpr double kFixedPointEigenTol = 1e-9;
/// Negative density-matrix eigenvalues down to this value are clipped to zero.
inline constexpr double kPositivityClip = -1e-10;

struct SpectralInfo {
  std::vector<cplx> eigenvalues;  // sorted by modulus, descending
  double gap = 0.0;               // 1 - |lambda_2|, clamped to [0, 1]
  std::optional<double> tau_converge;  // t_reset / gap, absent when gap == 0
};

struct SteadyStateResult {
  Matrix rho_ss;
  double residual = 0.0;  // max |T(rho) - rho|
  double gap = 0.0;
  std::optional<double> tau_converge;
  std::vector<Polarisation> nuclei;
  bool power_iteration = false;  // true when the dense eigenvector was rejected
};

/// More than one eigenvalue within kFixedPointEigenTol of 1. `witnesses` are
/// traceless Hermitian observables X with T^dagger(X) = X, i.e. conserved
/// quantities that make the fixed point depend on the initial state.
class DegenerateFixedPoint : public NumericalError {
 public:
  DegenerateFixedPoint(std::size_t multiplicity, std::vector<Matrix> witnesses)
      : NumericalError("steady_state: fixed-point space has dimension " +
                       std::to_string(multiplicity)),
        multiplicity_(multiplicity),
        witnesses_(std::move(witnesses)) {}

  [[nodiscard]] std::size_t multiplicity() const { return multiplicity_; }
  [[nodiscard]] const std::vector<Matrix>& witnesses() const { return witnesses_; }

 private:
  std::size_t multiplicity_;
  std::vector<Matrix> witnesses_;
};

inline SpectralInfo spectral_gap(const QuantumChannel& channel) {
  const Eigen::ComplexEigenSolver<Matrix> eig(channel.superop, false);
  if (eig.info() != Eigen::Success) throw NumericalError("spectral_gap: eigensolver failed");
  SpectralInfo info;
  info.eigenvalues.assign(eig.eigenvalues().begin(), eig.eigenvalues().end());
  std::stable_sort(info.eigenvalues.begin(), info.eigenvalues.end(),
                   [](cplx a, cplx b) { return std::abs(a) > std::abs(b); });
  const double second = info.eigenvalues.size() > 1 ? std::abs(info.eigenvalues[1]) : 0.0;
  info.gap = std::clamp(1.0 - second, 0.0, 1.0);
  if (info.gap > 0.0) info.tau_converge = channel.t_reset / info.gap;
  return info;
}

namespace detail {

inline double fixed_point_residual(const QuantumChannel& channel, const Matrix& rho) {
  const Matrix next = num::unvec(channel.superop * num::vec(rho), channel.dim);
  return num::max_abs(next - rho);
}

/// Hermitise, clip tiny negative eigenvalues, renormalise.
inline Matrix to_density_matrix(const Matrix& raw) {
  const cplx tr = raw.trace();
  if (std::abs(tr) < 1e-300) throw NumericalError("steady_state: fixed point has zero trace");
  const Matrix h = num::hermitian_part(raw / tr);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  Eigen::VectorXd vals = eig.eigenvalues();
  if (vals.minCoeff() < kPositivityClip) {
    throw NumericalError("steady_state: fixed point has eigenvalue " +
                         std::to_string(vals.minCoeff()) + " below the clipping threshold");
  }
  vals = vals.cwiseMax(0.0);
  Matrix rho = eig.eigenvectors() * vals.cast<cplx>().asDiagonal() * eig.eigenvectors().adjoint();
  return num::hermitian_part(rho / rho.trace().real());
}

/// Fully mixed state pushed through T^(2^k). Capped at 2^40 cycles: rounding
/// puts unit-modulus eigenvalues a few ulp above 1, and repeated squaring
/// would otherwise amplify them without bound.
inline Matrix power_iteration_fixed_point(const QuantumChannel& channel) {
  Matrix p = channel.superop;
  const Eigen::Index d = channel.dim;
  Vector v = num::vec(fully_mixed(d));
  for (int k = 0; k < 40; ++k) {
    Vector next = p * v;
    next /= num::unvec(next, d).trace();
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (change < 1e-15) break;
    p = p * p;
  }
  return num::unvec(v, d);
}

inline std::vector<Matrix> conserved_witnesses(const QuantumChannel& channel) {
  const Eigen::Index d = channel.dim;
  const Eigen::ComplexEigenSolver<Matrix> eig(channel.superop.adjoint());
  // Orthonormal basis of the left fixed space, with vec(I) projected out.
  std::vector<Vector> basis{num::vec(num::identity(d)) / std::sqrt(static_cast<double>(d))};
  std::vector<Matrix> out;
  for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k) {
    if (std::abs(eig.eigenvalues()(k) - 1.0) > kFixedPointEigenTol) continue;
    Vector v = eig.eigenvectors().col(k);
    for (const auto& b : basis) v -= b.dot(v) * b;
    if (v.norm() < 1e-8) continue;
    v /= v.norm();
    basis.push_back(v);
    Matrix w = num::hermitian_part(num::unvec(v, d));
    if (num::max_abs(w) < 1e-8) w = num::hermitian_part(kI * num::unvec(v, d));
    out.push_back(w / num::max_abs(w));
  }
  return out;
}

}  // namespace detail

/// Fixed point of the channel with eigenvalue nearest 1.
inline SteadyStateResult steady_state(const QuantumChannel& channel, double tol = 1e-10) {
  const Eigen::ComplexEigenSolver<Matrix> eig(channel.superop);
  if (eig.info() != Eigen::Success) throw NumericalError("steady_state: eigensolver failed");
  const auto& vals = eig.eigenvalues();

  std::size_t near_one = 0;
  Eigen::Index best = 0;
  for (Eigen::Index k = 0; k < vals.size(); ++k) {
    if (std::abs(vals(k) - 1.0) <= kFixedPointEigenTol) ++near_one;
    if (std::abs(vals(k) - 1.0) < std::abs(vals(best) - 1.0)) best = k;
  }
  if (near_one > 1) throw DegenerateFixedPoint(near_one, detail::conserved_witnesses(channel));

  SteadyStateResult result;
  bool accepted = false;
  try {
    result.rho_ss = detail::to_density_matrix(num::unvec(eig.eigenvectors().col(best), channel.dim));
    result.residual = detail::fixed_point_residual(channel, result.rho_ss);
    accepted = result.residual <= tol;
  } catch (const NumericalError&) {
    accepted = false;
  }
  if (!accepted) {
    result.rho_ss = detail::to_density_matrix(detail::power_iteration_fixed_point(channel));
    result.residual = detail::fixed_point_residual(channel, result.rho_ss);
    result.power_iteration = true;
    if (result.residual > tol) {
      throw NumericalError("steady_state: residual " + std::to_string(result.residual) +
                           " exceeds tolerance");
    }
  }

  const SpectralInfo spec = spectral_gap(channel);
  result.gap = spec.gap;
  result.tau_converge = spec.tau_converge;
  result.nuclei = observables(result.rho_ss);
  return result;
}

/// Fixed point reached from the fully mixed state; defined even when the
/// fixed-point space is degenerate.
inline Matrix steady_state_from_mixed(const QuantumChannel& channel) {
  return detail::to_density_matrix(detail::power_iteration_fixed_point(channel));
}

}  // namespace resetpol
