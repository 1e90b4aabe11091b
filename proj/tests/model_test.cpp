#include "resetpol/model.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace resetpol;

namespace {

constexpr double kHz = kTwoPi * 1e3;

SystemSpec single(double a_perp, double a_par, double larmor) {
  SystemSpec s;
  s.nuclei.push_back({a_perp, a_par, std::nullopt, larmor});
  return s;
}

// Cyclic Jacobi eigenvalues of a real symmetric matrix.
std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a) {
  const auto n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = 0.5 * (a(q, q) - a(p, p)) / a(p, q);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1.0 / std::sqrt(t * t + 1), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev;
  for (Eigen::Index k = 0; k < n; ++k) ev.push_back(a(k, k));
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace

TEST(EffectiveLarmor, ZeroShift) { EXPECT_DOUBLE_EQ(effective_larmor(23.0 * kHz, 0.0), 23.0 * kHz); }

TEST(EffectiveLarmor, HalfLongitudinalCouplingSubtracted) {
  EXPECT_NEAR(effective_larmor(23.0 * kHz, 0.5 * kHz), 22.75 * kHz, 1e-9);
}

TEST(EffectiveLarmor, FirstNucleusSitsAtSweptValue) {
  // Axis convention omega_n = gamma_n B0 - a_par_1 / 2.
  SystemSpec s;
  const double swept = 22.7 * kHz;
  s.gamma_b0 = swept + 0.5 * 0.1 * kHz;
  s.nuclei.push_back({4 * kHz, 0.1 * kHz, std::nullopt, std::nullopt});
  s.nuclei.push_back({5 * kHz, 0.2 * kHz, std::nullopt, std::nullopt});
  EXPECT_NEAR(larmor_of(s, 0), swept, 1e-9);
  EXPECT_NEAR(larmor_of(s, 0) - larmor_of(s, 1), kTwoPi * 50.0, 1e-9);
}

TEST(BuildHamiltonian, DecoupledIsDiagonal) {
  const double omega = 2 * kHz, wn = 15 * kHz;
  const Matrix h = build_hamiltonian(single(0, 0, wn), {omega, 44e-6, std::nullopt});
  Matrix off = h;
  off.diagonal().setZero();
  EXPECT_EQ(num::max_abs(off), 0.0);
  std::vector<double> d;
  for (int k = 0; k < 4; ++k) d.push_back(h(k, k).real());
  std::sort(d.begin(), d.end());
  std::vector<double> expected{-(omega + wn) / 2, -(omega - wn) / 2, (omega - wn) / 2,
                               (omega + wn) / 2};
  std::sort(expected.begin(), expected.end());
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(d[k], expected[k], 1e-9);
}

TEST(BuildHamiltonian, StrongCouplingHermitianTraceless) {
  const Matrix h = build_hamiltonian(single(40 * kHz, 10 * kHz, 15 * kHz),
                                     {200 * kHz, 11e-6, std::nullopt});
  EXPECT_EQ(h.rows(), 4);
  EXPECT_TRUE(num::is_hermitian(h, 1e-12));
  EXPECT_LE(std::abs(h.trace()), 1e-9);
}

TEST(BuildHamiltonian, EigenvaluesMatchJacobiOracle) {
  SystemSpec s = single(40 * kHz, 10 * kHz, 15 * kHz);
  s.nuclei.push_back({7 * kHz, -3 * kHz, std::nullopt, 16 * kHz});
  const Matrix h = build_hamiltonian(s, {200 * kHz, 11e-6, std::nullopt});
  const Eigen::Index n = h.rows();
  Eigen::MatrixXd real_form(2 * n, 2 * n);
  real_form << h.real(), -h.imag(), h.imag(), h.real();
  const auto oracle = jacobi_eigenvalues(real_form);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  for (Eigen::Index k = 0; k < n; ++k) {
    EXPECT_NEAR(eig.eigenvalues()(k), oracle[2 * k], 1e-10 * std::max(1.0, std::abs(oracle[2 * k])));
    EXPECT_NEAR(eig.eigenvalues()(k), oracle[2 * k + 1], 1e-10 * std::max(1.0, std::abs(oracle[2 * k])));
  }
}

TEST(BuildHamiltonian, RejectsFourNuclei) {
  SystemSpec s;
  for (int k = 0; k < 4; ++k) s.nuclei.push_back({1 * kHz, 1 * kHz, std::nullopt, std::nullopt});
  EXPECT_THROW(build_hamiltonian(s, {1 * kHz, 1e-5, std::nullopt}), UnsupportedDimension);
}

TEST(BuildHamiltonian, RejectsInvalidSpecs) {
  EXPECT_THROW(build_hamiltonian(single(-1.0, 0, 1), {1, 1e-5, std::nullopt}), PreconditionError);
  EXPECT_THROW(build_hamiltonian(single(1, 0, 1), {1, 0.0, std::nullopt}), PreconditionError);
  EXPECT_THROW(build_hamiltonian(single(1, 0, 1), {1, 1e-5, -1.0}), PreconditionError);
  EXPECT_THROW(build_hamiltonian(SystemSpec{}, {1, 1e-5, std::nullopt}), PreconditionError);
}

TEST(BuildHamiltonian, RandomSpecsAreHermitian) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  std::uniform_int_distribution<int> count(1, 3);
  for (int trial = 0; trial < 100; ++trial) {
    SystemSpec s;
    s.gamma_b0 = u(rng) * kHz;
    const int n = count(rng);
    for (int k = 0; k < n; ++k) s.nuclei.push_back({u(rng) * kHz, (u(rng) - 25) * kHz, std::nullopt, std::nullopt});
    const Matrix h = build_hamiltonian(s, {u(rng) * kHz, 1e-5 + u(rng) * 1e-6, std::nullopt});
    EXPECT_EQ(h.rows(), Eigen::Index{2} << n);
    EXPECT_TRUE(num::is_hermitian(h, 1e-12));
  }
}

TEST(BuildHamiltonian, NoTransverseCouplingConservesEveryIz) {
  SystemSpec s = single(0, 3 * kHz, 20 * kHz);
  s.nuclei.push_back({0, -1 * kHz, std::nullopt, 21 * kHz});
  const Matrix h = build_hamiltonian(s, {5 * kHz, 1e-5, std::nullopt});
  for (std::size_t i = 0; i < 2; ++i) {
    const Matrix iz = ops::joint_nuclear(Axis::z, i, 2);
    EXPECT_LE(num::max_abs(h * iz - iz * h), 1e-12 * num::max_abs(h));
  }
}

TEST(BuildHamiltonian, TransverseBlockIsHomogeneous) {
  const DriveSpec d{5 * kHz, 1e-5, std::nullopt};
  const Matrix h0 = build_hamiltonian(single(0, 1 * kHz, 20 * kHz), d);
  const Matrix h1 = build_hamiltonian(single(2 * kHz, 1 * kHz, 20 * kHz), d);
  const Matrix h3 = build_hamiltonian(single(6 * kHz, 1 * kHz, 20 * kHz), d);
  EXPECT_LE(num::max_abs((h3 - h0) - 3.0 * (h1 - h0)), 1e-9);
}

TEST(DressedState, Orthonormal) {
  for (auto basis : {ElectronBasis::dressed, ElectronBasis::bare}) {
    const Vector p = dressed_state(Dressed::plus, basis), m = dressed_state(Dressed::minus, basis);
    EXPECT_LE(std::abs(p.dot(m)), 1e-15);
    EXPECT_NEAR(m.norm(), 1.0, 1e-15);
  }
}

TEST(DressedState, MinusIsSigmaZEigenstate) {
  for (auto basis : {ElectronBasis::dressed, ElectronBasis::bare}) {
    const Vector m = dressed_state(Dressed::minus, basis);
    EXPECT_LE((ops::electron(Axis::z, basis) * m + 0.5 * m).norm(), 1e-15);
  }
}

TEST(DressedState, SigmaXFlipsMinusToHalfPlus) {
  for (auto basis : {ElectronBasis::dressed, ElectronBasis::bare}) {
    const Vector m = dressed_state(Dressed::minus, basis);
    const Vector p = dressed_state(Dressed::plus, basis);
    EXPECT_LE((ops::electron(Axis::x, basis) * m - 0.5 * p).norm(), 1e-15);
  }
}

TEST(DressedState, BareCoordinatesFollowDefinition) {
  const Vector m = dressed_state(Dressed::minus, ElectronBasis::bare);
  EXPECT_NEAR(m(0).real(), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(m(1).real(), -1.0 / std::sqrt(2.0), 1e-15);
}
