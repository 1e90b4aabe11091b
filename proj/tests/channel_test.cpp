#include "resetpol/channel.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace resetpol;
using resetpol::testing::random_density;
using resetpol::testing::taylor_expm;

namespace {

constexpr double kHz = kTwoPi * 1e3;

SystemSpec single(double a_perp, double a_par, double larmor) {
  SystemSpec s;
  s.nuclei.push_back({a_perp, a_par, std::nullopt, larmor});
  return s;
}

SystemSpec random_system(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 2);
  SystemSpec s;
  s.gamma_b0 = (5 + 100 * u(rng)) * kHz;
  const int n = count(rng);
  for (int k = 0; k < n; ++k) {
    s.nuclei.push_back({50 * u(rng) * kHz, (20 * u(rng) - 10) * kHz, std::nullopt, std::nullopt});
  }
  return s;
}

DriveSpec random_drive(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {200 * u(rng) * kHz, (5 + 95 * u(rng)) * 1e-6, std::nullopt};
}

// Joint state, Taylor propagator, naive trace over the electron.
Matrix direct_cycle(const SystemSpec& s, const DriveSpec& d, const Matrix& rho) {
  const Matrix h = build_hamiltonian(s, d);
  const Matrix u = taylor_expm(-kI * h * d.t_reset);
  // |-x><-x| in the bare basis, rotated into the dressed basis used by H.
  const double r = 1.0 / std::sqrt(2.0);
  Matrix had(2, 2);
  had << r, r, r, -r;
  Matrix bare(2, 2);
  bare << 0.5, -0.5, -0.5, 0.5;
  const Matrix reset = had * bare * had;
  const Matrix joint = u * num::kron(reset, rho) * u.adjoint();
  const Eigen::Index nd = rho.rows();
  Matrix out = Matrix::Zero(nd, nd);
  for (Eigen::Index k = 0; k < nd; ++k)
    for (Eigen::Index l = 0; l < nd; ++l)
      for (Eigen::Index e = 0; e < 2; ++e) out(k, l) += joint(e * nd + k, e * nd + l);
  return out;
}

}  // namespace

TEST(UnitaryCycle, DecoupledNucleusJustPrecesses) {
  const double wn = 17 * kHz, t = 13e-6;
  const auto ch = unitary_cycle_channel(single(0, 0, wn), {3 * kHz, t, std::nullopt});
  const Matrix rot = num::expm_hermitian(wn * ops::spin_half(Axis::z), t);
  const auto expected = unitary_conjugation_channel(rot);
  EXPECT_LE(num::max_abs(ch.superop - expected.superop), 1e-12);

  std::mt19937_64 rng(31);
  const Matrix rho = random_density(rng, 2);
  const Matrix iz = ops::spin_half(Axis::z);
  EXPECT_NEAR((resetpol::apply(ch, rho) * iz).trace().real(), (rho * iz).trace().real(), 1e-14);
}

TEST(UnitaryCycle, StrongCouplingIsCptp) {
  const auto ch = unitary_cycle_channel(single(40 * kHz, 10 * kHz, 15 * kHz),
                                        {200 * kHz, 11e-6, std::nullopt});
  const auto report = is_cptp(ch, 1e-12);
  EXPECT_TRUE(report.ok()) << report.trace_error << " " << report.hermiticity_error << " "
                           << report.choi_min_eigenvalue;
}

TEST(UnitaryCycle, MatchesDirectEvolutionOracle) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const SystemSpec s = random_system(rng);
    const DriveSpec d = random_drive(rng);
    const auto ch = unitary_cycle_channel(s, d);
    const Matrix rho = random_density(rng, ch.dim);
    EXPECT_LE(num::max_abs(resetpol::apply(ch, rho) - direct_cycle(s, d, rho)), 1e-12);
  }
}

TEST(UnitaryCycle, NoTransverseCouplingConservesIz) {
  SystemSpec s = single(0, 5 * kHz, 20 * kHz);
  s.nuclei.push_back({0, 2 * kHz, std::nullopt, 24 * kHz});
  const auto ch = unitary_cycle_channel(s, {3 * kHz, 30e-6, std::nullopt});
  std::mt19937_64 rng(33);
  const Matrix rho = random_density(rng, 4);
  for (std::size_t i = 0; i < 2; ++i) {
    const Matrix iz = ops::nuclear(Axis::z, i, 2);
    EXPECT_NEAR((resetpol::apply(ch, rho) * iz).trace().real(), (rho * iz).trace().real(), 1e-13);
  }
}

TEST(UnitaryCycle, LeadingEigenvalueIsOne) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ch = unitary_cycle_channel(random_system(rng), random_drive(rng));
    const Eigen::ComplexEigenSolver<Matrix> eig(ch.superop, false);
    double largest = 0.0;
    for (auto v : eig.eigenvalues()) largest = std::max(largest, std::abs(v));
    EXPECT_NEAR(largest, 1.0, 1e-10);
  }
}

TEST(UnitaryCycle, RepeatedApplicationMatchesSuperoperatorPower) {
  const auto ch = unitary_cycle_channel(single(4 * kHz, 0.5 * kHz, 22.6 * kHz),
                                        {2 * kHz, 44e-6, std::nullopt});
  std::mt19937_64 rng(35);
  Matrix rho = random_density(rng, 2);
  const Matrix rho0 = rho;
  for (int k = 0; k < 7; ++k) rho = resetpol::apply(ch, rho);
  Matrix power = Matrix::Identity(4, 4);
  for (int k = 0; k < 7; ++k) power = power * ch.superop;
  EXPECT_LE(num::max_abs(rho - num::unvec(power * num::vec(rho0), 2)), 1e-10);
}

TEST(LindbladCycle, VanishingDephasingMatchesUnitary) {
  const SystemSpec s = single(4 * kHz, 0.5 * kHz, 22.64 * kHz);
  const auto lind = lindblad_cycle_channel(s, {2 * kHz, 44e-6, 1e6});
  const auto unit = unitary_cycle_channel(s, {2 * kHz, 44e-6, std::nullopt});
  EXPECT_LE(num::max_abs(lind.superop - unit.superop), 1e-8);
  EXPECT_EQ(lind.kind, ChannelKind::lindblad_cycle);
}

TEST(LindbladCycle, ElectronDephasingCannotTouchDecoupledNucleus) {
  const double wn = 22 * kHz, t = 44e-6;
  const auto ch = lindblad_cycle_channel(single(0, 0, wn), {2 * kHz, t, 100e-6});
  const Matrix rot = num::expm_hermitian(wn * ops::spin_half(Axis::z), t);
  EXPECT_LE(num::max_abs(ch.superop - unitary_conjugation_channel(rot).superop), 1e-12);
}

TEST(LindbladCycle, DephasedOperatingPointIsCptp) {
  const auto ch = lindblad_cycle_channel(single(4 * kHz, 0.5 * kHz, 22.64 * kHz),
                                         {2 * kHz, 44e-6, 500e-6});
  EXPECT_TRUE(is_cptp(ch, 1e-9).ok());
}

TEST(LindbladCycle, NuclearDephasingDampsCoherence) {
  // Decoupled nucleus with T2n: coherence decays by exp(-t/T2n) per cycle.
  SystemSpec s = single(0, 0, 10 * kHz);
  s.nuclei[0].t2n = 1e-3;
  const double t = 50e-6;
  const auto ch = lindblad_cycle_channel(s, {1 * kHz, t, std::nullopt});
  Matrix rho = Matrix::Constant(2, 2, 0.5);
  const Matrix out = num::unvec(ch.superop * num::vec(rho), 2);
  EXPECT_NEAR(std::abs(out(0, 1)), 0.5 * std::exp(-t / 1e-3), 1e-12);
}

TEST(LindbladCycle, RequiresADephasingTime) {
  EXPECT_THROW(lindblad_cycle_channel(single(1, 1, 1), {1, 1e-5, std::nullopt}), PreconditionError);
  EXPECT_THROW(lindblad_cycle_channel(single(1, 1, 1), {1, 1e-5, INFINITY}), PreconditionError);
}

TEST(CycleChannel, DispatchesOnDephasing) {
  const SystemSpec s = single(4 * kHz, 0.5 * kHz, 22 * kHz);
  EXPECT_EQ(cycle_channel(s, {1 * kHz, 44e-6, std::nullopt}).kind, ChannelKind::unitary_cycle);
  EXPECT_EQ(cycle_channel(s, {1 * kHz, 44e-6, 1e-4}).kind, ChannelKind::lindblad_cycle);
}

TEST(Apply, IdentityChannelLeavesStateAlone) {
  std::mt19937_64 rng(36);
  const Matrix rho = random_density(rng, 4);
  EXPECT_LE(num::max_abs(resetpol::apply(identity_channel(4), rho) - rho), 1e-15);
}

TEST(Apply, FullyMixedKeepsUnitTrace) {
  const auto ch = unitary_cycle_channel(single(40 * kHz, 10 * kHz, 15 * kHz),
                                        {200 * kHz, 11e-6, std::nullopt});
  EXPECT_NEAR(resetpol::apply(ch, fully_mixed(2)).trace().real(), 1.0, 1e-14);
}

TEST(Apply, RejectsDimensionMismatch) {
  EXPECT_THROW(resetpol::apply(identity_channel(2), fully_mixed(4)), PreconditionError);
}

TEST(Evolve, ZeroCyclesGivesInitialRow) {
  const auto ch = identity_channel(2, 44e-6);
  const auto traj = evolve(ch, fully_mixed(2), 0);
  ASSERT_EQ(traj.size(), 1u);
  EXPECT_EQ(traj[0].nuclei[0].z, 0.0);
  EXPECT_EQ(traj[0].nuclei[0].x, 0.0);
  EXPECT_EQ(traj[0].nuclei[0].y, 0.0);
}

TEST(Evolve, RowsCarryCycleTimes) {
  const auto ch = unitary_cycle_channel(single(4 * kHz, 0.5 * kHz, 22.64 * kHz),
                                        {2 * kHz, 44e-6, std::nullopt});
  const auto traj = evolve(ch, fully_mixed(2), 1000);
  ASSERT_EQ(traj.size(), 1001u);
  EXPECT_NEAR(traj.back().time, 44e-3, 1e-15);
  EXPECT_EQ(traj.back().cycle, 1000u);
}

TEST(Choi, IdentityChannelIsScaledBellProjector) {
  const Eigen::Index d = 2;
  Vector phi = Vector::Zero(d * d);
  for (Eigen::Index i = 0; i < d; ++i) phi(i * d + i) = 1.0;
  EXPECT_LE(num::max_abs(choi_matrix(identity_channel(d)) - phi * phi.adjoint()), 1e-15);
}

TEST(Choi, UnitaryChannelHasRankOne) {
  std::mt19937_64 rng(37);
  const Matrix u = num::expm_hermitian(resetpol::testing::random_hermitian(rng, 4), 1.0);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(choi_matrix(unitary_conjugation_channel(u)));
  const auto& v = eig.eigenvalues();
  EXPECT_NEAR(v(v.size() - 1), 4.0, 1e-12);
  EXPECT_LE(v.head(v.size() - 1).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IsCptp, RejectsNonPositiveMap) {
  // Transpose map is trace preserving but not completely positive.
  const auto transpose = channel_from_map(
      2, [](const Matrix& r) { return Matrix(r.transpose()); }, ChannelKind::generic, 0.0);
  const auto report = is_cptp(transpose, 1e-9);
  EXPECT_TRUE(report.trace_preserving);
  EXPECT_FALSE(report.completely_positive);
}

TEST(IsCptp, EveryConstructedChannelPasses) {
  std::mt19937_64 rng(38);
  for (int trial = 0; trial < 40; ++trial) {
    SystemSpec s = random_system(rng);
    DriveSpec d = random_drive(rng);
    EXPECT_TRUE(is_cptp(unitary_cycle_channel(s, d), 1e-9).ok());
    d.t2e = 20e-6 + 1e-3 * std::uniform_real_distribution<double>(0, 1)(rng);
    if (trial % 2 == 0) s.nuclei[0].t2n = 1e-3;
    EXPECT_TRUE(is_cptp(lindblad_cycle_channel(s, d), 1e-9).ok());
  }
}
