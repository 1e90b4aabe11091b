#include "resetpol/numerics.hpp"

#include <gtest/gtest.h>

#include <array>

#include "test_util.hpp"

using namespace resetpol;
using resetpol::testing::random_density;
using resetpol::testing::random_hermitian;
using resetpol::testing::random_matrix;
using resetpol::testing::taylor_expm;

namespace {

Matrix pauli_z() {
  Matrix z = Matrix::Zero(2, 2);
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  return z;
}

}  // namespace

TEST(Kron, IdentityTimesIdentity) {
  EXPECT_EQ(num::max_abs(num::kron(num::identity(2), num::identity(2)) - num::identity(4)), 0.0);
}

TEST(Kron, PauliZSquaredIsDiagonal) {
  const Matrix zz = num::kron(pauli_z(), pauli_z());
  Matrix expected = Matrix::Zero(4, 4);
  expected.diagonal() << 1.0, -1.0, -1.0, 1.0;
  EXPECT_EQ(num::max_abs(zz - expected), 0.0);
}

TEST(Kron, DimensionsMultiply) {
  std::mt19937_64 rng(1);
  const Matrix k = num::kron(random_matrix(rng, 2, 2), random_matrix(rng, 4, 4));
  EXPECT_EQ(k.rows(), 8);
  EXPECT_EQ(k.cols(), 8);
}

TEST(Kron, MixedProductProperty) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(rng, 2, 2), b = random_matrix(rng, 3, 3);
    const Matrix c = random_matrix(rng, 2, 2), d = random_matrix(rng, 3, 3);
    const Matrix lhs = num::kron(a, b) * num::kron(c, d);
    const Matrix rhs = num::kron(a * c, b * d);
    EXPECT_LE(num::max_abs(lhs - rhs), 1e-12 * std::max(1.0, num::max_abs(rhs)));
  }
}

TEST(ExpmHermitian, ZeroGeneratorIsIdentity) {
  EXPECT_LE(num::max_abs(num::expm_hermitian(Matrix::Zero(4, 4), 3.0) - num::identity(4)), 1e-15);
}

TEST(ExpmHermitian, RotationPeriodGivesMinusIdentity) {
  const double w = kTwoPi * 1234.0;
  const Matrix h = w * 0.5 * pauli_z();
  const Matrix u = num::expm_hermitian(h, kTwoPi / w);
  // exp(-i pi Z) = -I: the spin-1/2 sign flip after one full rotation.
  EXPECT_LE(num::max_abs(u + num::identity(2)), 1e-12);
  EXPECT_LE(num::max_abs(u * u.adjoint() - num::identity(2)), 1e-12);
}

TEST(ExpmHermitian, AgreesWithSeriesOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix h = random_hermitian(rng, 8);
    const Matrix u = num::expm_hermitian(h, 0.7);
    const Matrix oracle = taylor_expm(-kI * h * 0.7);
    EXPECT_LE(num::max_abs(u - oracle), 1e-10);
  }
}

TEST(ExpmHermitian, OutputIsUnitary) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix u = num::expm_hermitian(random_hermitian(rng, 16) * 1e4, 1e-3);
    EXPECT_LE(num::max_abs(u.adjoint() * u - num::identity(16)), 1e-11);
  }
}

TEST(ExpmHermitian, RejectsNonHermitian) {
  std::mt19937_64 rng(5);
  EXPECT_THROW(num::expm_hermitian(random_matrix(rng, 3, 3), 1.0), PreconditionError);
}

TEST(ExpmGeneral, ZeroIsIdentity) {
  EXPECT_LE(num::max_abs(num::expm_general(Matrix::Zero(5, 5)) - num::identity(5)), 1e-15);
}

TEST(ExpmGeneral, DiagonalIsElementwise) {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << cplx{-2.0, 0.5}, cplx{0.3, 0.0}, cplx{7.0, -4.0};
  const Matrix e = num::expm_general(d);
  for (int k = 0; k < 3; ++k) {
    EXPECT_LE(std::abs(e(k, k) - std::exp(d(k, k))), 1e-10 * std::abs(std::exp(d(k, k))));
  }
  EXPECT_LE(std::abs(e(0, 1)) + std::abs(e(2, 0)), 1e-12);
}

TEST(ExpmGeneral, CommutatorSuperoperatorMatchesConjugation) {
  std::mt19937_64 rng(6);
  const Matrix h = random_hermitian(rng, 4);
  const double t = 0.9;
  const Matrix id = num::identity(4);
  const Matrix l = -kI * (num::kron(id, h) - num::kron(h.transpose(), id));
  const Matrix prop = num::expm_general(l * t);
  const Matrix u = num::expm_hermitian(h, t);
  const Matrix rho = random_density(rng, 4);
  const Matrix via_super = num::unvec(prop * num::vec(rho), 4);
  EXPECT_LE(num::max_abs(via_super - u * rho * u.adjoint()), 1e-10);
}

TEST(ExpmGeneral, RelativeErrorAgainstSeriesOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_matrix(rng, 6, 6) * (0.5 + trial);
    const Matrix e = num::expm_general(a);
    const Matrix oracle = taylor_expm(a);
    EXPECT_LE(num::max_abs(e - oracle), 1e-10 * num::max_abs(oracle));
  }
}

TEST(ExpmGeneral, RejectsNonSquare) {
  EXPECT_THROW(num::expm_general(Matrix::Zero(2, 3)), PreconditionError);
}

namespace {

// Naive index-summation oracle for Tr_B over a (da x db) bipartite matrix.
Matrix trace_out_second(const Matrix& rho, int da, int db) {
  Matrix out = Matrix::Zero(da, da);
  for (int i = 0; i < da; ++i)
    for (int j = 0; j < da; ++j)
      for (int k = 0; k < db; ++k)
        for (int l = 0; l < db; ++l)
          if (k == l) out(i, j) += rho(i * db + k, j * db + l);
  return out;
}

Matrix trace_out_first(const Matrix& rho, int da, int db) {
  Matrix out = Matrix::Zero(db, db);
  for (int k = 0; k < db; ++k)
    for (int l = 0; l < db; ++l)
      for (int i = 0; i < da; ++i) out(k, l) += rho(i * db + k, i * db + l);
  return out;
}

}  // namespace

TEST(PartialTrace, ProductStateReturnsFactor) {
  std::mt19937_64 rng(8);
  const Matrix re = random_density(rng, 2), rn = random_density(rng, 4);
  const std::array<int, 2> dims{2, 4};
  const std::array<int, 1> keep{1};
  EXPECT_LE(num::max_abs(num::partial_trace(num::kron(re, rn), dims, keep) - rn), 1e-14);
}

TEST(PartialTrace, BellStateGivesMaximallyMixed) {
  Vector bell = Vector::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  const Matrix rho = bell * bell.adjoint();
  const std::array<int, 2> dims{2, 2};
  for (int k = 0; k < 2; ++k) {
    const std::array<int, 1> keep{k};
    EXPECT_LE(num::max_abs(num::partial_trace(rho, dims, keep) - 0.5 * num::identity(2)), 1e-15);
  }
}

TEST(PartialTrace, AgreesWithIndexSummationOracle) {
  std::mt19937_64 rng(9);
  const std::array<int, 2> dims{2, 4};
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix rho = random_density(rng, 8);
    const std::array<int, 1> keep_n{1}, keep_e{0};
    EXPECT_LE(num::max_abs(num::partial_trace(rho, dims, keep_n) - trace_out_first(rho, 2, 4)),
              1e-14);
    EXPECT_LE(num::max_abs(num::partial_trace(rho, dims, keep_e) - trace_out_second(rho, 2, 4)),
              1e-14);
  }
}

TEST(PartialTrace, ThreeFactorsKeepOuter) {
  std::mt19937_64 rng(10);
  const Matrix a = random_density(rng, 2), b = random_density(rng, 3), c = random_density(rng, 2);
  const Matrix rho = num::kron(num::kron(a, b), c);
  const std::array<int, 3> dims{2, 3, 2};
  const std::array<int, 2> keep{0, 2};
  EXPECT_LE(num::max_abs(num::partial_trace(rho, dims, keep) - num::kron(a, c)), 1e-14);
}

TEST(PartialTrace, PreservesTrace) {
  std::mt19937_64 rng(11);
  const std::array<int, 3> dims{2, 2, 2};
  const std::array<int, 1> keep{1};
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix rho = random_density(rng, 8);
    EXPECT_LE(std::abs(num::partial_trace(rho, dims, keep).trace() - 1.0), 1e-13);
  }
}

TEST(PartialTrace, RejectsDimsMismatch) {
  const std::array<int, 2> dims{2, 3};
  const std::array<int, 1> keep{0};
  EXPECT_THROW(num::partial_trace(num::identity(4), dims, keep), PreconditionError);
}

TEST(Vectorisation, SandwichMatchesDirectProduct) {
  std::mt19937_64 rng(12);
  const Matrix a = random_matrix(rng, 3, 3), b = random_matrix(rng, 3, 3);
  const Matrix rho = random_matrix(rng, 3, 3);
  const Matrix via = num::unvec(num::sandwich_superop(a, b) * num::vec(rho), 3);
  EXPECT_LE(num::max_abs(via - a * rho * b), 1e-12);
  EXPECT_EQ(num::vec(rho)(1 + 2 * 3), rho(1, 2));
}
