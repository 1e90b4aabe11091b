// Dense complex linear algebra used throughout resetpol.
//
// Every operator in the library is a small dense matrix (joint Hilbert space
// of one electron and at most three spin-1/2 nuclei, i.e. at most 16x16, and
// superoperators of at most 256x256), so all routines here favour clarity and
// determinism over asymptotic speed.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace resetpol {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Thrown when an operation is called outside its documented domain.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical procedure fails to reach its contract
/// (non-convergence, positivity violation beyond tolerance, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace num {

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Kronecker product of a list of factors, left to right.
inline Matrix kron_all(std::span<const Matrix> factors) {
  Matrix out = Matrix::Identity(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

/// max|M - M^dagger| <= rel_tol * max|M|.
inline bool is_hermitian(const Matrix& m, double rel_tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(max_abs(m), 1e-300);
  return max_abs(m - m.adjoint()) <= rel_tol * scale;
}

inline Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

/// exp(-i h t) for Hermitian h, via the eigendecomposition of h.
inline Matrix expm_hermitian(const Matrix& h, double t) {
  if (!is_hermitian(h, 1e-10)) {
    throw PreconditionError("expm_hermitian: generator is not Hermitian");
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(hermitian_part(h));
  if (eig.info() != Eigen::Success) {
    throw NumericalError("expm_hermitian: eigendecomposition failed");
  }
  const auto& vecs = eig.eigenvectors();
  Vector phases(h.rows());
  for (Eigen::Index k = 0; k < h.rows(); ++k) {
    phases(k) = std::exp(-kI * eig.eigenvalues()(k) * t);
  }
  return vecs * phases.asDiagonal() * vecs.adjoint();
}

/// exp(l) for a general square matrix: degree-13 Pade approximant with
/// scaling and squaring (Higham 2005 coefficients).
inline Matrix expm_general(const Matrix& l) {
  if (l.rows() != l.cols()) {
    throw PreconditionError("expm_general: matrix is not square");
  }
  const Eigen::Index n = l.rows();
  if (n == 0) return l;

  static constexpr double b[] = {64764752532480000.0,
                                 32382376266240000.0,
                                 7771770303897600.0,
                                 1187353796428800.0,
                                 129060195264000.0,
                                 10559470521600.0,
                                 670442572800.0,
                                 33522128640.0,
                                 1323241920.0,
                                 40840800.0,
                                 960960.0,
                                 16380.0,
                                 182.0,
                                 1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = l.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  }
  const Matrix a = l / std::ldexp(1.0, squarings);
  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;

  const Matrix u_inner = b[13] * a6 + b[11] * a4 + b[9] * a2;
  const Matrix u = a * (a6 * u_inner + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Matrix v_inner = b[12] * a6 + b[10] * a4 + b[8] * a2;
  const Matrix v = a6 * v_inner + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

/// Reduced matrix over the subsystems listed in `keep` (ascending order is
/// not required; the output factor order follows `dims`).
inline Matrix partial_trace(const Matrix& rho, std::span<const int> dims,
                            std::span<const int> keep) {
  if (rho.rows() != rho.cols()) {
    throw PreconditionError("partial_trace: matrix is not square");
  }
  Eigen::Index total = 1;
  for (int d : dims) {
    if (d <= 0) throw PreconditionError("partial_trace: subsystem dim must be positive");
    total *= d;
  }
  if (total != rho.rows()) {
    throw PreconditionError("partial_trace: dims product " + std::to_string(total) +
                            " does not match matrix dim " + std::to_string(rho.rows()));
  }
  const std::size_t n_sub = dims.size();
  std::vector<bool> kept(n_sub, false);
  for (int k : keep) {
    if (k < 0 || static_cast<std::size_t>(k) >= n_sub) {
      throw PreconditionError("partial_trace: keep index out of range");
    }
    kept[static_cast<std::size_t>(k)] = true;
  }

  // Row-major (first subsystem most significant) digit strides.
  std::vector<Eigen::Index> stride(n_sub, 1);
  for (std::size_t s = n_sub; s-- > 1;) stride[s - 1] = stride[s] * dims[s];

  Eigen::Index kept_dim = 1;
  Eigen::Index traced_dim = 1;
  for (std::size_t s = 0; s < n_sub; ++s) (kept[s] ? kept_dim : traced_dim) *= dims[s];

  // Map (kept index, traced index) -> full index.
  auto compose = [&](Eigen::Index kept_idx, Eigen::Index traced_idx) {
    Eigen::Index full = 0;
    for (std::size_t s = n_sub; s-- > 0;) {
      const int d = dims[s];
      Eigen::Index digit;
      if (kept[s]) {
        digit = kept_idx % d;
        kept_idx /= d;
      } else {
        digit = traced_idx % d;
        traced_idx /= d;
      }
      full += digit * stride[s];
    }
    return full;
  };

  Matrix out = Matrix::Zero(kept_dim, kept_dim);
  for (Eigen::Index i = 0; i < kept_dim; ++i) {
    for (Eigen::Index j = 0; j < kept_dim; ++j) {
      cplx acc{0.0, 0.0};
      for (Eigen::Index t = 0; t < traced_dim; ++t) acc += rho(compose(i, t), compose(j, t));
      out(i, j) = acc;
    }
  }
  return out;
}

/// Column-stacking vectorisation: vec(rho)[i + j*d] = rho(i, j).
inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index dim) {
  if (v.size() != dim * dim) throw PreconditionError("unvec: size is not dim^2");
  return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

/// Superoperator of rho -> a * rho * b in the column-stacking convention.
inline Matrix sandwich_superop(const Matrix& a, const Matrix& b) {
  return kron(b.transpose(), a);
}

}  // namespace num
}  // namespace resetpol
