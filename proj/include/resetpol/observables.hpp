#pragma once

#include "resetpol/model.hpp"

#include <vector>

namespace resetpol {

/// Polarisation of one nucleus: <2 I_alpha> = 2 Tr(rho I_alpha), each in [-1, 1].
struct Polarisation {
  double z = 0.0;
  double x = 0.0;
  double y = 0.0;
};

inline std::size_t nuclei_in_dim(Eigen::Index dim) {
  std::size_t n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim) throw PreconditionError("nuclear dim is not a power of two");
  return n;
}

/// Per-nucleus <2I_z>, <2I_x>, <2I_y> of a nuclear density matrix.
inline std::vector<Polarisation> observables(const Matrix& rho) {
  if (rho.rows() != rho.cols()) throw PreconditionError("observables: matrix is not square");
  const std::size_t n = nuclei_in_dim(rho.rows());
  std::vector<Polarisation> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].z = 2.0 * (rho * ops::nuclear(Axis::z, i, n)).trace().real();
    out[i].x = 2.0 * (rho * ops::nuclear(Axis::x, i, n)).trace().real();
    out[i].y = 2.0 * (rho * ops::nuclear(Axis::y, i, n)).trace().real();
  }
  return out;
}

inline Matrix fully_mixed(Eigen::Index dim) {
  return Matrix::Identity(dim, dim) / static_cast<double>(dim);
}

}  // namespace resetpol
