#pragma once

// Column-major vectorization and the duplicate-free symmetric Kronecker
// square x (^) x = [x1*x1 | x2*x1, x2*x2 | x3*x1, x3*x2, x3*x3 | ...].

#include "opinf/core.hpp"

#include <string>

namespace opinf {

/// q(t) = t(t+1)/2, the length of the compressed square of a length-t vector.
constexpr Eigen::Index compressed_size(Eigen::Index t) { return t * (t + 1) / 2; }

inline Vector vec(const Matrix& x) { return Eigen::Map<const Vector>(x.data(), x.size()); }

inline Matrix unvec(const Vector& x, Eigen::Index rows, Eigen::Index cols) {
  if (x.size() != rows * cols)
    throw ShapeError("unvec: vector of length " + std::to_string(x.size()) + " cannot be reshaped to " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  return Eigen::Map<const Matrix>(x.data(), rows, cols);
}

/// 1-based position of x_i x_j (j <= i) in the compressed square.
inline Eigen::Index pair_index(Eigen::Index i, Eigen::Index j) {
  if (j < 1 || i < 1 || j > i)
    throw ShapeError("pair_index requires 1 <= j <= i, got (" + std::to_string(i) + ", " + std::to_string(j) + ")");
  return i * (i - 1) / 2 + j;
}

/// 0-based counterpart of pair_index for 0 <= j <= i.
constexpr Eigen::Index pair_offset(Eigen::Index i, Eigen::Index j) { return i * (i + 1) / 2 + j; }

inline Vector sym_square(const Vector& x) {
  const Eigen::Index t = x.size();
  Vector out(compressed_size(t));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) out[k++] = x[i] * x[j];
  return out;
}

/// Jacobian of sym_square, q(t) x t.
inline Matrix sym_square_jacobian(const Vector& x) {
  const Eigen::Index t = x.size();
  Matrix jac = Matrix::Zero(compressed_size(t), t);
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const Eigen::Index row = pair_offset(i, j);
      jac(row, i) += x[j];
      jac(row, j) += x[i];
    }
  return jac;
}

}  // namespace opinf
