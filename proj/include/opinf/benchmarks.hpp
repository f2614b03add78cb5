#pragma once

// The four benchmark families (continuous, discrete, coupled Lyapunov and
// continuous Riccati) at a configurable matrix order n.

#include "opinf/problems.hpp"

#include <string>
#include <vector>

namespace opinf::benchmarks {

/// n x n Toeplitz band: entry (i, i + offset) = value for each (offset, value).
inline Matrix toeplitz_band(Eigen::Index n, const std::vector<std::pair<int, double>>& diagonals) {
  Matrix m = Matrix::Zero(n, n);
  for (const auto& [offset, value] : diagonals)
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index j = i + offset;
      if (j >= 0 && j < n) m(i, j) = value;
    }
  return m;
}

inline ThetaMonomial power(int e) { return {1.0, {e}}; }
inline ThetaMonomial power(int e1, int e2) { return {1.0, {e1, e2}}; }

/// Continuous PALE on [0.1, 2]: A = A1/mu + A2/mu^2, M = M1/mu + M2.
inline ProblemDefinition pale_ct(Eigen::Index n) {
  ProblemDefinition p;
  p.kind = ProblemKind::ContinuousLyapunov;
  p.name = "pale-ct";
  p.n = n;
  p.d = 1;
  p.domain = {{0.1, 2.0}};
  const Matrix a1 = toeplitz_band(n, {{0, 5.0}, {1, 0.3}, {2, 0.3}});
  const Matrix a2 = toeplitz_band(n, {{-1, 0.2}, {-2, 0.2}});
  p.A = {AffineFamily(n, n, 1, {{power(-1), a1}, {power(-2), a2}})};
  Matrix m1 = Matrix::Zero(1, n), m2 = Matrix::Zero(1, n);
  m1(0, 0) = 0.2;
  m1(0, n - 1) = 0.2;
  for (Eigen::Index j = 1; j + 1 < n; ++j) m2(0, j) = 0.2;
  p.M = {AffineFamily(1, n, 1, {{power(-1), m1}, {power(0), m2}})};
  return p;
}

/// Discrete PALE on [2, 6]^2: A = mu1 A1 + A2/mu1 + mu2 A3, M = mu1 M1 + M2.
inline ProblemDefinition pale_dt(Eigen::Index n) {
  ProblemDefinition p;
  p.kind = ProblemKind::DiscreteLyapunov;
  p.name = "pale-dt";
  p.n = n;
  p.d = 2;
  p.domain = {{2.0, 6.0}, {2.0, 6.0}};
  const Matrix a1 = 15.0 * Matrix::Identity(n, n);
  const Matrix a2 = toeplitz_band(n, {{1, 1.0}, {-1, 0.5}});
  const Matrix a3 = toeplitz_band(n, {{2, 1.0}, {-2, 0.5}});
  p.A = {AffineFamily(n, n, 2, {{power(1, 0), a1}, {power(-1, 0), a2}, {power(0, 1), a3}})};
  Matrix m1 = Matrix::Constant(1, n, 0.1), m2 = Matrix::Zero(1, n);
  m1(0, n - 1) = -0.9;
  m2(0, n - 1) = 1.0;
  p.M = {AffineFamily(1, n, 2, {{power(1, 0), m1}, {power(0, 0), m2}})};
  return p;
}

/// Two coupled continuous PALEs on [1, 2] with Pi = [[-1, 1], [1, -1]].
inline ProblemDefinition pale_coupled(Eigen::Index n) {
  ProblemDefinition p;
  p.kind = ProblemKind::CoupledLyapunov;
  p.name = "pale-coupled";
  p.n = n;
  p.s = 2;
  p.d = 1;
  p.domain = {{1.0, 2.0}};
  const Matrix a11 = 10.0 * Matrix::Identity(n, n);
  const Matrix a21 = 8.0 * Matrix::Identity(n, n);
  const Matrix a12 = toeplitz_band(n, {{1, 2.0}, {-1, 3.0}});
  const Matrix a22 = toeplitz_band(n, {{1, 1.0}, {-1, 2.0}});
  p.A = {AffineFamily(n, n, 1, {{power(-1), a11}, {power(-2), a12}}),
         AffineFamily(n, n, 1, {{power(1), a21}, {power(2), a22}})};
  Matrix m11 = Matrix::Zero(1, n), m12 = Matrix::Zero(1, n);
  m11(0, 0) = 1.0;
  m12(0, n - 1) = 1.0;
  p.M = {AffineFamily(1, n, 1, {{power(1), m11}, {power(0), m12}}),
         AffineFamily(1, n, 1, {{power(-1), 2.0 * m11}, {power(0), 2.0 * m12}})};
  p.coupling = (Matrix(2, 2) << -1.0, 1.0, 1.0, -1.0).finished();
  return p;
}

/// Continuous PARE on [0.1, 5]: A = A1/mu + A2/mu^2, B = mu B1, M = M1/mu.
inline ProblemDefinition pare_ct(Eigen::Index n) {
  ProblemDefinition p;
  p.kind = ProblemKind::ContinuousRiccati;
  p.name = "pare-ct";
  p.n = n;
  p.d = 1;
  p.domain = {{0.1, 5.0}};
  const Matrix a1 = toeplitz_band(n, {{0, -30.0}, {1, -3.0}, {-1, 2.0}});
  const Matrix a2 = toeplitz_band(n, {{1, -3.0}, {2, -4.0}, {-1, 2.0}, {-2, 2.0}});
  p.A = {AffineFamily(n, n, 1, {{power(-1), a1}, {power(-2), a2}})};
  p.B = AffineFamily(n, 1, 1, {{power(1), Matrix::Constant(n, 1, 0.2)}});
  p.M = {AffineFamily(1, n, 1, {{power(-1), Matrix::Constant(1, n, 0.1)}})};
  return p;
}

inline const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names = {"pale-ct", "pale-dt", "pale-coupled", "pare-ct"};
  return names;
}

inline ProblemDefinition make_family(const std::string& name, Eigen::Index n) {
  if (n < 3) throw FormatError("benchmark families need n >= 3");
  if (name == "pale-ct") return pale_ct(n);
  if (name == "pale-dt") return pale_dt(n);
  if (name == "pale-coupled") return pale_coupled(n);
  if (name == "pare-ct") return pare_ct(n);
  throw FormatError("unknown benchmark family '" + name + "'");
}

}  // namespace opinf::benchmarks
