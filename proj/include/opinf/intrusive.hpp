#pragma once

// Intrusive Galerkin baseline: reduced operators V'C V from the full-order
// affine data. Only feasible at small n, which is the point of the guards.

#include "opinf/rom.hpp"

#include <string>

namespace opinf {

inline constexpr Eigen::Index kIntrusiveStateLimit = 65536;
inline constexpr Eigen::Index kIntrusiveQuadraticOrderLimit = 64;

struct LinearOperators {
  std::vector<Matrix> C1_ops;
  std::vector<Vector> C0_ops;
};

/// V'C1_j V and V'C0_j in theta order. C1_j is applied column by column
/// through its Kronecker-free matrix form instead of being materialized.
inline LinearOperators project_linear_ops(const ProblemDefinition& problem, const Matrix& v) {
  const Eigen::Index N = problem.state_dimension();
  if (N > kIntrusiveStateLimit)
    throw GuardError("intrusive projection limited to N <= " + std::to_string(kIntrusiveStateLimit) + ", got " +
                     std::to_string(N));
  if (v.rows() != N) throw ShapeError("basis rows do not match problem state dimension");
  const PolynomialForm form = polynomial_form(problem);
  LinearOperators out;
  for (std::size_t j = 0; j < form.groups.theta_C1.size(); ++j) {
    Matrix cv(N, v.cols());
    for (Eigen::Index a = 0; a < v.cols(); ++a) cv.col(a) = apply_linear_block(form, j, v.col(a));
    out.C1_ops.push_back(v.transpose() * cv);
  }
  for (std::size_t j = 0; j < form.groups.theta_C0.size(); ++j) out.C0_ops.push_back(v.transpose() * constant_block(form, j));
  return out;
}

/// For each theta of G, the r x q(r) operator h with V'vec(-XGX) = h xhat^2
/// whenever x = V xhat. Column (a, b) is V'vec(-(X_a G X_b + X_b G X_a)) for
/// a > b and V'vec(-X_a G X_a) on the diagonal, X_a = unvec(V e_a).
inline std::vector<Matrix> project_quadratic_op(const ProblemDefinition& problem, const Matrix& v) {
  if (problem.kind != ProblemKind::ContinuousRiccati) throw FormatError("quadratic operator exists only for riccati");
  if (problem.n > kIntrusiveQuadraticOrderLimit)
    throw GuardError("quadratic projection limited to n <= " + std::to_string(kIntrusiveQuadraticOrderLimit) +
                     ", got " + std::to_string(problem.n));
  const Eigen::Index n = problem.n;
  if (v.rows() != n * n) throw ShapeError("basis rows do not match problem state dimension");
  const PolynomialForm form = polynomial_form(problem);
  const Eigen::Index r = v.cols();
  std::vector<Matrix> xs;
  for (Eigen::Index a = 0; a < r; ++a) xs.push_back(unvec(v.col(a), n, n));
  std::vector<Matrix> out;
  for (std::size_t j = 0; j < form.quadratic.size(); ++j) {
    Matrix h = Matrix::Zero(r, compressed_size(r));
    for (const auto& q : form.quadratic[j]) {
      std::vector<Matrix> xg;  // X_a G
      for (Eigen::Index a = 0; a < r; ++a) xg.push_back(xs[static_cast<std::size_t>(a)] * q.weight);
      for (Eigen::Index a = 0; a < r; ++a)
        for (Eigen::Index b = 0; b <= a; ++b) {
          const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
          Matrix m = xg[ua] * xs[ub];
          if (a != b) m += xg[ub] * xs[ua];
          h.col(pair_offset(a, b)) += q.scale * (v.transpose() * vec(m));
        }
    }
    out.push_back(std::move(h));
  }
  return out;
}

inline ReducedModel intrusive_rom(const ProblemDefinition& problem, const Matrix& v) {
  ReducedModel m;
  m.r = v.cols();
  m.theta_groups = derive_theta_groups(problem);
  auto lin = project_linear_ops(problem, v);
  m.C1_ops = std::move(lin.C1_ops);
  m.C0_ops = std::move(lin.C0_ops);
  if (problem.kind == ProblemKind::ContinuousRiccati) m.C2_ops = project_quadratic_op(problem, v);
  m.method = "intrusive";
  m.check_shapes();
  return m;
}

}  // namespace opinf
