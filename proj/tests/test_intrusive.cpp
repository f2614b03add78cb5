#include "opinf/benchmarks.hpp"
#include "opinf/intrusive.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace opinf;
using namespace opinf::testing;

namespace {

Matrix orthonormal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, rows, cols));
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

/// Orthonormal basis whose columns are vectorized symmetric matrices.
Matrix symmetric_basis(std::mt19937_64& rng, Eigen::Index n, Eigen::Index r) {
  Matrix raw(n * n, r);
  for (Eigen::Index a = 0; a < r; ++a) raw.col(a) = vec(random_symmetric(rng, n));
  Eigen::HouseholderQR<Matrix> qr(raw);
  return qr.householderQ() * Matrix::Identity(n * n, r);
}

}  // namespace

TEST(ProjectLinearOps, IdentityBasisGivesFullOperators) {
  const auto p = benchmarks::pale_ct(4);
  const auto form = polynomial_form(p);
  const auto ops = project_linear_ops(p, Matrix::Identity(16, 16));
  ASSERT_EQ(ops.C1_ops.size(), form.groups.theta_C1.size());
  for (std::size_t j = 0; j < ops.C1_ops.size(); ++j) EXPECT_EQ(ops.C1_ops[j], dense_linear_block(form, j));
  for (std::size_t j = 0; j < ops.C0_ops.size(); ++j) EXPECT_EQ(ops.C0_ops[j], constant_block(form, j));
}

TEST(ProjectLinearOps, SingleUnitVector) {
  const auto p = benchmarks::pale_dt(3);
  const auto form = polynomial_form(p);
  const auto ops = project_linear_ops(p, Vector::Unit(9, 0));
  for (std::size_t j = 0; j < ops.C1_ops.size(); ++j) {
    ASSERT_EQ(ops.C1_ops[j].rows(), 1);
    EXPECT_EQ(ops.C1_ops[j](0, 0), dense_linear_block(form, j)(0, 0));
  }
}

TEST(ProjectLinearOps, ContinuousPaleMatchesKroneckerSum) {
  const auto p = benchmarks::pale_ct(8);
  const auto ops = project_linear_ops(p, Matrix::Identity(64, 64));
  const auto groups = derive_theta_groups(p);
  std::mt19937_64 rng(61);
  for (int k = 0; k < 5; ++k) {
    const Parameter mu{uniform(rng, 0.1, 2.0)};
    Matrix cbar = -Matrix::Identity(64, 64);
    for (std::size_t j = 0; j < ops.C1_ops.size(); ++j) cbar += evaluate_theta(groups.theta_C1[j], mu) * ops.C1_ops[j];
    const Matrix at = p.A[0].assemble(mu).transpose();
    const Matrix expected = kron(at, Matrix::Identity(8, 8)) + kron(Matrix::Identity(8, 8), at);
    EXPECT_LE((cbar - expected).norm(), 1e-12 * expected.norm());
  }
}

TEST(ProjectLinearOps, Guard) {
  EXPECT_THROW(project_linear_ops(benchmarks::pale_ct(257), Matrix::Zero(1, 1)), GuardError);
}

TEST(ProjectQuadraticOp, SingleBasisVector) {
  std::mt19937_64 rng(62);
  const auto p = benchmarks::pare_ct(5);
  const Matrix v = symmetric_basis(rng, 5, 1);
  const auto h = project_quadratic_op(p, v);
  const auto groups = derive_theta_groups(p);
  ASSERT_EQ(h.size(), groups.theta_C2.size());
  ASSERT_EQ(h[0].rows(), 1);
  ASSERT_EQ(h[0].cols(), 1);
  const Matrix x1 = unvec(v.col(0), 5, 5);
  const Matrix g = p.G().terms()[0].matrix;
  EXPECT_NEAR(h[0](0, 0), -(v.transpose() * vec(x1 * g * x1))(0), 1e-14);
}

TEST(ProjectQuadraticOp, ZeroGGivesZero) {
  auto p = benchmarks::pare_ct(4);
  p.B = AffineFamily::constant(Matrix::Zero(4, 1), 1);
  std::mt19937_64 rng(63);
  for (const auto& h : project_quadratic_op(p, orthonormal(rng, 16, 3))) EXPECT_TRUE(h.isZero(0.0));
}

TEST(ProjectQuadraticOp, DefiningPropertyOnRandomSpan) {
  std::mt19937_64 rng(64);
  auto p = benchmarks::pare_ct(6);
  p.B = AffineFamily(6, 2, 1, {{{1.0, {1}}, random_matrix(rng, 6, 2)}, {{1.0, {0}}, random_matrix(rng, 6, 2)}});
  const Matrix v = symmetric_basis(rng, 6, 3);
  const auto h = project_quadratic_op(p, v);
  const auto groups = derive_theta_groups(p);
  for (int k = 0; k < 20; ++k) {
    const Vector xhat = random_vector(rng, 3);
    const Matrix x = unvec(v * xhat, 6, 6);
    const Parameter mu{uniform(rng, 0.1, 5.0)};
    const Matrix g = p.G().assemble(mu);
    const Vector expected = -(v.transpose() * vec(x * g * x));
    Vector got = Vector::Zero(3);
    for (std::size_t j = 0; j < h.size(); ++j) got += evaluate_theta(groups.theta_C2[j], mu) * h[j] * sym_square(xhat);
    EXPECT_LE((got - expected).norm(), 1e-10 * expected.norm());
  }
}

TEST(ProjectQuadraticOp, GuardAndKind) {
  EXPECT_THROW(project_quadratic_op(benchmarks::pare_ct(65), Matrix::Zero(1, 1)), GuardError);
  EXPECT_THROW(project_quadratic_op(benchmarks::pale_ct(4), Matrix::Identity(16, 2)), FormatError);
}

TEST(IntrusiveRom, IdentityBasisOnScalarProblem) {
  ProblemDefinition p;
  p.kind = ProblemKind::ContinuousRiccati;
  p.n = 1;
  p.domain = {{1.0, 2.0}};
  p.A = {AffineFamily(1, 1, 1, {{{1.0, {1}}, Matrix::Constant(1, 1, -1.0)}})};
  p.M = {AffineFamily::constant(Matrix::Ones(1, 1), 1)};
  p.B = AffineFamily::constant(Matrix::Ones(1, 1), 1);
  const auto m = intrusive_rom(p, Matrix::Identity(1, 1));
  EXPECT_EQ(m.method, "intrusive");
  for (double mu : {1.0, 1.5, 2.0}) {
    const auto rep = rom_solve(m, {mu});
    ASSERT_TRUE(rep.converged);
    EXPECT_NEAR(rep.xhat[0], fom_solve(p, {mu})[0], 1e-13);
  }
}

TEST(IntrusiveRom, ProjectionConsistencyOnExactSpan) {
  const auto p = five_dimensional_lyapunov(8);
  std::vector<Parameter> params;
  for (int i = 0; i < 12; ++i) params.push_back({1.0 + i / 11.0});
  const auto snaps = build_snapshots(p, params);
  const auto basis = pod_basis(snaps, 5);
  EXPECT_LE(projection_error_squared(basis.V, snaps.states), 1e-24 * snaps.states.squaredNorm());
  const auto m = intrusive_rom(p, basis.V);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Vector xhat = basis.V.transpose() * snaps.states.col(static_cast<Eigen::Index>(i));
    const auto ops = reduced_operators_at(m, params[i]);
    EXPECT_LE(reduced_residual(ops, xhat).norm(), 1e-9 * (xhat.norm() + ops.C0.norm()));
  }
}

TEST(IntrusiveRom, RiccatiProjectionConsistency) {
  // Exact span via V = I restricted to a problem with n = 3.
  const auto p = benchmarks::pare_ct(3);
  const auto m = intrusive_rom(p, Matrix::Identity(9, 9));
  const Parameter mu{1.3};
  const Vector x = fom_solve(p, mu);
  const auto ops = reduced_operators_at(m, mu);
  EXPECT_LE(reduced_residual(ops, x).norm(), 1e-9 * (x.norm() + ops.C0.norm()));
}
