#include "opinf/benchmarks.hpp"
#include "opinf/intrusive.hpp"
#include "opinf/rom.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace opinf;
using namespace opinf::testing;

namespace {

ThetaMonomial theta(int e) { return {1.0, {e}}; }

ReducedModel scalar_model(std::vector<double> c2, std::vector<double> c1, std::vector<double> c0) {
  ReducedModel m;
  m.r = 1;
  for (double v : c2) {
    m.C2_ops.push_back(Matrix::Constant(1, 1, v));
    m.theta_groups.theta_C2.push_back(theta(0));
  }
  for (double v : c1) {
    m.C1_ops.push_back(Matrix::Constant(1, 1, v));
    m.theta_groups.theta_C1.push_back(theta(0));
  }
  for (double v : c0) {
    m.C0_ops.push_back(Vector::Constant(1, v));
    m.theta_groups.theta_C0.push_back(theta(0));
  }
  return m;
}

ReducedModel random_model(std::mt19937_64& rng, Eigen::Index r, bool quadratic) {
  ReducedModel m;
  m.r = r;
  m.theta_groups.theta_C1 = {theta(-1), theta(0)};
  m.theta_groups.theta_C0 = {theta(0)};
  m.C1_ops = {0.1 * random_matrix(rng, r, r), 0.1 * random_matrix(rng, r, r)};
  m.C0_ops = {random_vector(rng, r)};
  if (quadratic) {
    m.theta_groups.theta_C2 = {theta(1)};
    m.C2_ops = {0.05 * random_matrix(rng, r, compressed_size(r))};
  }
  return m;
}

}  // namespace

TEST(ReducedOperatorsAt, ConstantThetaReturnsStoredOperators) {
  std::mt19937_64 rng(51);
  ReducedModel m = random_model(rng, 3, true);
  m.theta_groups = {{theta(0)}, {theta(0), theta(0)}, {theta(0)}};
  const auto ops = reduced_operators_at(m, {1.7});
  EXPECT_EQ(ops.C2, m.C2_ops[0]);
  EXPECT_EQ(ops.C1, m.C1_ops[0] + m.C1_ops[1]);
  EXPECT_EQ(ops.C0, m.C0_ops[0]);
}

TEST(ReducedOperatorsAt, InverseParameterHalvesAtTwo) {
  ReducedModel m = scalar_model({}, {0.8}, {3.0});
  m.theta_groups.theta_C1 = {theta(-1)};
  m.theta_groups.theta_C0 = {theta(-1)};
  const auto ops = reduced_operators_at(m, {2.0});
  EXPECT_EQ(ops.C1(0, 0), 0.4);
  EXPECT_EQ(ops.C0[0], 1.5);
  EXPECT_THROW(reduced_operators_at(m, {0.0}), DomainError);
}

TEST(RomSolve, LinearScalar) {
  const auto rep = rom_solve(scalar_model({}, {0.5}, {1.0}), {1.0});
  EXPECT_TRUE(rep.converged);
  EXPECT_NEAR(rep.xhat[0], 2.0, 1e-15);
}

TEST(RomSolve, QuadraticScalar) {
  const auto rep = rom_solve(scalar_model({-1.0}, {0.0}, {2.0}), {1.0});
  EXPECT_TRUE(rep.converged);
  EXPECT_NEAR(rep.xhat[0], 1.0, 1e-14);
  EXPECT_LE(rep.iterations, 100);
}

TEST(RomSolve, ZeroQuadraticTakesLinearPath) {
  const auto rep = rom_solve(scalar_model({0.0}, {0.5}, {1.0}), {1.0});
  EXPECT_EQ(rep.iterations, 1);
  EXPECT_NEAR(rep.xhat[0], 2.0, 1e-15);
}

TEST(RomSolve, SingularLinearSystemIsSolverError) {
  EXPECT_THROW(rom_solve(scalar_model({}, {1.0}, {1.0}), {1.0}), SolverError);
}

TEST(RomSolve, NoRealRootIsReportedOrRaised) {
  // -x^2 - x - 1 = 0 has no real root; Newton either stalls or meets a singular Jacobian.
  try {
    const auto rep = rom_solve(scalar_model({-1.0}, {0.0}, {-1.0}), {1.0});
    EXPECT_FALSE(rep.converged);
    EXPECT_LE(rep.iterations, 100);
  } catch (const SolverError&) {
  }
}

TEST(RomSolve, LinearSolvesAreExact) {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_model(rng, 7, false);
    const Parameter mu{uniform(rng, 0.5, 2.0)};
    const auto rep = rom_solve(m, mu);
    const auto ops = reduced_operators_at(m, mu);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(reduced_residual(ops, rep.xhat).norm(), 1e-12 * (1.0 + ops.C0.norm() + ops.C1.norm() * rep.xhat.norm()));
  }
}

TEST(RomSolve, NewtonConvergesQuadratically) {
  // Checked on the last step that still lies above the rounding floor.
  std::mt19937_64 rng(53);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto m = random_model(rng, 6, true);
    const Parameter mu{uniform(rng, 0.5, 2.0)};
    const auto rep = rom_solve(m, mu);
    if (!rep.converged) continue;
    const auto ops = reduced_operators_at(m, mu);
    const double floor = 1e-13 * (1.0 + ops.C0.norm() + rep.xhat.norm());
    const auto& h = rep.residual_history;
    std::size_t k = h.size() - 1;
    while (k >= 2 && h[k] < floor) --k;
    if (k < 2 || h[k] < floor) continue;
    const double last = h[k] / h[k - 1], previous = h[k - 1] / h[k - 2];
    if (previous > 0.5) continue;  // still in the damped phase
    EXPECT_LE(last, previous * previous * 10.0) << "trial " << trial;
    ++checked;
  }
  EXPECT_GE(checked, 5);
}

TEST(Truncate, ScalarSlices) {
  ReducedModel m;
  m.r = 2;
  m.theta_groups = {{theta(0)}, {theta(0)}, {theta(0)}};
  m.C2_ops = {(Matrix(2, 3) << 1, 2, 3, 4, 5, 6).finished()};
  m.C1_ops = {(Matrix(2, 2) << 7, 8, 9, 10).finished()};
  m.C0_ops = {Eigen::Vector2d(11, 12)};
  m.basis_ref = "pod:r=2";
  const auto t = truncate(m, 1);
  EXPECT_EQ(t.C2_ops[0], Matrix::Constant(1, 1, 1.0));
  EXPECT_EQ(t.C1_ops[0], Matrix::Constant(1, 1, 7.0));
  EXPECT_EQ(t.C0_ops[0], Vector::Constant(1, 11.0));
  EXPECT_EQ(t.basis_ref, "pod:r=2[:1]");
  EXPECT_THROW(truncate(m, 2), ShapeError);
  EXPECT_THROW(truncate(m, 0), ShapeError);
}

TEST(Truncate, ShapesForEveryWidth) {
  std::mt19937_64 rng(54);
  const auto m = random_model(rng, 6, true);
  for (Eigen::Index w = 1; w < 6; ++w) {
    const auto t = truncate(m, w);
    EXPECT_NO_THROW(t.check_shapes());
    EXPECT_EQ(t.C2_ops[0].cols(), w * (w + 1) / 2);
    // the kept quadratic columns act on the leading pairs only
    const Vector x = random_vector(rng, w);
    Vector padded = Vector::Zero(6);
    padded.head(w) = x;
    EXPECT_LE((t.C2_ops[0] * sym_square(x) - (m.C2_ops[0] * sym_square(padded)).head(w)).norm(), 1e-14);
  }
}

TEST(PredictFull, IdentityBasisReproducesFom) {
  for (const auto& name : {"pale-ct", "pale-dt", "pare-ct"}) {
    const auto p = benchmarks::make_family(name, 3);
    const Matrix v = Matrix::Identity(9, 9);
    const auto m = intrusive_rom(p, v);
    Parameter mu(p.d);
    for (std::size_t j = 0; j < p.d; ++j) mu[j] = 0.5 * (p.domain[j].lower + p.domain[j].upper);
    const Vector x = fom_solve(p, mu);
    EXPECT_LE((predict_full(m, v, mu) - x).norm(), 1e-10 * x.norm()) << name;
  }
}

TEST(PredictFull, ZeroModelGivesZero) {
  ReducedModel m = scalar_model({}, {0.0}, {0.0});
  EXPECT_EQ(predict_full(m, Matrix::Ones(4, 1), {1.0}), Vector::Zero(4));
}

TEST(PredictFull, LiesInBasisSpan) {
  std::mt19937_64 rng(55);
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, 30, 5));
  const Matrix v = qr.householderQ() * Matrix::Identity(30, 5);
  const auto m = random_model(rng, 5, true);
  const Vector x = predict_full(m, v, {1.3});
  EXPECT_LE((x - v * (v.transpose() * x)).norm(), 1e-12 * x.norm());
}

TEST(RelativeErrors, ExactAndHalfError) {
  ReducedModel m = scalar_model({}, {0.5}, {1.0});  // xhat = 2
  const Matrix v = Matrix::Constant(1, 1, 1.0);
  const std::vector<Parameter> mu = {{1.0}};
  EXPECT_EQ(relative_errors(m, v, mu, Matrix::Constant(1, 1, 2.0)).er_avg, 0.0);
  EXPECT_DOUBLE_EQ(relative_errors(m, v, mu, Matrix::Constant(1, 1, 4.0)).er_avg, 0.5);
}

TEST(RelativeErrors, ZeroReferenceIsExcludedWithWarning) {
  ReducedModel m = scalar_model({}, {0.5}, {1.0});
  const auto rep = relative_errors(m, Matrix::Constant(1, 1, 1.0), {{1.0}, {1.5}}, (Matrix(1, 2) << 0.0, 4.0).finished());
  EXPECT_EQ(rep.used, 1u);
  EXPECT_TRUE(std::isnan(rep.errors[0]));
  EXPECT_DOUBLE_EQ(rep.er_avg, 0.5);
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_NE(rep.warnings[0].find("zero FOM solution"), std::string::npos);
}

TEST(RelativeErrors, NonConvergedIsFlagged) {
  ReducedModel m = scalar_model({-1.0}, {0.0}, {-1.0});
  const auto rep = relative_errors(m, Matrix::Constant(1, 1, 1.0), {{1.0}}, Matrix::Constant(1, 1, 1.0));
  EXPECT_FALSE(rep.all_converged());
  EXPECT_EQ(rep.used, 0u);
  EXPECT_TRUE(std::isnan(rep.er_avg));
}
