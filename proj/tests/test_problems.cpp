#include "opinf/benchmarks.hpp"
#include "opinf/fom.hpp"
#include "opinf/problems.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace opinf;
using opinf::testing::random_matrix;
using opinf::testing::random_symmetric;
using opinf::testing::uniform;

namespace {

std::vector<std::vector<int>> exponents_of(const std::vector<ThetaMonomial>& group) {
  std::vector<std::vector<int>> out;
  for (const auto& m : group) out.push_back(m.exponents);
  return out;
}

Matrix assembled_linear(const PolynomialForm& form, const Parameter& mu) {
  const Eigen::Index N = form.state_dimension();
  Matrix c1 = Matrix::Zero(N, N);
  for (std::size_t j = 0; j < form.groups.theta_C1.size(); ++j)
    c1 += evaluate_theta(form.groups.theta_C1[j], mu) * dense_linear_block(form, j);
  return c1;
}

Vector assembled_constant(const PolynomialForm& form, const Parameter& mu) {
  Vector c0 = Vector::Zero(form.state_dimension());
  for (std::size_t j = 0; j < form.groups.theta_C0.size(); ++j)
    c0 += evaluate_theta(form.groups.theta_C0[j], mu) * constant_block(form, j);
  return c0;
}

Parameter sample(std::mt19937_64& rng, const ProblemDefinition& p) {
  Parameter mu(p.d);
  for (std::size_t j = 0; j < p.d; ++j) mu[j] = uniform(rng, p.domain[j].lower, p.domain[j].upper);
  return mu;
}

/// Matrix-form residuals of the original equations, stacked and vectorized.
Vector direct_residual(const ProblemDefinition& p, const Parameter& mu, const std::vector<Matrix>& x) {
  std::vector<Matrix> r;
  for (std::size_t i = 0; i < p.s; ++i) {
    const Matrix a = p.A[i].assemble(mu);
    const Matrix q = p.Q(i).assemble(mu);
    switch (p.kind) {
      case ProblemKind::ContinuousLyapunov: r.push_back(a.transpose() * x[i] + x[i] * a + q); break;
      case ProblemKind::DiscreteLyapunov: r.push_back(a.transpose() * x[i] * a - x[i] + q); break;
      case ProblemKind::ContinuousRiccati:
        r.push_back(a.transpose() * x[i] + x[i] * a - x[i] * p.G().assemble(mu) * x[i] + q);
        break;
      case ProblemKind::CoupledLyapunov: {
        Matrix ri = a.transpose() * x[i] + x[i] * a + q;
        for (std::size_t j = 0; j < p.s; ++j) ri += (*p.coupling)(Eigen::Index(i), Eigen::Index(j)) * x[j];
        r.push_back(ri);
        break;
      }
    }
  }
  return detail::stack_blocks(r);
}

}  // namespace

TEST(ThetaGroups, ContinuousPaleFamily) {
  const auto groups = derive_theta_groups(benchmarks::pale_ct(4));
  const std::vector<std::vector<int>> expected = {{-2}, {-1}, {0}};
  EXPECT_EQ(exponents_of(groups.theta_C1), expected);
  EXPECT_EQ(exponents_of(groups.theta_C0), expected);
  EXPECT_TRUE(groups.theta_C2.empty());
}

TEST(ThetaGroups, ContinuousPaleBlocksMatchKroneckerAssembly) {
  const auto p = benchmarks::pale_ct(4);
  const auto form = polynomial_form(p);
  std::mt19937_64 rng(21);
  for (int k = 0; k < 5; ++k) {
    const Parameter mu = sample(rng, p);
    const Matrix at = p.A[0].assemble(mu).transpose();
    const Matrix id = Matrix::Identity(4, 4);
    const Matrix expected = kron(id, at) + kron(at, id) + Matrix::Identity(16, 16);
    EXPECT_LE((assembled_linear(form, mu) - expected).norm(), 1e-12 * expected.norm());
    const Vector q = vec(p.Q(0).assemble(mu));
    EXPECT_LE((assembled_constant(form, mu) - q).norm(), 1e-14 * q.norm());
  }
}

TEST(ThetaGroups, RiccatiQuadraticGroup) {
  const auto groups = derive_theta_groups(benchmarks::pare_ct(4));
  EXPECT_EQ(exponents_of(groups.theta_C2), (std::vector<std::vector<int>>{{2}}));
  EXPECT_EQ(exponents_of(groups.theta_C0), (std::vector<std::vector<int>>{{-2}}));
  EXPECT_EQ(exponents_of(groups.theta_C1), (std::vector<std::vector<int>>{{-2}, {-1}, {0}}));
}

TEST(ThetaGroups, RiccatiQuadraticBlockMatchesPointwise) {
  const auto p = benchmarks::pare_ct(4);
  const auto form = polynomial_form(p);
  std::mt19937_64 rng(22);
  for (int k = 0; k < 5; ++k) {
    const Parameter mu = sample(rng, p);
    const Matrix x = random_symmetric(rng, 4);
    const Matrix g = p.G().assemble(mu);
    const Vector expected = -vec(x * g * x);
    const Vector got = evaluate_theta(form.groups.theta_C2[0], mu) * apply_quadratic_block(form, 0, vec(x));
    EXPECT_LE((got - expected).norm(), 1e-13 * expected.norm());
  }
}

TEST(ThetaGroups, ConstantProblemHasSingleConstantMonomials) {
  ProblemDefinition p;
  p.kind = ProblemKind::ContinuousRiccati;
  p.n = 2;
  p.domain = {{1.0, 2.0}};
  p.A = {AffineFamily::constant(-Matrix::Identity(2, 2), 1)};
  p.M = {AffineFamily::constant(Matrix::Ones(1, 2), 1)};
  p.B = AffineFamily::constant(Matrix::Ones(2, 1), 1);
  const auto groups = derive_theta_groups(p);
  for (const auto* g : {&groups.theta_C2, &groups.theta_C1, &groups.theta_C0}) {
    ASSERT_EQ(g->size(), 1u);
    EXPECT_TRUE(g->front().is_constant());
  }
}

TEST(ThetaGroups, DiscreteUsesPairwiseProductsAndKeepsConstant) {
  const auto groups = derive_theta_groups(benchmarks::pale_dt(4));
  const std::vector<std::vector<int>> expected = {{-2, 0}, {-1, 1}, {0, 0}, {0, 2}, {1, 1}, {2, 0}};
  EXPECT_EQ(exponents_of(groups.theta_C1), expected);
  EXPECT_EQ(exponents_of(groups.theta_C0), (std::vector<std::vector<int>>{{0, 0}, {1, 0}, {2, 0}}));
}

TEST(ThetaGroups, CoupledUnionAcrossBlocks) {
  const auto groups = derive_theta_groups(benchmarks::pale_coupled(4));
  const std::vector<std::vector<int>> expected = {{-2}, {-1}, {0}, {1}, {2}};
  EXPECT_EQ(exponents_of(groups.theta_C1), expected);
  EXPECT_EQ(exponents_of(groups.theta_C0), expected);
}

TEST(ThetaGroups, IdentityShiftAlwaysPresent) {
  ProblemDefinition p;
  p.kind = ProblemKind::DiscreteLyapunov;
  p.n = 2;
  p.domain = {{1.0, 2.0}};
  p.A = {AffineFamily(2, 2, 1, {{{1.0, {1}}, 0.1 * Matrix::Identity(2, 2)}})};
  p.M = {AffineFamily::constant(Matrix::Ones(1, 2), 1)};
  const auto groups = derive_theta_groups(p);
  EXPECT_EQ(exponents_of(groups.theta_C1), (std::vector<std::vector<int>>{{0}, {2}}));
}

TEST(PolynomialForm, ReproducesEquationResidualForEveryKind) {
  std::mt19937_64 rng(23);
  for (const auto& name : benchmarks::family_names()) {
    const auto p = benchmarks::make_family(name, 4);
    const auto form = polynomial_form(p);
    for (int k = 0; k < 20; ++k) {
      const Parameter mu = sample(rng, p);
      std::vector<Matrix> x;
      for (std::size_t i = 0; i < p.s; ++i) x.push_back(random_symmetric(rng, 4));
      const Vector expected = direct_residual(p, mu, x);
      // Dense constant blocks (identity projection) for the linear part.
      const Vector xs = detail::stack_blocks(x);
      Vector got = assembled_linear(form, mu) * xs - xs + assembled_constant(form, mu);
      for (std::size_t j = 0; j < form.groups.theta_C2.size(); ++j)
        got += evaluate_theta(form.groups.theta_C2[j], mu) * apply_quadratic_block(form, j, xs);
      EXPECT_LE((got - expected).norm(), 1e-12 * expected.norm()) << name;
      EXPECT_LE((polynomial_residual(form, mu, xs) - expected).norm(), 1e-12 * expected.norm()) << name;
    }
  }
}

TEST(Validate, RiccatiBenchmarkIsStableAtSamples) { EXPECT_TRUE(validate(benchmarks::pare_ct(16)).empty()); }

TEST(Validate, UnstableRiccatiA) {
  auto p = benchmarks::pare_ct(3);
  p.A = {AffineFamily::constant(Matrix::Identity(3, 3), 1)};
  const auto findings = validate(p);
  ASSERT_FALSE(findings.empty());
  EXPECT_NE(findings.front().find("unstable A at mu="), std::string::npos);
}

TEST(Validate, DomainContainingZero) {
  auto p = benchmarks::pale_ct(3);
  p.domain = {{-1.0, 1.0}};
  const auto findings = validate(p);
  ASSERT_EQ(findings.size(), 1u);
  EXPECT_NE(findings.front().find("domain contains 0"), std::string::npos);
}

TEST(Validate, StructuralProblemsAreReportedNotThrown) {
  auto p = benchmarks::pale_ct(3);
  p.B = AffineFamily::constant(Matrix::Ones(3, 1), 1);
  std::vector<std::string> findings;
  EXPECT_NO_THROW(findings = validate(p));
  EXPECT_FALSE(findings.empty());
  EXPECT_THROW(check_structure(p), FormatError);
}

TEST(Validate, WellPosedLyapunovFamiliesHaveNoFindings) {
  for (const auto& name : benchmarks::family_names()) EXPECT_TRUE(validate(benchmarks::make_family(name, 8)).empty()) << name;
}
