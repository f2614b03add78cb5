#include "opinf/basis.hpp"
#include "opinf/benchmarks.hpp"
#include "opinf/sampling.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace opinf;
using namespace opinf::testing;

namespace {

ProblemDefinition scalar_problem() {
  ProblemDefinition p;
  p.kind = ProblemKind::ContinuousLyapunov;
  p.n = 1;
  p.domain = {{1.0, 2.0}};
  p.A = {AffineFamily::constant(Matrix::Constant(1, 1, -1.0), 1)};
  p.M = {AffineFamily::constant(Matrix::Constant(1, 1, std::sqrt(2.0)), 1)};
  return p;
}

SnapshotSet wrap(const Matrix& x) {
  SnapshotSet s;
  s.states = x;
  s.parameters.assign(static_cast<std::size_t>(x.cols()), Parameter{1.0});
  return s;
}

/// Random N x k matrix with prescribed geometric singular value decay.
Matrix decaying_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double decay) {
  Eigen::HouseholderQR<Matrix> qu(random_matrix(rng, rows, cols)), qw(random_matrix(rng, cols, cols));
  const Matrix u = qu.householderQ() * Matrix::Identity(rows, cols);
  const Matrix w = qw.householderQ() * Matrix::Identity(cols, cols);
  Vector s(cols);
  for (Eigen::Index i = 0; i < cols; ++i) s[i] = std::pow(decay, static_cast<double>(i));
  return u * s.asDiagonal() * w.transpose();
}

double orthonormality_defect(const Matrix& v) {
  return (v.transpose() * v - Matrix::Identity(v.cols(), v.cols())).norm();
}

}  // namespace

TEST(BuildSnapshots, ScalarProblem) {
  const auto s = build_snapshots(scalar_problem(), {{1.5}});
  ASSERT_EQ(s.states.rows(), 1);
  ASSERT_EQ(s.states.cols(), 1);
  EXPECT_NEAR(s.states(0, 0), 1.0, 1e-15);
}

TEST(BuildSnapshots, DuplicatedParametersGiveIdenticalColumns) {
  const auto p = benchmarks::pale_ct(6);
  const auto s = build_snapshots(p, {{0.5}, {0.5}, {1.2}, {0.5}}, 3);
  EXPECT_EQ(s.states.col(0), s.states.col(1));
  EXPECT_EQ(s.states.col(0), s.states.col(3));
}

TEST(BuildSnapshots, OrderIndependentOfWorkerCount) {
  const auto p = benchmarks::pale_ct(8);
  const auto params = log_spaced(p.domain[0], 9);
  EXPECT_EQ(build_snapshots(p, params, 1).states, build_snapshots(p, params, 4).states);
}

TEST(BuildSnapshots, ContinuousPaleResidualsAtSizeThirtyTwo) {
  const auto p = benchmarks::pale_ct(32);
  const auto params = log_spaced(p.domain[0], 20);
  const auto s = build_snapshots(p, params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix x = unvec(s.states.col(static_cast<Eigen::Index>(i)), 32, 32);
    EXPECT_LE(equation_residual(p, params[i], {x}).relative, 1e-9);
  }
}

TEST(BuildSnapshots, FailureNamesTheParameter) {
  const auto p = benchmarks::pale_ct(4);
  try {
    build_snapshots(p, {{1.0}, {7.0}});
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("mu=(7)"), std::string::npos) << e.what();
  }
}

TEST(PodBasis, RankOneExample) {
  Matrix x(2, 2);
  x << 1, 0, 0, 0;
  const auto b = pod_basis(wrap(x), 1);
  EXPECT_NEAR(b.singular_values[0], 1.0, 1e-15);
  EXPECT_NEAR(b.singular_values[1], 0.0, 1e-15);
  EXPECT_NEAR(std::abs(b.V(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(b.V(1, 0), 0.0, 1e-15);
  EXPECT_THROW(pod_basis(wrap(x), 2), RankError);
}

TEST(PodBasis, EnergyExample) {
  const Matrix x = Eigen::Vector3d(2.0, 1.0, 1.0).asDiagonal();
  EXPECT_EQ(energy_rank(Eigen::Vector3d(2.0, 1.0, 1.0), 0.2), 2);
  EXPECT_EQ(pod_basis(wrap(x), Truncation::energy(0.2)).rank(), 2);
}

TEST(PodBasis, InvalidArguments) {
  const Matrix x = Matrix::Identity(3, 3);
  EXPECT_THROW(pod_basis(wrap(x), Truncation::energy(1.0)), DomainError);
  EXPECT_THROW(pod_basis(wrap(x), Truncation::energy(-0.1)), DomainError);
  EXPECT_THROW(pod_basis(wrap(x), 4), RankError);
}

TEST(PodBasis, EnergyTruncationAndEckartYoungOnRandomMatrices) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = decaying_matrix(rng, 200, 40, uniform(rng, 0.5, 0.9));
    const double eps = std::pow(10.0, uniform(rng, -6.0, -1.0));
    const auto b = pod_basis(wrap(x), Truncation::energy(eps));
    const Vector s = Eigen::JacobiSVD<Matrix>(x).singularValues();
    const double total = s.squaredNorm();
    const Eigen::Index r = b.rank();
    EXPECT_GE(s.head(r).squaredNorm() / total, 1.0 - eps);
    if (r > 1) {
      EXPECT_LT(s.head(r - 1).squaredNorm() / total, 1.0 - eps);
    }
    const double tail = s.tail(40 - r).squaredNorm();
    EXPECT_LE(std::abs(projection_error_squared(b.V, x) - tail), 1e-9 * tail + 1e-24 * total) << "r=" << r;
    EXPECT_LE(projection_error_squared(b.V, x) / total, eps * (1.0 + 1e-9));
    EXPECT_LE(orthonormality_defect(b.V), 1e-12);
  }
}

TEST(PodBasis, SingularValuesSortedAndErrorMonotone) {
  std::mt19937_64 rng(42);
  const Matrix x = decaying_matrix(rng, 60, 15, 0.6);
  double previous = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 1; r <= 15; ++r) {
    const auto b = pod_basis(wrap(x), r);
    for (Eigen::Index i = 1; i < b.singular_values.size(); ++i) EXPECT_LE(b.singular_values[i], b.singular_values[i - 1]);
    EXPECT_GE(b.singular_values.minCoeff(), 0.0);
    const double err = projection_error_squared(b.V, x);
    EXPECT_LE(err, previous);
    previous = err;
  }
}

TEST(GreedyBasis, PicksColumnsByResidualNorm) {
  const Matrix x = Eigen::Vector3d(3.0, 2.0, 1.0).asDiagonal();
  const auto b = greedy_basis(wrap(x), 2);
  EXPECT_LE((b.V.col(0).cwiseAbs() - Vector::Unit(3, 0)).norm(), 1e-15);
  EXPECT_LE((b.V.col(1).cwiseAbs() - Vector::Unit(3, 1)).norm(), 1e-15);
}

TEST(GreedyBasis, IdenticalColumns) {
  const Matrix x = Vector::Constant(4, 2.0).replicate(1, 3);
  const auto b = greedy_basis(wrap(x), 1);
  EXPECT_NEAR(b.V.col(0).norm(), 1.0, 1e-15);
  EXPECT_THROW(greedy_basis(wrap(x), 2), RankError);
}

TEST(GreedyBasis, TiesGoToLowestIndex) {
  Matrix x = Matrix::Zero(3, 3);
  x(1, 0) = 1.0;
  x(0, 1) = 1.0;
  x(2, 2) = 1.0;
  const auto b = greedy_basis(wrap(x), 2);
  EXPECT_EQ(b.V.col(0), Vector::Unit(3, 1));
  EXPECT_EQ(b.V.col(1), Vector::Unit(3, 0));
}

TEST(GreedyBasis, NeverBeatsPod) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = decaying_matrix(rng, 50, 20, 0.7);
    for (Eigen::Index r : {1, 4, 9}) {
      const auto g = greedy_basis(wrap(x), r);
      EXPECT_LE(orthonormality_defect(g.V), 1e-12);
      EXPECT_GE(projection_error_squared(g.V, x), projection_error_squared(pod_basis(wrap(x), r).V, x) * (1 - 1e-12));
    }
  }
}

TEST(RandomizedBasis, AllColumnsWhenRankEqualsCount) {
  std::mt19937_64 rng(44);
  const Matrix x = random_matrix(rng, 8, 4);
  const auto b = randomized_basis(wrap(x), 4, 7);
  EXPECT_LE(orthonormality_defect(b.V), 1e-12);
  EXPECT_LE(projection_error_squared(b.V, x), 1e-24 * x.squaredNorm());
}

TEST(RandomizedBasis, DeterministicForSeed) {
  std::mt19937_64 rng(45);
  const Matrix x = random_matrix(rng, 30, 12);
  EXPECT_EQ(randomized_basis(wrap(x), 5, 99).V, randomized_basis(wrap(x), 5, 99).V);
  EXPECT_EQ(randomized_basis(wrap(x), 5, 99).method_name(), "randomized(99)");
}

TEST(RandomizedBasis, NeverBeatsPod) {
  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = decaying_matrix(rng, 50, 20, 0.7);
    const auto b = randomized_basis(wrap(x), 6, static_cast<std::uint64_t>(trial));
    EXPECT_GE(projection_error_squared(b.V, x), projection_error_squared(pod_basis(wrap(x), 6).V, x) * (1 - 1e-12));
  }
}

TEST(RandomizedBasis, RankDeficientSampleIsError) {
  const Matrix x = Vector::Ones(5).replicate(1, 4);
  EXPECT_THROW(randomized_basis(wrap(x), 2, 1), RankError);
}

TEST(ProjectLift, Examples) {
  const Matrix v = Vector::Unit(3, 0);
  const Vector x = Eigen::Vector3d(5.0, 0.0, 0.0);
  const Vector xhat = project(v, x);
  ASSERT_EQ(xhat.size(), 1);
  EXPECT_EQ(xhat[0], 5.0);
  EXPECT_EQ(lift(v, xhat), x);
  EXPECT_EQ(project(v, Vector(Eigen::Vector3d(0.0, 1.0, -2.0)))[0], 0.0);
  EXPECT_THROW(project(v, Vector::Ones(2)), ShapeError);
  EXPECT_THROW(lift(v, Vector::Ones(2)), ShapeError);
}

TEST(ProjectLift, OrthogonalProjectionIsOptimal) {
  std::mt19937_64 rng(47);
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, 20, 4));
  const Matrix v = qr.householderQ() * Matrix::Identity(20, 4);
  const Vector x = random_vector(rng, 20);
  const double best = (x - lift(v, project(v, x))).norm();
  for (int k = 0; k < 100; ++k) EXPECT_LE(best, (x - v * random_vector(rng, 4)).norm());
  const Vector in_span = v * random_vector(rng, 4);
  EXPECT_LE((lift(v, project(v, in_span)) - in_span).norm(), 1e-14 * in_span.norm());
}

TEST(Sampling, NestedSetsAreSupersets) {
  const auto pool = log_spaced({0.1, 2.0}, 400);
  const auto sets = nested_sets(pool, {10, 40, 80}, 5);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(sets[1][i], sets[2][i]);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(sets[0][i], sets[1][i]);
  EXPECT_THROW(nested_sets(pool, {40, 10}, 5), DomainError);
}

TEST(Sampling, GridAndRandomSets) {
  const auto grid = tensor_grid({{2.0, 6.0}, {2.0, 6.0}}, 14);
  EXPECT_EQ(grid.size(), 196u);
  EXPECT_EQ(grid.front(), (Parameter{2.0, 2.0}));
  EXPECT_EQ(grid.back(), (Parameter{6.0, 6.0}));
  const auto a = seeded_uniform({{0.1, 2.0}}, 50, 3), b = seeded_uniform({{0.1, 2.0}}, 50, 3);
  EXPECT_EQ(a, b);
  for (const auto& mu : a) EXPECT_TRUE(mu[0] >= 0.1 && mu[0] <= 2.0);
  const auto logs = log_spaced({0.1, 2.0}, 5);
  EXPECT_EQ(logs.front()[0], 0.1);
  EXPECT_EQ(logs.back()[0], 2.0);
  EXPECT_NEAR(logs[1][0] / logs[0][0], logs[4][0] / logs[3][0], 1e-12);
}
