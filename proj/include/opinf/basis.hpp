#pragma once

// Snapshot collection and reduced bases: POD (fixed rank or energy
// criterion), residual-greedy column selection, and seeded random sampling.

#include "opinf/fom.hpp"
#include "opinf/parallel.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace opinf {

struct SnapshotSet {
  Matrix states;  // N x k, column i = x(mu_i)
  std::vector<Parameter> parameters;
  std::string problem_ref;
  std::vector<double> residuals;  // relative equation residual per column, when known

  Eigen::Index count() const { return states.cols(); }
};

enum class BasisMethod { Pod, Greedy, Randomized };

struct PodBasis {
  Matrix V;
  Vector singular_values;  // of the snapshot matrix, all k of them
  BasisMethod method = BasisMethod::Pod;
  std::uint64_t seed = 0;

  Eigen::Index rank() const { return V.cols(); }

  std::string method_name() const {
    switch (method) {
      case BasisMethod::Pod: return "pod";
      case BasisMethod::Greedy: return "greedy";
      case BasisMethod::Randomized: return "randomized(" + std::to_string(seed) + ")";
    }
    return "unknown";
  }
};

/// Column i is fom_solve(problem, params[i]), whatever the worker schedule.
inline SnapshotSet build_snapshots(const ProblemDefinition& problem, const std::vector<Parameter>& params,
                                   std::size_t workers = 0) {
  SnapshotSet set;
  set.parameters = params;
  set.problem_ref = problem.name;
  set.states.resize(problem.state_dimension(), static_cast<Eigen::Index>(params.size()));
  set.residuals.assign(params.size(), 0.0);
  parallel_for(
      params.size(),
      [&](std::size_t i) {
        try {
          const FomSolution sol = fom_solve_blocks(problem, params[i]);
          set.states.col(static_cast<Eigen::Index>(i)) = detail::stack_blocks(sol.X_blocks);
          set.residuals[i] = sol.relative_residual;
        } catch (const DomainError& e) {
          throw DomainError("snapshot at mu=" + format_parameter(params[i]) + ": " + e.what());
        } catch (const Error& e) {
          throw SolverError("snapshot at mu=" + format_parameter(params[i]) + ": " + e.what());
        }
      },
      workers);
  return set;
}

namespace detail {

/// Thin left singular vectors and values of X via QR followed by an SVD of R.
inline std::pair<Matrix, Vector> thin_svd(const Matrix& x) {
  if (x.rows() >= x.cols()) {
    Eigen::HouseholderQR<Matrix> qr(x);
    const Eigen::Index k = x.cols();
    const Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Matrix> svd(r, Eigen::ComputeThinU);
    const Matrix q = qr.householderQ() * Matrix::Identity(x.rows(), k);
    return {q * svd.matrixU(), svd.singularValues()};
  }
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU);
  Vector sigma = Vector::Zero(x.cols());
  sigma.head(svd.singularValues().size()) = svd.singularValues();
  return {svd.matrixU(), sigma};
}

inline double rank_threshold(const Matrix& x, double sigma1) {
  return static_cast<double>(std::max(x.rows(), x.cols())) * sigma1 * 1e-12;
}

/// Appends the normalized residual of v against the columns of q (two MGS passes).
inline double orthogonalize_into(Matrix& q, Eigen::Index filled, Vector v) {
  for (int pass = 0; pass < 2; ++pass)
    for (Eigen::Index j = 0; j < filled; ++j) v -= q.col(j).dot(v) * q.col(j);
  const double norm = v.norm();
  if (norm > 0.0) q.col(filled) = v / norm;
  return norm;
}

}  // namespace detail

struct Truncation {
  bool by_energy = false;
  Eigen::Index r = 0;
  double epsilon = 0.0;

  static Truncation rank(Eigen::Index r) { return {false, r, 0.0}; }
  static Truncation energy(double eps) { return {true, 0, eps}; }
};

/// Smallest r with sum_{i<=r} sigma_i^2 / sum sigma_i^2 >= 1 - eps.
inline Eigen::Index energy_rank(const Vector& sigma, double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) throw DomainError("energy tolerance must lie in [0, 1)");
  const double total = sigma.squaredNorm();
  if (!(total > 0.0)) throw RankError("snapshot matrix is zero; no energy to capture");
  double cumulative = 0.0;
  for (Eigen::Index r = 0; r < sigma.size(); ++r) {
    cumulative += sigma[r] * sigma[r];
    if (cumulative / total >= 1.0 - eps) return r + 1;
  }
  return sigma.size();
}

inline PodBasis pod_basis(const SnapshotSet& snapshots, const Truncation& mode) {
  const Matrix& x = snapshots.states;
  if (x.cols() < 1) throw RankError("POD needs at least one snapshot");
  auto [u, sigma] = detail::thin_svd(x);
  Eigen::Index r = mode.by_energy ? energy_rank(sigma, mode.epsilon) : mode.r;
  if (mode.by_energy)  // rounding in the cumulative sum must not pull in null directions
    while (r > 1 && !(sigma[r - 1] > detail::rank_threshold(x, sigma[0]))) --r;
  if (r < 1 || r > x.cols())
    throw RankError("requested rank " + std::to_string(r) + " exceeds snapshot count " + std::to_string(x.cols()));
  if (r > x.rows()) throw RankError("requested rank exceeds state dimension");
  if (!(sigma[r - 1] > detail::rank_threshold(x, sigma[0])))
    throw RankError("requested rank " + std::to_string(r) + " exceeds numerical rank of the snapshots");
  PodBasis basis;
  basis.V = u.leftCols(r);
  basis.singular_values = sigma;
  basis.method = BasisMethod::Pod;
  return basis;
}

inline PodBasis pod_basis(const SnapshotSet& snapshots, Eigen::Index r) { return pod_basis(snapshots, Truncation::rank(r)); }

/// Picks, r times, the snapshot with the largest residual after projection on
/// the current span; ties go to the lowest column index.
inline PodBasis greedy_basis(const SnapshotSet& snapshots, Eigen::Index r) {
  const Matrix& x = snapshots.states;
  if (r < 1 || r > x.cols()) throw RankError("greedy rank must lie in [1, k]");
  Matrix residual = x;
  const double scale = std::max(1e-300, x.colwise().norm().maxCoeff());
  PodBasis basis;
  basis.V.resize(x.rows(), r);
  for (Eigen::Index step = 0; step < r; ++step) {
    Eigen::Index best = 0;
    double best_norm = -1.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double nj = residual.col(j).norm();
      if (nj > best_norm) {
        best_norm = nj;
        best = j;
      }
    }
    if (best_norm < 1e-12 * scale)
      throw RankError("greedy selection exhausted at rank " + std::to_string(step) + " (residuals below 1e-12)");
    detail::orthogonalize_into(basis.V, step, x.col(best));
    const Vector q = basis.V.col(step);
    residual -= q * (q.transpose() * residual);
  }
  basis.singular_values = detail::thin_svd(x).second;
  basis.method = BasisMethod::Greedy;
  return basis;
}

/// r distinct snapshot columns drawn uniformly (partial Fisher-Yates on a
/// seeded mt19937_64), orthonormalized in draw order.
inline PodBasis randomized_basis(const SnapshotSet& snapshots, Eigen::Index r, std::uint64_t seed) {
  const Matrix& x = snapshots.states;
  const Eigen::Index k = x.cols();
  if (r < 1 || r > k) throw RankError("randomized rank must lie in [1, k]");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto span = static_cast<std::uint64_t>(k - i);
    const auto j = i + static_cast<Eigen::Index>(rng() % span);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  PodBasis basis;
  basis.V.resize(x.rows(), r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Vector v = x.col(order[static_cast<std::size_t>(i)]);
    const double norm = detail::orthogonalize_into(basis.V, i, v);
    if (!(norm > 1e-12 * std::max(1e-300, v.norm())))
      throw RankError("sampled columns are rank deficient below r = " + std::to_string(r) + " (seed " +
                      std::to_string(seed) + ")");
  }
  basis.singular_values = detail::thin_svd(x).second;
  basis.method = BasisMethod::Randomized;
  basis.seed = seed;
  return basis;
}

inline Vector project(const Matrix& v, const Vector& x) {
  if (x.size() != v.rows()) throw ShapeError("project: state length does not match basis rows");
  return v.transpose() * x;
}

inline Vector lift(const Matrix& v, const Vector& xhat) {
  if (xhat.size() != v.cols()) throw ShapeError("lift: reduced length does not match basis columns");
  return v * xhat;
}

/// ||X - V V'X||_F^2.
inline double projection_error_squared(const Matrix& v, const Matrix& x) {
  return (x - v * (v.transpose() * x)).squaredNorm();
}

}  // namespace opinf
