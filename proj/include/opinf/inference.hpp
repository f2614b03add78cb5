#pragma once

// Operator inference: regression of the reduced polynomial model onto
// projected snapshots with diagonal Tikhonov regularization.

#include "opinf/basis.hpp"
#include "opinf/parallel.hpp"
#include "opinf/rom.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace opinf {

struct TrainingData {
  Matrix Xhat;      // k x r
  Matrix Xhat2;     // k x q(r)
  Matrix Theta_C2;  // k x n_C2
  Matrix Theta_C1;  // k x n_C1
  Matrix Theta_C0;  // k x n_C0
  std::vector<Parameter> parameters;
  ThetaGroups groups;

  Eigen::Index samples() const { return Xhat.rows(); }
  Eigen::Index r() const { return Xhat.cols(); }
};

namespace detail {

inline Matrix theta_matrix(const std::vector<ThetaMonomial>& group, const std::vector<Parameter>& params) {
  Matrix t(static_cast<Eigen::Index>(params.size()), static_cast<Eigen::Index>(group.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    t.row(static_cast<Eigen::Index>(i)) = ThetaGroups::evaluate(group, params[i]).transpose();
  return t;
}

}  // namespace detail

/// Needs only the theta functions, never the full-order operators.
inline TrainingData assemble_training(const ThetaGroups& groups, const Matrix& v, const SnapshotSet& snapshots) {
  if (v.rows() != snapshots.states.rows()) throw ShapeError("basis and snapshots have different state dimensions");
  if (snapshots.states.cols() != static_cast<Eigen::Index>(snapshots.parameters.size()))
    throw ShapeError("snapshot count does not match parameter count");
  TrainingData td;
  td.groups = groups;
  td.parameters = snapshots.parameters;
  td.Xhat = (v.transpose() * snapshots.states).transpose();
  const Eigen::Index k = td.Xhat.rows();
  td.Xhat2.resize(k, compressed_size(v.cols()));
  for (Eigen::Index i = 0; i < k; ++i) td.Xhat2.row(i) = sym_square(td.Xhat.row(i).transpose()).transpose();
  td.Theta_C2 = detail::theta_matrix(groups.theta_C2, td.parameters);
  td.Theta_C1 = detail::theta_matrix(groups.theta_C1, td.parameters);
  td.Theta_C0 = detail::theta_matrix(groups.theta_C0, td.parameters);
  return td;
}

inline TrainingData assemble_training(const ProblemDefinition& problem, const Matrix& v, const SnapshotSet& snapshots) {
  if (v.rows() != problem.state_dimension()) throw ShapeError("basis rows do not match problem state dimension");
  return assemble_training(derive_theta_groups(problem), v, snapshots);
}

/// Row i = [theta_C2(mu_i) (x) xhat2_i' | theta_C1(mu_i) (x) xhat_i' | theta_C0(mu_i)].
inline Matrix assemble_data_matrix(const TrainingData& td) {
  const Eigen::Index k = td.samples(), r = td.r(), q = td.Xhat2.cols();
  const Eigen::Index n2 = td.Theta_C2.cols(), n1 = td.Theta_C1.cols(), n0 = td.Theta_C0.cols();
  Matrix d(k, q * n2 + r * n1 + n0);
  Eigen::Index col = 0;
  for (Eigen::Index j = 0; j < n2; ++j, col += q) d.middleCols(col, q) = td.Theta_C2.col(j).asDiagonal() * td.Xhat2;
  for (Eigen::Index j = 0; j < n1; ++j, col += r) d.middleCols(col, r) = td.Theta_C1.col(j).asDiagonal() * td.Xhat;
  d.rightCols(n0) = td.Theta_C0;
  return d;
}

inline constexpr double kRankTolerance = 1e-12;

/// argmin ||D O - Xhat||_F^2 + ||Lambda O||_F^2 with Lambda = diag(lambda2 on the
/// leading c2_columns, lambda1 elsewhere), via column-pivoted QR of [D; Lambda].
inline Matrix solve_regularized_lsq(const Matrix& d, const Matrix& xhat, double lambda1, double lambda2,
                                    Eigen::Index c2_columns = 0) {
  if (!(lambda1 >= 0.0 && lambda2 >= 0.0)) throw DomainError("regularization weights must be non-negative");
  if (d.rows() == 0 || d.cols() == 0) throw ShapeError("data matrix is empty");
  if (xhat.rows() != d.rows()) throw ShapeError("data matrix and target have different row counts");
  if (c2_columns < 0 || c2_columns > d.cols()) throw ShapeError("quadratic block width out of range");
  const Eigen::Index k = d.rows(), p = d.cols();
  Matrix stacked = Matrix::Zero(k + p, p);
  stacked.topRows(k) = d;
  for (Eigen::Index j = 0; j < p; ++j) stacked(k + j, j) = j < c2_columns ? lambda2 : lambda1;
  Matrix rhs = Matrix::Zero(k + p, xhat.cols());
  rhs.topRows(k) = xhat;
  Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
  // With every weight positive the stacked system has full rank in exact
  // arithmetic (each pivot is at least the smallest weight), so only an
  // unregularized block can make it numerically singular.
  const bool unregularized = lambda1 == 0.0 || (lambda2 == 0.0 && c2_columns > 0);
  if (unregularized) {
    qr.setThreshold(kRankTolerance * static_cast<double>(k + p));
    if (qr.rank() < p)
      throw RankError("regularized data matrix [D; Lambda] has rank " + std::to_string(qr.rank()) + " < p(r) = " +
                      std::to_string(p) + "; use a positive minimum lambda or more training samples");
  } else {
    qr.setThreshold(std::numeric_limits<double>::min());
  }
  return qr.solve(rhs);
}

struct RankReport {
  Eigen::Index rank_D = 0, cols_D = 0;
  Eigen::Index rank_Theta_C2 = 0, rank_Theta_C1 = 0, rank_Theta_C0 = 0;
  Eigen::Index rank_Xhat2 = 0, rank_Xhat = 0;
  Eigen::Index samples = 0;
  bool samples_exceed_unknowns = false;  // k > p(r)
  bool D_full_rank = false;
  bool Theta_C2_full_rank = false, Theta_C1_full_rank = false, Theta_C0_full_rank = false;
  bool Xhat2_full_rank = false, Xhat_full_rank = false;

  bool all_full_rank() const {
    return D_full_rank && Theta_C2_full_rank && Theta_C1_full_rank && Theta_C0_full_rank && Xhat2_full_rank &&
           Xhat_full_rank;
  }
};

/// SVD rank with threshold max(rows, cols) * sigma_1 * 1e-12.
inline Eigen::Index numerical_rank(const Matrix& m) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (!(s[0] > 0.0)) return 0;
  const double tol = static_cast<double>(std::max(m.rows(), m.cols())) * s[0] * kRankTolerance;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) rank += s[i] > tol ? 1 : 0;
  return rank;
}

/// Advisory: never blocks training.
inline RankReport rank_diagnostics(const TrainingData& td, const Matrix& d) {
  RankReport rep;
  rep.samples = td.samples();
  rep.cols_D = d.cols();
  rep.rank_D = numerical_rank(d);
  rep.rank_Theta_C2 = numerical_rank(td.Theta_C2);
  rep.rank_Theta_C1 = numerical_rank(td.Theta_C1);
  rep.rank_Theta_C0 = numerical_rank(td.Theta_C0);
  rep.rank_Xhat2 = numerical_rank(td.Xhat2);
  rep.rank_Xhat = numerical_rank(td.Xhat);
  rep.samples_exceed_unknowns = rep.samples > rep.cols_D;
  rep.D_full_rank = rep.rank_D == rep.cols_D;
  // empty theta groups impose no condition
  rep.Theta_C2_full_rank = rep.rank_Theta_C2 == td.Theta_C2.cols();
  rep.Theta_C1_full_rank = rep.rank_Theta_C1 == td.Theta_C1.cols();
  rep.Theta_C0_full_rank = rep.rank_Theta_C0 == td.Theta_C0.cols();
  rep.Xhat2_full_rank = td.Theta_C2.cols() == 0 || rep.rank_Xhat2 == td.Xhat2.cols();
  rep.Xhat_full_rank = rep.rank_Xhat == td.Xhat.cols();
  return rep;
}

/// Operators for one (lambda1, lambda2).
inline ReducedModel fit(const TrainingData& td, const Matrix& d, double lambda1, double lambda2) {
  const Eigen::Index c2 = td.Xhat2.cols() * td.Theta_C2.cols();
  ReducedModel m = unpack(solve_regularized_lsq(d, td.Xhat, lambda1, lambda2, c2), td.r(), td.groups);
  m.lambda1 = lambda1;
  m.lambda2 = lambda2;
  return m;
}

/// (1/k) sum_i ||xhat_i - xbar_i||^2 with xbar_i the ROM solution at mu_i;
/// +inf when any solve fails.
inline double training_mse(const ReducedModel& m, const TrainingData& td, const RomOptions& options = {}) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < td.samples(); ++i) {
    RomSolveReport rep;
    try {
      rep = rom_solve(m, td.parameters[static_cast<std::size_t>(i)], options);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
    if (!rep.converged || !rep.xhat.allFinite()) return std::numeric_limits<double>::infinity();
    sum += (td.Xhat.row(i).transpose() - rep.xhat).squaredNorm();
  }
  return td.samples() > 0 ? sum / static_cast<double>(td.samples()) : 0.0;
}

/// The regression objective ||D O - Xhat||_F^2 (+ the penalty when asked).
inline double regression_loss(const Matrix& d, const Matrix& o, const Matrix& xhat, double lambda1 = 0.0,
                              double lambda2 = 0.0, Eigen::Index c2_columns = 0) {
  double loss = (d * o - xhat).squaredNorm();
  for (Eigen::Index j = 0; j < o.rows(); ++j) {
    const double w = j < c2_columns ? lambda2 : lambda1;
    loss += w * w * o.row(j).squaredNorm();
  }
  return loss;
}

inline std::vector<double> default_lambda_grid() {
  std::vector<double> g = {0.0};
  for (int e = -12; e <= 4; e += 2) g.push_back(std::pow(10.0, e));
  return g;
}

struct Candidate {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double mse = std::numeric_limits<double>::infinity();
  std::string failure;
};

struct Selection {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double mse = std::numeric_limits<double>::infinity();
  std::vector<Candidate> candidates;
};

/// Exhaustive grid search on training mse. Ties go to the lexicographically
/// smallest (lambda1, lambda2). With no quadratic operators lambda2 has no
/// effect, so grid2 collapses to its smallest entry.
inline Selection select_hyperparameters(std::vector<double> grid1, std::vector<double> grid2, const TrainingData& td,
                                        const RomOptions& options = {}, std::size_t workers = 0) {
  if (grid1.empty() || grid2.empty()) throw DomainError("hyperparameter grids must be nonempty");
  std::sort(grid1.begin(), grid1.end());
  std::sort(grid2.begin(), grid2.end());
  grid1.erase(std::unique(grid1.begin(), grid1.end()), grid1.end());
  grid2.erase(std::unique(grid2.begin(), grid2.end()), grid2.end());
  if (td.Theta_C2.cols() == 0) grid2.resize(1);
  const Matrix d = assemble_data_matrix(td);
  Selection sel;
  for (double l1 : grid1)
    for (double l2 : grid2) sel.candidates.push_back({l1, l2, std::numeric_limits<double>::infinity(), {}});
  parallel_for(
      sel.candidates.size(),
      [&](std::size_t c) {
        auto& cand = sel.candidates[c];
        try {
          cand.mse = training_mse(fit(td, d, cand.lambda1, cand.lambda2), td, options);
          if (!std::isfinite(cand.mse)) cand.failure = "reduced solve failed at a training parameter";
        } catch (const Error& e) {
          cand.mse = std::numeric_limits<double>::infinity();
          cand.failure = e.what();
        }
      },
      workers);
  const Candidate* best = nullptr;
  for (const auto& cand : sel.candidates)  // candidates are in lexicographic order
    if (std::isfinite(cand.mse) && (!best || cand.mse < best->mse)) best = &cand;
  if (!best) throw SolverError("training failed: every hyperparameter candidate failed");
  sel.lambda1 = best->lambda1;
  sel.lambda2 = best->lambda2;
  sel.mse = best->mse;
  return sel;
}

struct TrainingOptions {
  std::vector<double> grid_lambda1 = default_lambda_grid();
  std::vector<double> grid_lambda2 = default_lambda_grid();
  RomOptions rom;
  std::size_t workers = 0;
};

struct TrainingOutcome {
  ReducedModel model;
  Selection selection;
  RankReport diagnostics;
};

inline TrainingOutcome train_with_report(const TrainingData& td, const TrainingOptions& options = {}) {
  TrainingOutcome out;
  const Matrix d = assemble_data_matrix(td);
  out.diagnostics = rank_diagnostics(td, d);
  out.selection = select_hyperparameters(options.grid_lambda1, options.grid_lambda2, td, options.rom, options.workers);
  out.model = fit(td, d, out.selection.lambda1, out.selection.lambda2);
  return out;
}

inline ReducedModel train(const ProblemDefinition& problem, const PodBasis& basis, const SnapshotSet& snapshots,
                          const TrainingOptions& options = {}) {
  auto out = train_with_report(assemble_training(problem, basis.V, snapshots), options);
  out.model.basis_ref = basis.method_name() + ":r=" + std::to_string(basis.rank());
  return out.model;
}

}  // namespace opinf
