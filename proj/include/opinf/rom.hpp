#pragma once

// Reduced quadratic fixed-point models  xhat = C2 xhat^2 + C1 xhat + C0  with
// affine parameter dependence: evaluation, Newton solves, truncation, lifting
// and the average relative error metric.

#include "opinf/basis.hpp"
#include "opinf/problems.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace opinf {

struct ReducedModel {
  std::vector<Matrix> C2_ops;  // r x q(r) each
  std::vector<Matrix> C1_ops;  // r x r each
  std::vector<Vector> C0_ops;  // r each
  ThetaGroups theta_groups;
  Eigen::Index r = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::string basis_ref;
  std::string method = "opinf";

  /// p(r) = q(r) n_C2 + r n_C1 + n_C0.
  Eigen::Index operator_rows() const {
    return compressed_size(r) * static_cast<Eigen::Index>(theta_groups.theta_C2.size()) +
           r * static_cast<Eigen::Index>(theta_groups.theta_C1.size()) +
           static_cast<Eigen::Index>(theta_groups.theta_C0.size());
  }

  void check_shapes() const {
    const Eigen::Index q = compressed_size(r);
    if (C2_ops.size() != theta_groups.theta_C2.size() || C1_ops.size() != theta_groups.theta_C1.size() ||
        C0_ops.size() != theta_groups.theta_C0.size())
      throw ShapeError("operator count does not match theta groups");
    for (const auto& c : C2_ops)
      if (c.rows() != r || c.cols() != q) throw ShapeError("C2 operator must be r x q(r)");
    for (const auto& c : C1_ops)
      if (c.rows() != r || c.cols() != r) throw ShapeError("C1 operator must be r x r");
    for (const auto& c : C0_ops)
      if (c.size() != r) throw ShapeError("C0 operator must have length r");
  }
};

inline Eigen::Index operator_rows(Eigen::Index r, const ThetaGroups& g) {
  ReducedModel m;
  m.r = r;
  m.theta_groups = g;
  return m.operator_rows();
}

/// Stacked operator O (p(r) x r) with the transposed blocks C2_j', C1_j', C0_j'
/// in theta order, the row layout that makes D O = Xhat.
inline Matrix pack(const ReducedModel& m) {
  m.check_shapes();
  Matrix o(m.operator_rows(), m.r);
  Eigen::Index row = 0;
  for (const auto& c : m.C2_ops) {
    o.middleRows(row, c.cols()) = c.transpose();
    row += c.cols();
  }
  for (const auto& c : m.C1_ops) {
    o.middleRows(row, m.r) = c.transpose();
    row += m.r;
  }
  for (const auto& c : m.C0_ops) o.row(row++) = c.transpose();
  return o;
}

inline ReducedModel unpack(const Matrix& o, Eigen::Index r, const ThetaGroups& groups) {
  ReducedModel m;
  m.r = r;
  m.theta_groups = groups;
  if (o.rows() != m.operator_rows() || o.cols() != r) throw ShapeError("stacked operator has wrong shape");
  const Eigen::Index q = compressed_size(r);
  Eigen::Index row = 0;
  for (std::size_t j = 0; j < groups.theta_C2.size(); ++j, row += q) m.C2_ops.push_back(o.middleRows(row, q).transpose());
  for (std::size_t j = 0; j < groups.theta_C1.size(); ++j, row += r) m.C1_ops.push_back(o.middleRows(row, r).transpose());
  for (std::size_t j = 0; j < groups.theta_C0.size(); ++j, ++row) m.C0_ops.push_back(o.row(row).transpose());
  return m;
}

struct ReducedOperators {
  Matrix C2;
  Matrix C1;
  Vector C0;
};

inline ReducedOperators reduced_operators_at(const ReducedModel& m, const Parameter& mu) {
  ReducedOperators out{Matrix::Zero(m.r, compressed_size(m.r)), Matrix::Zero(m.r, m.r), Vector::Zero(m.r)};
  for (std::size_t j = 0; j < m.C2_ops.size(); ++j) out.C2 += evaluate_theta(m.theta_groups.theta_C2[j], mu) * m.C2_ops[j];
  for (std::size_t j = 0; j < m.C1_ops.size(); ++j) out.C1 += evaluate_theta(m.theta_groups.theta_C1[j], mu) * m.C1_ops[j];
  for (std::size_t j = 0; j < m.C0_ops.size(); ++j) out.C0 += evaluate_theta(m.theta_groups.theta_C0[j], mu) * m.C0_ops[j];
  return out;
}

/// C2 xhat^2 + (C1 - I) xhat + C0.
inline Vector reduced_residual(const ReducedOperators& ops, const Vector& x) {
  Vector r = ops.C1 * x - x + ops.C0;
  if (ops.C2.size() > 0) r += ops.C2 * sym_square(x);
  return r;
}

struct RomOptions {
  double tolerance = 1e-12;
  int max_iterations = 100;
  int max_halvings = 30;
};

struct RomSolveReport {
  Vector xhat;
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
  std::vector<double> residual_history;
};

namespace detail {

inline Vector checked_lu_solve(const Matrix& k, const Vector& rhs, const char* what) {
  Eigen::PartialPivLU<Matrix> lu(k);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-15) || !std::isfinite(rcond))
    throw SolverError(std::string(what) + " is singular (rcond " + std::to_string(rcond) + ")");
  return lu.solve(rhs);
}

}  // namespace detail

inline RomSolveReport rom_solve(const ReducedOperators& ops, const RomOptions& options = {}) {
  const Eigen::Index r = ops.C1.rows();
  const double target = options.tolerance * (1.0 + ops.C0.norm());
  const Matrix id = Matrix::Identity(r, r);
  RomSolveReport rep;
  const bool linear = ops.C2.size() == 0 || ops.C2.isZero(0.0);
  if (linear) {
    // (I - C1) xhat = C0 with two steps of iterative refinement.
    const Matrix k = id - ops.C1;
    Eigen::FullPivLU<Matrix> lu(k);
    if (lu.rank() < r) throw SolverError("reduced linear system I - C1 is singular");
    rep.xhat = lu.solve(ops.C0);
    for (int refine = 0; refine < 2; ++refine) rep.xhat += lu.solve(Vector(ops.C0 - k * rep.xhat));
    rep.iterations = 1;
    rep.residual_norm = reduced_residual(ops, rep.xhat).norm();
    rep.residual_history = {rep.residual_norm};
    rep.converged = std::isfinite(rep.residual_norm) && rep.residual_norm <= target;
    return rep;
  }
  Vector x = Vector::Zero(r);
  Vector res = reduced_residual(ops, x);
  double norm = res.norm();
  rep.residual_history.push_back(norm);
  while (!(norm <= target) && rep.iterations < options.max_iterations) {
    const Matrix jac = ops.C2 * sym_square_jacobian(x) + ops.C1 - id;
    const Vector step = detail::checked_lu_solve(jac, -res, "reduced Newton Jacobian");
    double t = 1.0;
    Vector trial = x + step;
    Vector trial_res = reduced_residual(ops, trial);
    for (int h = 0; h < options.max_halvings && !(trial_res.norm() < norm); ++h) {
      t *= 0.5;
      trial = x + t * step;
      trial_res = reduced_residual(ops, trial);
    }
    ++rep.iterations;
    if (!(trial_res.norm() < norm)) break;  // no decrease even after halving
    x = std::move(trial);
    res = std::move(trial_res);
    norm = res.norm();
    rep.residual_history.push_back(norm);
  }
  rep.xhat = x;
  rep.residual_norm = norm;
  rep.converged = norm <= target;
  return rep;
}

inline RomSolveReport rom_solve(const ReducedModel& m, const Parameter& mu, const RomOptions& options = {}) {
  return rom_solve(reduced_operators_at(m, mu), options);
}

/// Keeps the leading w coordinates: C0 rows, C1 rows and columns, C2 rows and
/// the first q(w) compressed columns (pairs with both indices <= w).
inline ReducedModel truncate(const ReducedModel& m, Eigen::Index w) {
  if (w < 1 || w >= m.r) throw ShapeError("truncation size must satisfy 1 <= w < r");
  ReducedModel t = m;
  t.r = w;
  t.basis_ref = m.basis_ref + "[:" + std::to_string(w) + "]";
  const Eigen::Index q = compressed_size(w);
  for (auto& c : t.C2_ops) c = Matrix(c.topLeftCorner(w, q));
  for (auto& c : t.C1_ops) c = Matrix(c.topLeftCorner(w, w));
  for (auto& c : t.C0_ops) c = Vector(c.head(w));
  return t;
}

inline Vector predict_full(const ReducedModel& m, const Matrix& v, const Parameter& mu, const RomOptions& options = {}) {
  if (v.cols() != m.r) throw ShapeError("basis width does not match model dimension");
  const auto rep = rom_solve(m, mu, options);
  if (!rep.converged)
    throw SolverError("reduced solve did not converge at mu=" + format_parameter(mu) + " (residual " +
                      std::to_string(rep.residual_norm) + ")");
  return v * rep.xhat;
}

struct ErrorReport {
  double er_avg = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> errors;  // NaN where excluded
  std::vector<int> iterations;
  std::vector<bool> converged;
  std::vector<std::string> warnings;
  std::size_t used = 0;

  bool all_converged() const {
    for (bool c : converged)
      if (!c) return false;
    return true;
  }
};

/// Per-sample ||x - V xhat|| / ||x|| against given reference states, and their
/// mean over the samples where the ROM converged and ||x|| > 0.
inline ErrorReport relative_errors(const ReducedModel& m, const Matrix& v, const std::vector<Parameter>& params,
                                   const Matrix& reference, const RomOptions& options = {}) {
  if (reference.cols() != static_cast<Eigen::Index>(params.size()) || reference.rows() != v.rows())
    throw ShapeError("reference states do not match parameters and basis");
  ErrorReport out;
  double sum = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    RomSolveReport rep;
    try {
      rep = rom_solve(m, params[i], options);
    } catch (const SolverError& e) {
      rep.converged = false;
      out.warnings.push_back("mu=" + format_parameter(params[i]) + ": " + e.what());
    }
    out.iterations.push_back(rep.iterations);
    out.converged.push_back(rep.converged);
    const double ref = reference.col(col).norm();
    double err = std::numeric_limits<double>::quiet_NaN();
    if (!rep.converged) {
      out.warnings.push_back("mu=" + format_parameter(params[i]) + ": ROM did not converge; sample excluded");
    } else if (!(ref > 0.0)) {
      out.warnings.push_back("mu=" + format_parameter(params[i]) + ": zero FOM solution; sample excluded");
    } else {
      err = (reference.col(col) - v * rep.xhat).norm() / ref;
      sum += err;
      ++out.used;
    }
    out.errors.push_back(err);
  }
  if (out.used > 0) out.er_avg = sum / static_cast<double>(out.used);
  return out;
}

inline ErrorReport avg_relative_error(const ReducedModel& m, const Matrix& v, const ProblemDefinition& problem,
                                      const std::vector<Parameter>& test_params, const RomOptions& options = {}) {
  const SnapshotSet reference = build_snapshots(problem, test_params);
  return relative_errors(m, v, test_params, reference.states, options);
}

}  // namespace opinf
