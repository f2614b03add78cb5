#pragma once

// Full-order solvers for the four equation classes, plus a dense vectorized
// oracle used for cross-validation at small sizes.

#include "opinf/problems.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace opinf {

struct FomSolution {
  std::vector<Matrix> X_blocks;
  double residual_norm = 0.0;
  double relative_residual = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;
};

struct ResidualNorm {
  double absolute = 0.0;
  double relative = 0.0;
};

inline Matrix symmetrize(const Matrix& x) { return 0.5 * (x + x.transpose()); }

namespace detail {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline std::string eigenvalue_report(const ComplexMatrix& t) {
  std::ostringstream out;
  out << "eigenvalues:";
  for (Eigen::Index i = 0; i < t.rows(); ++i) out << ' ' << t(i, i);
  return out.str();
}

}  // namespace detail

namespace detail {

/// Real quasi-triangular Schur form to complex triangular form, one unitary
/// rotation per 2x2 block (a complex Schur decomposition computed directly is
/// an order of magnitude slower in Eigen).
inline void triangularize_real_schur(ComplexMatrix& t, ComplexMatrix& u) {
  using C = std::complex<double>;
  const Eigen::Index n = t.rows();
  for (Eigen::Index m = n - 1; m >= 1; --m) {
    const C sub = t(m, m - 1);
    if (sub == C(0.0)) continue;
    const C a = t(m - 1, m - 1), b = t(m - 1, m), c = t(m, m - 1), d = t(m, m);
    const C half = 0.5 * (a + d);
    const C lambda = half + std::sqrt(0.25 * (a - d) * (a - d) + b * c);
    const C mu = lambda - d;
    const double r = std::hypot(std::abs(mu), std::abs(sub));
    const C cs = mu / r, sn = sub / r;
    Eigen::Matrix2cd g;
    g << std::conj(cs), sn, -sn, cs;
    t.block(m - 1, m - 1, 2, n - m + 1) = g * t.block(m - 1, m - 1, 2, n - m + 1);
    t.block(0, m - 1, m + 1, 2) = t.block(0, m - 1, m + 1, 2) * g.adjoint();
    u.middleCols(m - 1, 2) = u.middleCols(m - 1, 2) * g.adjoint();
    t(m, m - 1) = 0.0;
  }
}

}  // namespace detail

/// Bartels-Stewart on the complex Schur form of A; the factorization is kept
/// so repeated right-hand sides cost O(n^3) without a new Schur decomposition.
class LyapunovSolver {
 public:
  enum class Type { Continuous, Discrete };

  LyapunovSolver(const Matrix& a, Type type) : type_(type), n_(a.rows()) {
    if (a.rows() != a.cols()) throw ShapeError("Lyapunov solver needs a square A");
    Eigen::RealSchur<Matrix> schur(a);
    if (schur.info() != Eigen::Success) throw SolverError("Schur decomposition of A did not converge");
    t_ = schur.matrixT().cast<std::complex<double>>();
    u_ = schur.matrixU().cast<std::complex<double>>();
    detail::triangularize_real_schur(t_, u_);
    check_solvable(a);
  }

  /// Continuous: A'X + XA + Q = 0.  Discrete: A'XA - X + Q = 0.
  Matrix solve(const Matrix& q) const {
    if (q.rows() != n_ || q.cols() != n_) throw ShapeError("Lyapunov right-hand side has wrong shape");
    using detail::ComplexMatrix;
    const ComplexMatrix qt = u_.adjoint() * q.cast<std::complex<double>>() * u_;
    const ComplexMatrix th = t_.adjoint();  // lower triangular
    ComplexMatrix y(n_, n_);
    for (Eigen::Index k = 0; k < n_; ++k) {
      detail::ComplexVector rhs = -qt.col(k);
      if (type_ == Type::Continuous) {
        if (k > 0) rhs.noalias() -= y.leftCols(k) * t_.col(k).head(k);
        ComplexMatrix lhs = th;
        lhs.diagonal().array() += t_(k, k);
        y.col(k) = lhs.triangularView<Eigen::Lower>().solve(rhs);
      } else {
        if (k > 0) rhs.noalias() -= th * (y.leftCols(k) * t_.col(k).head(k));
        ComplexMatrix lhs = t_(k, k) * th;
        lhs.diagonal().array() -= 1.0;
        y.col(k) = lhs.triangularView<Eigen::Lower>().solve(rhs);
      }
    }
    return symmetrize((u_ * y * u_.adjoint()).real());
  }

 private:
  void check_solvable(const Matrix& a) const {
    const double scale = std::max(1.0, a.norm());
    double worst = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n_; ++i)
      for (Eigen::Index k = i; k < n_; ++k) {
        const auto li = std::conj(t_(i, i));
        const auto lk = t_(k, k);
        const double gap = type_ == Type::Continuous ? std::abs(li + lk) : std::abs(li * lk - 1.0);
        worst = std::min(worst, gap);
      }
    const double tol = type_ == Type::Continuous ? 1e-13 * scale : 1e-13 * std::max(1.0, scale * scale);
    if (worst <= tol)
      throw SolverError(std::string(type_ == Type::Continuous ? "singular Sylvester operator" : "singular Stein operator") +
                        " (eigenvalue gap " + std::to_string(worst) + "); " + detail::eigenvalue_report(t_));
  }

  Type type_;
  Eigen::Index n_;
  detail::ComplexMatrix t_;
  detail::ComplexMatrix u_;
};

inline Matrix solve_continuous_lyapunov(const Matrix& a, const Matrix& q) {
  return LyapunovSolver(a, LyapunovSolver::Type::Continuous).solve(q);
}

inline Matrix solve_discrete_lyapunov(const Matrix& a, const Matrix& q) {
  return LyapunovSolver(a, LyapunovSolver::Type::Discrete).solve(q);
}

/// Relative residual ||R||_F / (||A'X||_F + ||XA||_F + ||XGX||_F + ||Q||_F); G may be empty.
inline ResidualNorm continuous_residual(const Matrix& a, const Matrix& x, const Matrix& q, const Matrix* g = nullptr) {
  const Matrix ax = a.transpose() * x;
  Matrix r = ax + ax.transpose() + q;
  double scale = 2.0 * ax.norm() + q.norm();
  if (g) {
    const Matrix xgx = x * *g * x;
    r -= xgx;
    scale += xgx.norm();
  }
  const double abs = r.norm();
  return {abs, scale > 0.0 ? abs / scale : abs};
}

inline ResidualNorm discrete_residual(const Matrix& a, const Matrix& x, const Matrix& q) {
  const Matrix axa = a.transpose() * x * a;
  const Matrix r = axa - x + q;
  const double scale = axa.norm() + x.norm() + q.norm();
  const double abs = r.norm();
  return {abs, scale > 0.0 ? abs / scale : abs};
}

/// Summed over the coupled equations; the relative value is the worst block.
inline ResidualNorm coupled_residual(const std::vector<Matrix>& a, const Matrix& pi, const std::vector<Matrix>& x,
                                     const std::vector<Matrix>& q) {
  ResidualNorm out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Matrix ax = a[i].transpose() * x[i];
    Matrix r = ax + ax.transpose() + q[i];
    double scale = 2.0 * ax.norm() + q[i].norm();
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double pij = pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      r += pij * x[j];
      scale += std::abs(pij) * x[j].norm();
    }
    const double abs = r.norm();
    out.absolute += abs;
    out.relative = std::max(out.relative, scale > 0.0 ? abs / scale : abs);
  }
  return out;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline constexpr Eigen::Index kDenseStateLimit = 4096;

namespace detail {

inline Vector dense_solve(const Matrix& k, const Vector& rhs) {
  Eigen::PartialPivLU<Matrix> lu(k);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) throw SolverError("singular vectorized operator (rcond " + std::to_string(rcond) + ")");
  return lu.solve(rhs);
}

inline Matrix continuous_kron(const Matrix& a) {
  const Matrix id = Matrix::Identity(a.rows(), a.rows());
  return kron(id, a.transpose()) + kron(a.transpose(), id);
}

inline std::vector<Matrix> split_blocks(const Vector& x, std::size_t s, Eigen::Index n) {
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < s; ++i) out.push_back(block_of(x, i, n));
  return out;
}

inline Vector stack_blocks(const std::vector<Matrix>& blocks) {
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.size();
  Vector x(total);
  Eigen::Index offset = 0;
  for (const auto& b : blocks) {
    x.segment(offset, b.size()) = vec(b);
    offset += b.size();
  }
  return x;
}

inline Matrix coupled_kron(const std::vector<Matrix>& a, const Matrix& pi) {
  const std::size_t s = a.size();
  const Eigen::Index n = a[0].rows();
  const Eigen::Index nn = n * n;
  Matrix k = Matrix::Zero(static_cast<Eigen::Index>(s) * nn, static_cast<Eigen::Index>(s) * nn);
  for (std::size_t i = 0; i < s; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    k.block(ii * nn, ii * nn, nn, nn) = continuous_kron(a[i]);
    for (std::size_t j = 0; j < s; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      k.block(ii * nn, jj * nn, nn, nn).diagonal().array() += pi(ii, jj);
    }
  }
  return k;
}

}  // namespace detail

struct CoupledOptions {
  int max_sweeps = 300;
  double tolerance = 1e-12;
  bool allow_dense_fallback = true;
};

/// Gauss-Seidel sweeps over the blocks; each block is a continuous Lyapunov
/// solve with the diagonal coupling pi_ii absorbed as the shift A_i + pi_ii/2 I.
inline FomSolution solve_coupled_lyapunov(const std::vector<Matrix>& a, const Matrix& pi, const std::vector<Matrix>& q,
                                          const CoupledOptions& options = {}) {
  const std::size_t s = a.size();
  if (s == 0 || q.size() != s || pi.rows() != static_cast<Eigen::Index>(s) || pi.cols() != static_cast<Eigen::Index>(s))
    throw ShapeError("coupled Lyapunov data has inconsistent block counts");
  const Eigen::Index n = a[0].rows();
  std::vector<LyapunovSolver> solvers;
  solvers.reserve(s);
  for (std::size_t i = 0; i < s; ++i) {
    const double shift = 0.5 * pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    solvers.emplace_back(a[i] + shift * Matrix::Identity(n, n), LyapunovSolver::Type::Continuous);
  }
  FomSolution sol;
  sol.X_blocks.assign(s, Matrix::Zero(n, n));
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    for (std::size_t i = 0; i < s; ++i) {
      Matrix rhs = q[i];
      for (std::size_t j = 0; j < s; ++j)
        if (j != i) rhs += pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * sol.X_blocks[j];
      sol.X_blocks[i] = solvers[i].solve(rhs);
    }
    const ResidualNorm res = coupled_residual(a, pi, sol.X_blocks, q);
    sol.residual_history.push_back(res.relative);
    sol.residual_norm = res.absolute;
    sol.iterations = sweep;
    if (res.relative <= options.tolerance) return sol;
    const auto& h = sol.residual_history;
    const bool stalled = h.size() >= 5 && h.back() > 0.95 * h[h.size() - 5];
    if (stalled) break;
  }
  const Eigen::Index N = static_cast<Eigen::Index>(s) * n * n;
  if (options.allow_dense_fallback && N <= kDenseStateLimit) {
    std::vector<Matrix> rhs_blocks;
    for (const auto& qi : q) rhs_blocks.push_back(-qi);
    const Vector x = detail::dense_solve(detail::coupled_kron(a, pi), detail::stack_blocks(rhs_blocks));
    sol.X_blocks = detail::split_blocks(x, s, n);
    for (auto& xb : sol.X_blocks) xb = symmetrize(xb);
    const ResidualNorm res = coupled_residual(a, pi, sol.X_blocks, q);
    sol.residual_norm = res.absolute;
    sol.residual_history.push_back(res.relative);
    if (res.relative <= 1e-9) return sol;
  }
  std::ostringstream msg;
  msg << "coupled Lyapunov sweeps did not converge; relative residual history:";
  for (double r : sol.residual_history) msg << ' ' << r;
  throw SolverError(msg.str());
}

struct RiccatiOptions {
  int max_iterations = 100;
  double tolerance = 1e-13;
  double acceptance = 1e-9;
};

/// Newton-Kleinman from the zero initial guess; requires a stable A.
inline FomSolution solve_continuous_riccati(const Matrix& a, const Matrix& g, const Matrix& q,
                                            const RiccatiOptions& options = {}) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || g.rows() != n || g.cols() != n || q.rows() != n || q.cols() != n)
    throw ShapeError("Riccati data has inconsistent shapes");
  FomSolution sol;
  Matrix x = Matrix::Zero(n, n);
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Matrix closed = a - g * x;
    Matrix next = LyapunovSolver(closed, LyapunovSolver::Type::Continuous).solve(q + x * g * x);
    const ResidualNorm res = continuous_residual(a, next, q, &g);
    sol.iterations = it;
    if (it > 1 && res.relative >= previous && previous <= options.acceptance) break;  // stagnation at rounding level
    x = std::move(next);
    sol.residual_history.push_back(res.relative);
    sol.residual_norm = res.absolute;
    if (n > 0) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(x, Eigen::EigenvaluesOnly);
      const double lo = eig.eigenvalues().minCoeff();
      const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
      if (lo < -1e-8 * std::max(hi, std::numeric_limits<double>::min()))
        throw SolverError("Newton-Kleinman produced an indefinite iterate at step " + std::to_string(it) +
                          " (min eigenvalue " + std::to_string(lo) + ")");
    }
    if (res.relative <= options.tolerance) break;
    previous = res.relative;
  }
  if (sol.residual_history.empty() || sol.residual_history.back() > options.acceptance) {
    std::ostringstream msg;
    msg << "Newton-Kleinman did not converge in " << options.max_iterations << " iterations; history:";
    for (double r : sol.residual_history) msg << ' ' << r;
    throw SolverError(msg.str());
  }
  sol.X_blocks = {x};
  return sol;
}

/// Matrix-form residual of the problem equations at mu.
inline ResidualNorm equation_residual(const ProblemDefinition& p, const Parameter& mu, const std::vector<Matrix>& x) {
  switch (p.kind) {
    case ProblemKind::ContinuousLyapunov:
      return continuous_residual(p.A[0].assemble(mu), x.at(0), p.Q(0).assemble(mu));
    case ProblemKind::DiscreteLyapunov:
      return discrete_residual(p.A[0].assemble(mu), x.at(0), p.Q(0).assemble(mu));
    case ProblemKind::ContinuousRiccati: {
      const Matrix g = p.G().assemble(mu);
      return continuous_residual(p.A[0].assemble(mu), x.at(0), p.Q(0).assemble(mu), &g);
    }
    case ProblemKind::CoupledLyapunov: {
      std::vector<Matrix> a, q;
      for (std::size_t i = 0; i < p.s; ++i) {
        a.push_back(p.A[i].assemble(mu));
        q.push_back(p.Q(i).assemble(mu));
      }
      return coupled_residual(a, *p.coupling, x, q);
    }
  }
  return {};
}

inline FomSolution fom_solve_blocks(const ProblemDefinition& p, const Parameter& mu) {
  if (!p.contains(mu)) throw DomainError("parameter " + format_parameter(mu) + " outside the problem domain");
  FomSolution sol;
  switch (p.kind) {
    case ProblemKind::ContinuousLyapunov:
      sol.X_blocks = {solve_continuous_lyapunov(p.A[0].assemble(mu), p.Q(0).assemble(mu))};
      break;
    case ProblemKind::DiscreteLyapunov:
      sol.X_blocks = {solve_discrete_lyapunov(p.A[0].assemble(mu), p.Q(0).assemble(mu))};
      break;
    case ProblemKind::CoupledLyapunov: {
      std::vector<Matrix> a, q;
      for (std::size_t i = 0; i < p.s; ++i) {
        a.push_back(p.A[i].assemble(mu));
        q.push_back(p.Q(i).assemble(mu));
      }
      sol = solve_coupled_lyapunov(a, *p.coupling, q);
      break;
    }
    case ProblemKind::ContinuousRiccati:
      sol = solve_continuous_riccati(p.A[0].assemble(mu), p.G().assemble(mu), p.Q(0).assemble(mu));
      break;
  }
  const ResidualNorm res = equation_residual(p, mu, sol.X_blocks);
  sol.residual_norm = res.absolute;
  sol.relative_residual = res.relative;
  return sol;
}

/// x(mu) = [vec(X_1); ...; vec(X_s)].
inline Vector fom_solve(const ProblemDefinition& p, const Parameter& mu) {
  return detail::stack_blocks(fom_solve_blocks(p, mu).X_blocks);
}

/// Dense solve of the vectorized equation  C2 x^2 + Cbar1 x + C0 = 0, with
/// operators built from Kronecker products of the assembled matrices.
inline Vector kronecker_oracle_solve(const ProblemDefinition& p, const Parameter& mu) {
  check_structure(p);
  const Eigen::Index N = p.state_dimension();
  if (N > kDenseStateLimit)
    throw GuardError("kronecker oracle limited to N <= " + std::to_string(kDenseStateLimit) + ", got " +
                     std::to_string(N));
  const Eigen::Index n = p.n;
  switch (p.kind) {
    case ProblemKind::ContinuousLyapunov:
      return detail::dense_solve(detail::continuous_kron(p.A[0].assemble(mu)), -vec(p.Q(0).assemble(mu)));
    case ProblemKind::DiscreteLyapunov: {
      const Matrix at = p.A[0].assemble(mu).transpose();
      Matrix k = kron(at, at);
      k.diagonal().array() -= 1.0;
      return detail::dense_solve(k, -vec(p.Q(0).assemble(mu)));
    }
    case ProblemKind::CoupledLyapunov: {
      std::vector<Matrix> a, q;
      for (std::size_t i = 0; i < p.s; ++i) {
        a.push_back(p.A[i].assemble(mu));
        q.push_back(-p.Q(i).assemble(mu));
      }
      return detail::dense_solve(detail::coupled_kron(a, *p.coupling), detail::stack_blocks(q));
    }
    case ProblemKind::ContinuousRiccati: {
      // Damped Newton on F(x) = K x - vec(XGX) + vec(Q) from x = 0.
      const Matrix k = detail::continuous_kron(p.A[0].assemble(mu));
      const Matrix g = p.G().assemble(mu);
      const Vector c0 = vec(p.Q(0).assemble(mu));
      const Matrix id = Matrix::Identity(n, n);
      auto residual = [&](const Vector& x) {
        const Matrix xm = unvec(x, n, n);
        return Vector(k * x - vec(xm * g * xm) + c0);
      };
      Vector x = Vector::Zero(N);
      Vector f = residual(x);
      const double scale = c0.norm() + 1.0;
      for (int it = 0; it < 100 && f.norm() > 1e-14 * scale; ++it) {
        const Matrix xm = unvec(x, n, n);
        const Matrix jac = k - kron((g * xm).transpose(), id) - kron(id, xm * g);
        const Vector step = detail::dense_solve(jac, -f);
        double t = 1.0;
        Vector trial = x + step;
        Vector ft = residual(trial);
        for (int h = 0; h < 30 && ft.norm() >= f.norm(); ++h) {
          t *= 0.5;
          trial = x + t * step;
          ft = residual(trial);
        }
        if (ft.norm() >= f.norm()) break;
        x = trial;
        f = ft;
      }
      return x;
    }
  }
  return {};
}

}  // namespace opinf
