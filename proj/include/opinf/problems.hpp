#pragma once

// The four parametric matrix-equation classes and their vectorized
// polynomial form  x = C2(mu) x^2 + C1(mu) x + C0(mu),  C1 = Cbar1 + I.

#include "opinf/affine.hpp"
#include "opinf/vectorize.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace opinf {

enum class ProblemKind { ContinuousLyapunov, DiscreteLyapunov, CoupledLyapunov, ContinuousRiccati };

inline std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::ContinuousLyapunov: return "continuous-lyapunov";
    case ProblemKind::DiscreteLyapunov: return "discrete-lyapunov";
    case ProblemKind::CoupledLyapunov: return "coupled-lyapunov";
    case ProblemKind::ContinuousRiccati: return "continuous-riccati";
  }
  return "unknown";
}

inline ProblemKind parse_kind(const std::string& name) {
  for (auto k : {ProblemKind::ContinuousLyapunov, ProblemKind::DiscreteLyapunov, ProblemKind::CoupledLyapunov,
                 ProblemKind::ContinuousRiccati})
    if (to_string(k) == name) return k;
  throw FormatError("unknown problem kind '" + name + "'");
}

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double v) const { return lower <= v && v <= upper; }
};

/// One equation class together with its affine data.
///
/// Continuous:  A'X + XA + Q = 0
/// Discrete:    A'XA - X + Q = 0
/// Coupled:     A_i'X_i + X_iA_i + sum_j pi_ij X_j + Q_i = 0,  i = 1..s
/// Riccati:     A'X + XA - XGX + Q = 0,  G = BB'
/// with Q_i = M_i'M_i throughout.
struct ProblemDefinition {
  ProblemKind kind = ProblemKind::ContinuousLyapunov;
  Eigen::Index n = 0;
  std::size_t s = 1;
  std::size_t d = 1;
  std::vector<AffineFamily> A;
  std::vector<AffineFamily> M;
  std::optional<AffineFamily> B;
  std::optional<Matrix> coupling;
  std::vector<Interval> domain;
  std::string name;

  Eigen::Index state_dimension() const { return static_cast<Eigen::Index>(s) * n * n; }

  AffineFamily Q(std::size_t block) const { return affine_product(M.at(block).transposed(), M.at(block)); }
  AffineFamily G() const {
    if (!B) throw FormatError("problem has no B family");
    return affine_product(*B, B->transposed());
  }

  bool contains(const Parameter& mu) const {
    if (mu.size() != domain.size()) return false;
    for (std::size_t j = 0; j < mu.size(); ++j)
      if (!domain[j].contains(mu[j])) return false;
    return true;
  }
};

/// theta functions of the affine decompositions of C2, C1 and C0.
struct ThetaGroups {
  std::vector<ThetaMonomial> theta_C2;
  std::vector<ThetaMonomial> theta_C1;
  std::vector<ThetaMonomial> theta_C0;

  static Vector evaluate(const std::vector<ThetaMonomial>& group, const Parameter& mu) {
    Vector out(static_cast<Eigen::Index>(group.size()));
    for (std::size_t j = 0; j < group.size(); ++j) out[static_cast<Eigen::Index>(j)] = evaluate_theta(group[j], mu);
    return out;
  }
};

/// block dst += scale * left * X_src * right  (a missing factor is the identity).
struct LinearAction {
  std::size_t dst = 0;
  std::size_t src = 0;
  std::optional<Matrix> left;
  std::optional<Matrix> right;
  double scale = 1.0;
};

/// block += scale * X G X.
struct QuadraticAction {
  std::size_t block = 0;
  Matrix weight;
  double scale = -1.0;
};

/// Matrix-free constant blocks C2_j, C1_j, C0_j of the vectorized equation,
/// indexed in the same order as the theta groups.
struct PolynomialForm {
  Eigen::Index n = 0;
  std::size_t s = 1;
  ThetaGroups groups;
  std::vector<std::vector<QuadraticAction>> quadratic;
  std::vector<std::vector<LinearAction>> linear;
  std::vector<std::vector<Matrix>> constant;

  Eigen::Index state_dimension() const { return static_cast<Eigen::Index>(s) * n * n; }
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw FormatError(what);
}

}  // namespace detail

/// Throws FormatError when kind-specific fields or shapes are inconsistent.
inline void check_structure(const ProblemDefinition& p) {
  using detail::require;
  require(p.n >= 1, "problem order n must be positive");
  require(p.d >= 1, "parameter dimension d must be positive");
  require(p.domain.size() == p.d, "domain must have one interval per parameter component");
  if (p.kind == ProblemKind::CoupledLyapunov) {
    require(p.s >= 1, "coupled problem needs s >= 1");
    require(p.coupling.has_value(), "coupled-lyapunov requires a coupling matrix Pi");
    require(p.coupling->rows() == static_cast<Eigen::Index>(p.s) && p.coupling->cols() == static_cast<Eigen::Index>(p.s),
            "coupling matrix must be s x s");
  } else {
    require(p.s == 1, to_string(p.kind) + " requires s = 1");
    require(!p.coupling.has_value(), "coupling matrix only allowed for coupled-lyapunov");
  }
  if (p.kind == ProblemKind::ContinuousRiccati) {
    require(p.B.has_value(), "continuous-riccati requires a B family");
    require(p.B->rows() == p.n, "B family must have n rows");
    require(p.B->parameter_dimension() == p.d, "B family parameter dimension mismatch");
  } else {
    require(!p.B.has_value(), "B family only allowed for continuous-riccati");
  }
  require(p.A.size() == p.s, "need one A family per block");
  require(p.M.size() == p.s, "need one M family per block");
  for (std::size_t i = 0; i < p.s; ++i) {
    require(p.A[i].rows() == p.n && p.A[i].cols() == p.n, "A family must be n x n");
    require(p.M[i].cols() == p.n, "M family must have n columns");
    require(p.A[i].parameter_dimension() == p.d && p.M[i].parameter_dimension() == p.d,
            "family parameter dimension mismatch");
  }
}

inline PolynomialForm polynomial_form(const ProblemDefinition& p) {
  check_structure(p);
  PolynomialForm form;
  form.n = p.n;
  form.s = p.s;
  const std::vector<int> zero(p.d, 0);

  // Linear part, keyed on exponent vectors so blocks with the same theta merge.
  std::map<std::vector<int>, std::vector<LinearAction>> linear;
  linear[zero];  // identity shift C1 = Cbar1 + I
  auto add = [&](const std::vector<int>& e, LinearAction a) { linear[e].push_back(std::move(a)); };
  switch (p.kind) {
    case ProblemKind::ContinuousLyapunov:
    case ProblemKind::ContinuousRiccati:
    case ProblemKind::CoupledLyapunov:
      for (std::size_t i = 0; i < p.s; ++i)
        for (const auto& t : p.A[i].terms()) {
          add(t.theta.exponents, {i, i, Matrix(t.matrix.transpose()), std::nullopt, 1.0});
          add(t.theta.exponents, {i, i, std::nullopt, t.matrix, 1.0});
        }
      if (p.kind == ProblemKind::CoupledLyapunov)
        for (std::size_t i = 0; i < p.s; ++i)
          for (std::size_t j = 0; j < p.s; ++j) {
            const double pij = (*p.coupling)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (pij != 0.0) add(zero, {i, j, std::nullopt, std::nullopt, pij});
          }
      for (std::size_t i = 0; i < p.s; ++i) add(zero, {i, i, std::nullopt, std::nullopt, 1.0});
      break;
    case ProblemKind::DiscreteLyapunov:
      // A'XA - X + X: the -X of the equation cancels the identity shift.
      for (const auto& a : p.A[0].terms())
        for (const auto& b : p.A[0].terms())
          add((a.theta * b.theta).exponents, {0, 0, Matrix(a.matrix.transpose()), b.matrix, 1.0});
      break;
  }
  for (auto& [e, actions] : linear) {
    form.groups.theta_C1.push_back({1.0, e});
    form.linear.push_back(std::move(actions));
  }

  // Constant part: vec(Q_i) stacked over blocks.
  std::map<std::vector<int>, std::vector<Matrix>> constant;
  for (std::size_t i = 0; i < p.s; ++i) {
    const AffineFamily q = p.Q(i);
    for (const auto& t : q.terms()) {
      auto& blocks = constant[t.theta.exponents];
      if (blocks.empty()) blocks.assign(p.s, Matrix::Zero(p.n, p.n));
      blocks[i] += t.matrix;
    }
  }
  for (auto& [e, blocks] : constant) {
    form.groups.theta_C0.push_back({1.0, e});
    form.constant.push_back(std::move(blocks));
  }

  if (p.kind == ProblemKind::ContinuousRiccati) {
    const AffineFamily g = p.G();
    for (const auto& t : g.terms()) {
      form.groups.theta_C2.push_back(t.theta);
      form.quadratic.push_back({QuadraticAction{0, t.matrix, -1.0}});
    }
  }
  return form;
}

inline ThetaGroups derive_theta_groups(const ProblemDefinition& p) { return polynomial_form(p).groups; }

namespace detail {

inline Matrix block_of(const Vector& x, std::size_t block, Eigen::Index n) {
  return Eigen::Map<const Matrix>(x.data() + static_cast<Eigen::Index>(block) * n * n, n, n);
}

inline void apply_action(const LinearAction& a, const Vector& x, Vector& y, Eigen::Index n) {
  Matrix xs = block_of(x, a.src, n);
  if (a.left) xs = *a.left * xs;
  if (a.right) xs = xs * *a.right;
  y.segment(static_cast<Eigen::Index>(a.dst) * n * n, n * n) += a.scale * vec(xs);
}

}  // namespace detail

/// C1_j x for the j-th theta of the C1 group.
inline Vector apply_linear_block(const PolynomialForm& form, std::size_t j, const Vector& x) {
  if (x.size() != form.state_dimension()) throw ShapeError("state vector has wrong length");
  Vector y = Vector::Zero(x.size());
  for (const auto& a : form.linear.at(j)) detail::apply_action(a, x, y, form.n);
  return y;
}

/// C2_j x^2, evaluated through the matrix form  vec(scale * X G X)  of each block.
inline Vector apply_quadratic_block(const PolynomialForm& form, std::size_t j, const Vector& x) {
  if (x.size() != form.state_dimension()) throw ShapeError("state vector has wrong length");
  Vector y = Vector::Zero(x.size());
  const Eigen::Index n = form.n;
  for (const auto& q : form.quadratic.at(j)) {
    const Matrix xb = detail::block_of(x, q.block, n);
    y.segment(static_cast<Eigen::Index>(q.block) * n * n, n * n) += q.scale * vec(xb * q.weight * xb);
  }
  return y;
}

inline Vector constant_block(const PolynomialForm& form, std::size_t j) {
  const Eigen::Index n = form.n;
  Vector y(form.state_dimension());
  const auto& blocks = form.constant.at(j);
  for (std::size_t i = 0; i < form.s; ++i) y.segment(static_cast<Eigen::Index>(i) * n * n, n * n) = vec(blocks[i]);
  return y;
}

/// C2(mu) x^2 + Cbar1(mu) x + C0(mu), zero at the true solution.
inline Vector polynomial_residual(const PolynomialForm& form, const Parameter& mu, const Vector& x) {
  Vector r = -x;
  for (std::size_t j = 0; j < form.groups.theta_C1.size(); ++j)
    r += evaluate_theta(form.groups.theta_C1[j], mu) * apply_linear_block(form, j, x);
  for (std::size_t j = 0; j < form.groups.theta_C2.size(); ++j)
    r += evaluate_theta(form.groups.theta_C2[j], mu) * apply_quadratic_block(form, j, x);
  for (std::size_t j = 0; j < form.groups.theta_C0.size(); ++j)
    r += evaluate_theta(form.groups.theta_C0[j], mu) * constant_block(form, j);
  return r;
}

/// Dense C1_j (N x N); built column by column from apply_linear_block. Tests only.
inline Matrix dense_linear_block(const PolynomialForm& form, std::size_t j) {
  const Eigen::Index N = form.state_dimension();
  Matrix out(N, N);
  for (Eigen::Index k = 0; k < N; ++k) out.col(k) = apply_linear_block(form, j, Vector::Unit(N, k));
  return out;
}

/// Well-posedness spot checks. Returns human-readable findings; never throws.
inline std::vector<std::string> validate(const ProblemDefinition& p, int samples = 10) {
  std::vector<std::string> findings;
  try {
    check_structure(p);
  } catch (const FormatError& e) {
    findings.emplace_back(e.what());
    return findings;
  }
  for (std::size_t j = 0; j < p.d; ++j)
    if (p.domain[j].lower > p.domain[j].upper)
      findings.push_back("empty domain interval in component " + std::to_string(j + 1));

  std::vector<const AffineFamily*> families;
  for (const auto& f : p.A) families.push_back(&f);
  for (const auto& f : p.M) families.push_back(&f);
  if (p.B) families.push_back(&*p.B);
  for (std::size_t j = 0; j < p.d; ++j) {
    bool negative = false;
    for (const auto* f : families)
      for (const auto& t : f->terms()) negative = negative || t.theta.exponents[j] < 0;
    if (negative && p.domain[j].contains(0.0))
      findings.push_back("domain contains 0 in component " + std::to_string(j + 1) +
                         " but a theta has a negative exponent there");
  }
  if (!findings.empty()) return findings;

  if (p.kind == ProblemKind::ContinuousRiccati) {
    for (int k = 0; k < samples; ++k) {
      Parameter mu(p.d);
      const double t = samples > 1 ? static_cast<double>(k) / (samples - 1) : 0.5;
      for (std::size_t j = 0; j < p.d; ++j) mu[j] = p.domain[j].lower + t * (p.domain[j].upper - p.domain[j].lower);
      const Eigen::VectorXcd ev = p.A[0].assemble(mu).eigenvalues();
      const double max_real = ev.real().maxCoeff();
      if (!(max_real < 0.0))
        findings.push_back("unstable A at mu=" + format_parameter(mu) + " (max real eigenvalue part " +
                           std::to_string(max_real) + ")");
    }
  }
  return findings;
}

}  // namespace opinf
