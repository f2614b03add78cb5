#pragma once

// Affine parameter dependence: signed integer monomials theta(mu) and matrix
// families sum_j theta_j(mu) M_j built from them.

#include "opinf/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace opinf {

/// coefficient * prod_j mu_j^{exponents_j}. Negative exponents are allowed.
struct ThetaMonomial {
  double coefficient = 1.0;
  std::vector<int> exponents;

  ThetaMonomial() = default;
  ThetaMonomial(double c, std::vector<int> e) : coefficient(c), exponents(std::move(e)) {}

  static ThetaMonomial constant(std::size_t dim) { return {1.0, std::vector<int>(dim, 0)}; }

  std::size_t dimension() const { return exponents.size(); }
  bool is_constant() const {
    return std::all_of(exponents.begin(), exponents.end(), [](int e) { return e == 0; });
  }
  bool has_negative_exponent() const {
    return std::any_of(exponents.begin(), exponents.end(), [](int e) { return e < 0; });
  }

  friend bool operator==(const ThetaMonomial&, const ThetaMonomial&) = default;
};

inline double evaluate_theta(const ThetaMonomial& theta, const Parameter& mu) {
  if (mu.size() != theta.exponents.size())
    throw ShapeError("theta monomial of dimension " + std::to_string(theta.exponents.size()) +
                     " evaluated at parameter of dimension " + std::to_string(mu.size()));
  double value = theta.coefficient;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const int e = theta.exponents[j];
    if (e == 0) continue;
    if (e < 0 && mu[j] == 0.0)
      throw DomainError("theta with negative exponent evaluated at zero parameter component " +
                        std::to_string(j + 1));
    double p = 1.0;
    const double base = e < 0 ? 1.0 / mu[j] : mu[j];
    for (int k = 0; k < std::abs(e); ++k) p *= base;
    value *= p;
  }
  return value;
}

inline ThetaMonomial operator*(const ThetaMonomial& a, const ThetaMonomial& b) {
  if (a.dimension() != b.dimension()) throw ShapeError("theta monomials of different dimension");
  ThetaMonomial out{a.coefficient * b.coefficient, a.exponents};
  for (std::size_t j = 0; j < out.exponents.size(); ++j) out.exponents[j] += b.exponents[j];
  return out;
}

/// Human-readable form, e.g. "mu^-2" or "mu1*mu2^-1".
inline std::string to_string(const ThetaMonomial& theta) {
  std::string out;
  const bool scalar = theta.dimension() == 1;
  for (std::size_t j = 0; j < theta.dimension(); ++j) {
    const int e = theta.exponents[j];
    if (e == 0) continue;
    if (!out.empty()) out += "*";
    out += scalar ? std::string("mu") : "mu" + std::to_string(j + 1);
    if (e != 1) out += "^" + std::to_string(e);
  }
  if (out.empty()) out = "1";
  if (theta.coefficient != 1.0) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g*", theta.coefficient);
    out = buf + out;
  }
  return out;
}

struct AffineTerm {
  ThetaMonomial theta;
  Matrix matrix;
};

/// Coefficients whose magnitude falls below this fraction of the largest
/// term are treated as exact cancellations.
inline constexpr double kMergeTolerance = 1e-14;

/// Canonical term list: coefficients folded into the matrices, one term per
/// exponent vector, lexicographic exponent order, cancelled terms removed.
inline std::vector<AffineTerm> canonicalize(const std::vector<AffineTerm>& terms) {
  std::map<std::vector<int>, Matrix> merged;
  for (const auto& t : terms) {
    auto [it, inserted] = merged.try_emplace(t.theta.exponents, t.theta.coefficient * t.matrix);
    if (!inserted) {
      if (it->second.rows() != t.matrix.rows() || it->second.cols() != t.matrix.cols())
        throw ShapeError("affine terms of different shape");
      it->second += t.theta.coefficient * t.matrix;
    }
  }
  double scale = 0.0;
  for (const auto& [e, m] : merged)
    if (m.size() > 0) scale = std::max(scale, m.cwiseAbs().maxCoeff());
  std::vector<AffineTerm> out;
  for (auto& [e, m] : merged) {
    const double mag = m.size() > 0 ? m.cwiseAbs().maxCoeff() : 0.0;
    if (mag == 0.0 || mag < kMergeTolerance * scale) continue;
    out.push_back({ThetaMonomial{1.0, e}, std::move(m)});
  }
  return out;
}

/// A p-by-q matrix-valued function of mu, sum_j theta_j(mu) M_j.
class AffineFamily {
 public:
  AffineFamily() = default;
  AffineFamily(Eigen::Index rows, Eigen::Index cols, std::size_t dim) : rows_(rows), cols_(cols), dim_(dim) {}
  AffineFamily(Eigen::Index rows, Eigen::Index cols, std::size_t dim, const std::vector<AffineTerm>& terms)
      : rows_(rows), cols_(cols), dim_(dim) {
    for (const auto& t : terms) check_term(t);
    terms_ = canonicalize(terms);
  }

  static AffineFamily constant(const Matrix& m, std::size_t dim) {
    return AffineFamily(m.rows(), m.cols(), dim, {{ThetaMonomial::constant(dim), m}});
  }

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  std::size_t parameter_dimension() const { return dim_; }
  const std::vector<AffineTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  std::vector<ThetaMonomial> monomials() const {
    std::vector<ThetaMonomial> out;
    out.reserve(terms_.size());
    for (const auto& t : terms_) out.push_back(t.theta);
    return out;
  }

  Matrix assemble(const Parameter& mu) const {
    if (mu.size() != dim_) throw ShapeError("parameter dimension mismatch in assemble");
    Matrix out = Matrix::Zero(rows_, cols_);
    for (const auto& t : terms_) out += evaluate_theta(t.theta, mu) * t.matrix;
    return out;
  }

  AffineFamily transposed() const {
    std::vector<AffineTerm> terms;
    terms.reserve(terms_.size());
    for (const auto& t : terms_) terms.push_back({t.theta, t.matrix.transpose()});
    return AffineFamily(cols_, rows_, dim_, terms);
  }

  AffineFamily scaled(double factor) const {
    std::vector<AffineTerm> terms = terms_;
    for (auto& t : terms) t.matrix *= factor;
    return AffineFamily(rows_, cols_, dim_, terms);
  }

  friend AffineFamily operator+(const AffineFamily& f, const AffineFamily& g) {
    if (f.rows_ != g.rows_ || f.cols_ != g.cols_ || f.dim_ != g.dim_)
      throw ShapeError("sum of affine families of different shape");
    std::vector<AffineTerm> terms = f.terms_;
    terms.insert(terms.end(), g.terms_.begin(), g.terms_.end());
    return AffineFamily(f.rows_, f.cols_, f.dim_, terms);
  }

 private:
  void check_term(const AffineTerm& t) const {
    if (t.matrix.rows() != rows_ || t.matrix.cols() != cols_)
      throw ShapeError("affine term matrix is " + std::to_string(t.matrix.rows()) + "x" +
                       std::to_string(t.matrix.cols()) + ", family declares " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
    if (t.theta.dimension() != dim_) throw ShapeError("affine term theta has wrong parameter dimension");
  }

  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::size_t dim_ = 0;
  std::vector<AffineTerm> terms_;
};

inline Matrix assemble(const AffineFamily& family, const Parameter& mu) { return family.assemble(mu); }

inline AffineFamily transpose_family(const AffineFamily& family) { return family.transposed(); }

/// Product F(mu) G(mu) as an affine family over all pairwise monomial products.
inline AffineFamily affine_product(const AffineFamily& f, const AffineFamily& g) {
  if (f.cols() != g.rows())
    throw ShapeError("affine_product inner dimensions " + std::to_string(f.cols()) + " and " +
                     std::to_string(g.rows()) + " differ");
  if (f.parameter_dimension() != g.parameter_dimension())
    throw ShapeError("affine_product of families over different parameter dimensions");
  std::vector<AffineTerm> terms;
  terms.reserve(f.terms().size() * g.terms().size());
  for (const auto& a : f.terms())
    for (const auto& b : g.terms()) terms.push_back({a.theta * b.theta, a.matrix * b.matrix});
  return AffineFamily(f.rows(), g.cols(), f.parameter_dimension(), terms);
}

/// Sorted union of monomial lists, keyed on exponent vectors.
inline std::vector<ThetaMonomial> monomial_union(const std::vector<ThetaMonomial>& a,
                                                 const std::vector<ThetaMonomial>& b) {
  std::map<std::vector<int>, ThetaMonomial> seen;
  for (const auto& m : a) seen.try_emplace(m.exponents, ThetaMonomial{1.0, m.exponents});
  for (const auto& m : b) seen.try_emplace(m.exponents, ThetaMonomial{1.0, m.exponents});
  std::vector<ThetaMonomial> out;
  for (auto& [e, m] : seen) out.push_back(m);
  return out;
}

}  // namespace opinf
