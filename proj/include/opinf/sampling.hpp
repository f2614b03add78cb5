#pragma once

// Parameter sampling: log-spaced 1-D sets, tensor grids, seeded uniform
// random test sets and nested training sets.

#include "opinf/problems.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace opinf {

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  if (count > 1) out.back() = hi;
  return out;
}

/// count points geometrically spaced in [lo, hi] (both ends included); needs lo, hi > 0.
inline std::vector<double> logspace(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0 && hi > 0.0)) throw DomainError("log spacing needs a positive interval");
  std::vector<double> out = linspace(std::log(lo), std::log(hi), count);
  for (auto& v : out) v = std::exp(v);
  if (count > 0) out.front() = lo;
  if (count > 1) out.back() = hi;
  return out;
}

inline std::vector<Parameter> log_spaced(const Interval& domain, std::size_t count) {
  std::vector<Parameter> out;
  for (double v : logspace(domain.lower, domain.upper, count)) out.push_back({v});
  return out;
}

/// Tensor grid with per_axis points per component, first component fastest.
inline std::vector<Parameter> tensor_grid(const std::vector<Interval>& domain, std::size_t per_axis) {
  std::vector<std::vector<double>> axes;
  for (const auto& iv : domain) axes.push_back(linspace(iv.lower, iv.upper, per_axis));
  std::vector<Parameter> out;
  std::size_t total = 1;
  for (std::size_t a = 0; a < axes.size(); ++a) total *= per_axis;
  for (std::size_t idx = 0; idx < total; ++idx) {
    Parameter mu(domain.size());
    std::size_t rest = idx;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      mu[a] = axes[a][rest % per_axis];
      rest /= per_axis;
    }
    out.push_back(mu);
  }
  return out;
}

/// Uniform draws from the box; a 53-bit mantissa is taken from each mt19937_64
/// output so the sequence is identical across standard libraries.
inline std::vector<Parameter> seeded_uniform(const std::vector<Interval>& domain, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Parameter> out;
  for (std::size_t i = 0; i < count; ++i) {
    Parameter mu(domain.size());
    for (std::size_t j = 0; j < domain.size(); ++j) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      mu[j] = domain[j].lower + u * (domain[j].upper - domain[j].lower);
    }
    out.push_back(mu);
  }
  return out;
}

/// Default training set: log-spaced on 1-D domains, otherwise a tensor grid
/// with floor(count^(1/d)) points per axis.
inline std::vector<Parameter> default_training_set(const ProblemDefinition& p, std::size_t count) {
  if (p.d == 1 && p.domain[0].lower > 0.0) return log_spaced(p.domain[0], count);
  if (p.d == 1) {
    std::vector<Parameter> out;
    for (double v : linspace(p.domain[0].lower, p.domain[0].upper, count)) out.push_back({v});
    return out;
  }
  auto per_axis = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(count), 1.0 / static_cast<double>(p.d)) + 1e-9));
  return tensor_grid(p.domain, std::max<std::size_t>(per_axis, 1));
}

/// Nested training sets: a seeded random permutation of the pool, cut at each
/// size, so every set contains all smaller ones.
inline std::vector<std::vector<Parameter>> nested_sets(const std::vector<Parameter>& pool,
                                                       const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] > pool.size()) throw DomainError("nested set size exceeds the candidate pool");
    if (i > 0 && sizes[i] < sizes[i - 1]) throw DomainError("sweep sizes must be ascending");
  }
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  std::vector<std::vector<Parameter>> out;
  for (std::size_t s : sizes) {
    std::vector<Parameter> set;
    for (std::size_t i = 0; i < s; ++i) set.push_back(pool[order[i]]);
    out.push_back(set);
  }
  return out;
}

}  // namespace opinf
