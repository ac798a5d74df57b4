#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "evonet/core.hpp"

namespace evonet::evt {

struct DcorTest {
  double dcor = 0.0;
  double p_value = 1.0;
  std::size_t permutations = 0;
};

namespace detail {

/// Double-centered pairwise distance matrix, row-major n x n.
inline std::vector<double> centered_distances(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> a(n * n);
  std::vector<double> row(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = std::abs(x[i] - x[j]);
      a[i * n + j] = d;
      row[i] += d;
    }
  for (double r : row) total += r;
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] += total / (nd * nd) - row[i] / nd - row[j] / nd;
  return a;
}

inline double centered_product(const std::vector<double>& a, const std::vector<double>& b, std::size_t n,
                               const std::vector<std::size_t>* perm = nullptr) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pi = perm ? (*perm)[i] : i;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t pj = perm ? (*perm)[j] : j;
      s += a[i * n + j] * b[pi * n + pj];
    }
  }
  return s / (static_cast<double>(n) * static_cast<double>(n));
}

}  // namespace detail

/// Szekely-Rizzo sample distance correlation with a permutation test;
/// p is the share of permuted statistics at least as large as the observed.
inline DcorTest distance_correlation_test(std::span<const double> x, std::span<const double> y,
                                          std::size_t permutations = 199, std::uint64_t rng_seed = 1) {
  if (x.size() != y.size()) throw Error(Errc::length_mismatch, "paired samples differ in length");
  if (x.size() < 10) throw Error(Errc::invalid_params, "distance correlation needs n >= 10");
  const std::size_t n = x.size();
  const auto a = detail::centered_distances(x);
  const auto b = detail::centered_distances(y);
  const double vx = detail::centered_product(a, a, n);
  const double vy = detail::centered_product(b, b, n);
  DcorTest r;
  r.permutations = permutations;
  if (vx <= 0.0 || vy <= 0.0) return r;  // a constant sample carries no dependence
  // sqrt(v * v) == v exactly in IEEE arithmetic, so dcor(x, x) is exactly 1.
  const double norm = std::sqrt(vx * vy);
  const auto dcor_of = [&](double cov) { return std::sqrt(std::clamp(cov / norm, 0.0, 1.0)); };
  const double obs = detail::centered_product(a, b, n);
  r.dcor = dcor_of(obs);
  if (permutations == 0) return r;
  Rng rng(derive_seed(rng_seed, 8));
  std::vector<std::size_t> perm(n);
  std::size_t hits = 0;
  for (std::size_t b_i = 0; b_i < permutations; ++b_i) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    evonet::shuffle(perm.begin(), perm.end(), rng);
    if (detail::centered_product(a, b, n, &perm) >= obs) ++hits;
  }
  r.p_value = static_cast<double>(hits) / static_cast<double>(permutations);
  return r;
}

/// Angles of the k most extreme points of a bivariate positive sample.
struct AngularEdf {
  std::vector<double> angles;  // ascending, in [0, pi/2]
  double middle_mass = 0.0;    // share in [pi/6, pi/3]
  double outer_mass = 0.0;

  /// Empirical distribution function of the angles.
  double operator()(double phi) const {
    const auto it = std::upper_bound(angles.begin(), angles.end(), phi);
    return angles.empty() ? 0.0 : static_cast<double>(it - angles.begin()) / static_cast<double>(angles.size());
  }
};

/// Polar transform of (x, y); keeps the k largest radii. Mass near pi/4
/// indicates extremal dependence, mass near the axes asymptotic independence.
inline AngularEdf angular_edf(std::span<const double> x, std::span<const double> y, std::size_t k) {
  if (x.size() != y.size()) throw Error(Errc::length_mismatch, "paired samples differ in length");
  if (k > x.size()) throw Error(Errc::invalid_params, "k exceeds the sample size");
  std::vector<std::size_t> idx(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto radius = [&](std::size_t i) { return std::hypot(x[i], y[i]); };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return radius(i) > radius(j); });
  AngularEdf e;
  const double lo = std::numbers::pi / 6.0, hi = std::numbers::pi / 3.0;
  std::size_t mid = 0;
  for (std::size_t r = 0; r < k; ++r) {
    const double phi = std::atan2(y[idx[r]], x[idx[r]]);
    e.angles.push_back(phi);
    if (phi >= lo && phi <= hi) ++mid;
  }
  std::sort(e.angles.begin(), e.angles.end());
  if (k > 0) {
    e.middle_mass = static_cast<double>(mid) / static_cast<double>(k);
    e.outer_mass = 1.0 - e.middle_mass;
  }
  return e;
}

}  // namespace evonet::evt
