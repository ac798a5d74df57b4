#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "evonet/core.hpp"
#include "evonet/graph.hpp"

namespace evonet {

enum class DanglingMode : std::uint8_t { literal, redistribute };

struct PrParams {
  double c = 0.85;
  double tol = 1e-10;
  std::size_t max_iter = 1000;
  DanglingMode dangling = DanglingMode::literal;
};

inline void validate(const PrParams& p) {
  if (!(p.c > 0.0 && p.c < 1.0)) throw Error(Errc::invalid_params, "damping factor must lie in (0,1)");
  if (!(p.tol > 0.0)) throw Error(Errc::invalid_params, "tolerance must be positive");
}

enum class ScoreKind : std::uint8_t { pagerank, mlm };
enum class ScoreScale : std::uint8_t { scale_free, probability };

struct ScoreVector {
  std::vector<double> values;
  ScoreKind kind = ScoreKind::pagerank;
  ScoreScale scale = ScoreScale::scale_free;
  std::size_t iterations = 0;
  bool converged = true;
};

/// Scale-free PageRank, R_i = n * PR_i, by the iteration
///   R_i <- sum_{j -> i} (c / D_j) R_j + (1 - c),   R^(0) = 1.
/// Parallel edges count with multiplicity. In redistribute mode every
/// dangling node (D_j = 0) spreads c R_j / n over all nodes, which keeps
/// sum R = n. A non-converged result is returned with converged = false.
inline ScoreVector pagerank(const DirectedGraph& g, const PrParams& p = {}) {
  validate(p);
  if (g.empty()) throw Error(Errc::empty_graph, "pagerank on an empty graph");
  const std::size_t n = g.node_count();
  const auto out_deg = g.out_degrees();
  ScoreVector sv;
  sv.kind = ScoreKind::pagerank;
  sv.values.assign(n, 1.0);
  std::vector<double> next(n);
  std::vector<double> share(n);
  sv.converged = false;
  for (std::size_t it = 1; it <= p.max_iter; ++it) {
    double dangling = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (out_deg[j] == 0) {
        dangling += sv.values[j];
        share[j] = 0.0;
      } else {
        share[j] = p.c * sv.values[j] / static_cast<double>(out_deg[j]);
      }
    }
    const double base =
        (1.0 - p.c) + (p.dangling == DanglingMode::redistribute ? p.c * dangling / static_cast<double>(n) : 0.0);
    std::fill(next.begin(), next.end(), base);
    for (const auto& e : g.edges()) next[e.dst] += share[e.src];
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(next[i] - sv.values[i]));
    sv.values.swap(next);
    sv.iterations = it;
    if (diff < p.tol) {
      sv.converged = true;
      break;
    }
  }
  return sv;
}

/// Max-Linear Model: the minimal fixed point of X_i = max(c * max_{j -> i} X_j, q_i),
/// iterated from X = q. For c < 1 the iteration terminates; the result equals
/// the maximum over directed paths j ~> i of c^{len} q_j.
inline ScoreVector max_linear(const DirectedGraph& g, const PrParams& p, std::span<const double> q) {
  validate(p);
  if (g.empty()) throw Error(Errc::empty_graph, "max_linear on an empty graph");
  if (q.size() != g.node_count()) throw Error(Errc::length_mismatch, "personalization length != node count");
  for (double qi : q)
    if (!(qi > 0.0)) throw Error(Errc::invalid_params, "personalization values must be positive");
  ScoreVector sv;
  sv.kind = ScoreKind::mlm;
  sv.values.assign(q.begin(), q.end());
  std::vector<double> next(q.size());
  sv.converged = false;
  // Jacobi sweeps; values only grow, and each sweep either changes nothing
  // or propagates along one more edge, so the loop is bounded.
  for (std::size_t it = 1;; ++it) {
    std::copy(q.begin(), q.end(), next.begin());
    for (const auto& e : g.edges()) next[e.dst] = std::max(next[e.dst], p.c * sv.values[e.src]);
    double diff = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) diff = std::max(diff, next[i] - sv.values[i]);
    sv.values.swap(next);
    sv.iterations = it;
    if (diff < p.tol || diff == 0.0) {
      sv.converged = true;
      break;
    }
  }
  return sv;
}

/// Uniform personalization q_i = 1 - c, the scale-free analogue of Q_i = 1/n.
inline ScoreVector max_linear(const DirectedGraph& g, const PrParams& p = {}) {
  std::vector<double> q(g.node_count(), 1.0 - p.c);
  return max_linear(g, p, q);
}

}  // namespace evonet
