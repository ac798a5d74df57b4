#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evonet/core.hpp"
#include "evonet/evt/extremal.hpp"
#include "evonet/graph.hpp"

namespace evonet::evt {

struct GraphGapOptions {
  std::size_t max_len = 10;
  // Adjacent exceedance nodes give gaps of length 1. They are dropped by
  // default; keeping them makes a chain graph reproduce sequence gaps.
  bool include_single_edges = false;
};

namespace detail {

struct PathWalk {
  const Adjacency& adj;
  const std::vector<char>& exceeds;
  const GraphGapOptions& opt;
  std::vector<char> on_path;
  InterExceedanceTimes* out;
  NodeId source = 0;

  // Extends a path that currently ends at non-exceedance node v after `len` edges.
  void extend(NodeId v, std::size_t len) {
    for (NodeId w : adj[v]) {
      if (on_path[w]) continue;
      if (exceeds[w]) {
        if (w > source) out->times.push_back(len + 1);
        continue;
      }
      if (len + 1 >= opt.max_len) {
        // Any exceedance reached through w would exceed the length cap.
        ++out->truncated_paths;
        continue;
      }
      on_path[w] = 1;
      extend(w, len + 1);
      on_path[w] = 0;
    }
  }
};

}  // namespace detail

/// Inter-exceedance times on a graph: the edge length of every simple path
/// in the undirected simple view that joins two exceedance nodes (score > u)
/// through non-exceedance nodes only. Each unordered pair is counted once per
/// path. Paths longer than max_len are not followed; truncated_paths counts
/// the branches cut off.
inline InterExceedanceTimes graph_inter_exceedances(const DirectedGraph& g, std::span<const double> scores, double u,
                                                    const GraphGapOptions& opt = {}) {
  if (scores.size() != g.node_count()) throw Error(Errc::length_mismatch, "score vector length != node count");
  if (opt.max_len < 1) throw Error(Errc::invalid_params, "max_len must be >= 1");
  const std::size_t n = g.node_count();
  std::vector<char> exceeds(n, 0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (scores[i] > u) {
      exceeds[i] = 1;
      ++count;
    }
  if (count == 0) throw Error(Errc::no_exceedances, "no node scores exceed the threshold");
  if (count == 1) throw Error(Errc::single_exceedance, "only one node score exceeds the threshold");

  const auto adj = undirected_simple(g);
  InterExceedanceTimes t;
  t.threshold = u;
  t.exceedances = count;
  t.exceedance_rate = static_cast<double>(count) / static_cast<double>(n);
  detail::PathWalk walk{adj, exceeds, opt, std::vector<char>(n, 0), &t};
  for (NodeId s = 0; s < n; ++s) {
    if (!exceeds[s]) continue;
    walk.source = s;
    walk.on_path[s] = 1;
    for (NodeId w : adj[s]) {
      if (exceeds[w]) {
        if (w > s && opt.include_single_edges) t.times.push_back(1);
        continue;
      }
      if (opt.max_len < 2) {
        ++t.truncated_paths;
        continue;
      }
      walk.on_path[w] = 1;
      walk.extend(w, 1);
      walk.on_path[w] = 0;
    }
    walk.on_path[s] = 0;
  }
  if (t.times.empty()) throw Error(Errc::empty_gap_set, "no qualifying exceedance-to-exceedance paths");
  return t;
}

/// Intervals estimator on graph inter-exceedance times.
inline ExtremalEstimate modified_intervals(const DirectedGraph& g, std::span<const double> scores, double u,
                                           const GraphGapOptions& opt = {}, bool exclude_ones = false) {
  const auto t = graph_inter_exceedances(g, scores, u, opt);
  ExtremalEstimate e;
  e.estimator = ThetaEstimator::modified_intervals;
  e.threshold = u;
  e.theta_hat = intervals_estimator(t, exclude_ones);
  return e;
}

}  // namespace evonet::evt
