#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "evonet/core.hpp"
#include "evonet/graph.hpp"

namespace evonet {

/// Target bi-degree law for one Thorny Branching Tree.
struct BiDegreeSpec {
  std::size_t n = 800;
  double iota_in = 2.5;
  double iota_out = 2.5;
  std::uint64_t rng_seed = 1;
};

struct SeedSpec {
  std::vector<BiDegreeSpec> components;
  std::size_t cross_edges = 0;
  /// Stream for the cross edges; each component uses its own rng_seed.
  std::uint64_t rng_seed = 1;
};

struct BiDegreeSequence {
  std::vector<std::uint64_t> in;
  std::vector<std::uint64_t> out;
};

inline void validate(const BiDegreeSpec& spec) {
  if (spec.n < 2) throw Error(Errc::degenerate_spec, "bi-degree spec needs n >= 2");
  if (!(spec.iota_in > 1.0) || !(spec.iota_out > 1.0))
    throw Error(Errc::degenerate_spec, "tail indices must exceed 1 for finite-mean degrees");
}

/// Discretized Pareto D = ceil(U^{-1/iota}), so P(D > k) = k^{-iota} exactly
/// at integer k >= 1. D = 1 only when U = 1, so degrees start at 2 in practice.
/// The floor variant has the same law shifted down by one and a much larger
/// downward Hill bias at desk-scale n.
inline std::uint64_t discrete_pareto(Rng& rng, double iota) {
  const double x = std::ceil(std::pow(uniform_open0(rng), -1.0 / iota));
  constexpr double cap = 1e15;
  return static_cast<std::uint64_t>(std::min(x, cap));
}

/// Independent power-law in/out degree sequences with equal sums. The side
/// with the smaller sum is incremented at uniformly chosen positions until
/// the sums agree.
inline BiDegreeSequence sample_bidegree(const BiDegreeSpec& spec) {
  validate(spec);
  Rng rng(derive_seed(spec.rng_seed, 0));
  BiDegreeSequence seq;
  seq.in.resize(spec.n);
  seq.out.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    seq.in[i] = discrete_pareto(rng, spec.iota_in);
    seq.out[i] = discrete_pareto(rng, spec.iota_out);
  }
  auto sum_in = std::accumulate(seq.in.begin(), seq.in.end(), std::uint64_t{0});
  auto sum_out = std::accumulate(seq.out.begin(), seq.out.end(), std::uint64_t{0});
  auto& deficit = sum_in < sum_out ? seq.in : seq.out;
  for (auto gap = sum_in < sum_out ? sum_out - sum_in : sum_in - sum_out; gap > 0; --gap)
    ++deficit[uniform_index(rng, spec.n)];
  return seq;
}

/// Thorny Branching Tree on a bi-degree sequence.
///
/// Node 0 is the root. Nodes are attached breadth-first: a popped node takes
/// up to in[v] children (in node-index order), each child pointing an edge to
/// its parent. Leftover in-stubs and out-stubs (out[v] - 1 for non-roots,
/// out[0] for the root) are paired uniformly at random; a pairing that would
/// create a self-loop is resampled. `retry_budget` = 0 means 100 * stubs.
inline DirectedGraph build_tbt(const BiDegreeSequence& seq, std::uint64_t rng_seed,
                               std::size_t retry_budget = 0) {
  const std::size_t n = seq.in.size();
  if (n != seq.out.size()) throw Error(Errc::degenerate_spec, "in/out sequences differ in length");
  if (n < 2) throw Error(Errc::degenerate_spec, "TBT needs at least 2 nodes");
  for (std::size_t v = 0; v < n; ++v)
    if (seq.in[v] == 0 || seq.out[v] == 0)
      throw Error(Errc::degenerate_spec, "TBT degrees must be >= 1 (node " + std::to_string(v) + ")");
  if (std::accumulate(seq.in.begin(), seq.in.end(), std::uint64_t{0}) !=
      std::accumulate(seq.out.begin(), seq.out.end(), std::uint64_t{0}))
    throw Error(Errc::degenerate_spec, "in/out degree sums differ");

  Rng rng(rng_seed);
  DirectedGraph g;
  g.add_nodes(n);

  std::vector<std::uint64_t> free_in(seq.in);
  std::vector<std::uint64_t> free_out(seq.out);
  NodeId next = 1;
  for (NodeId head = 0; head < n && next < n; ++head) {
    // BFS order coincides with index order because children are numbered
    // consecutively as they are created.
    for (std::uint64_t c = 0; c < seq.in[head] && next < n; ++c, ++next) {
      g.add_edge(next, head);
      --free_in[head];
      --free_out[next];
    }
  }

  std::vector<NodeId> outs, ins;
  for (NodeId v = 0; v < n; ++v) {
    outs.insert(outs.end(), free_out[v], v);
    ins.insert(ins.end(), free_in[v], v);
  }
  evonet::shuffle(ins.begin(), ins.end(), rng);
  const std::size_t stubs = outs.size();
  std::size_t budget = retry_budget ? retry_budget : 100 * std::max<std::size_t>(stubs, 1);

  for (std::size_t i = 0; i < stubs; ++i) {
    while (ins[i] == outs[i]) {
      if (budget-- == 0) throw Error(Errc::stub_match_failure, "self-loop resampling exhausted the retry budget");
      // Swap with any other in-stub (already matched or not) that keeps
      // both pairs loop-free.
      const auto j = uniform_index(rng, stubs);
      if (ins[j] != outs[i] && outs[j] != ins[i]) std::swap(ins[i], ins[j]);
    }
  }
  for (std::size_t i = 0; i < stubs; ++i) g.add_edge(outs[i], ins[i]);
  return g;
}

/// One seed component: sample the bi-degree sequence and grow its TBT.
inline DirectedGraph build_component(const BiDegreeSpec& spec) {
  return build_tbt(sample_bidegree(spec), derive_seed(spec.rng_seed, 1));
}

struct LabeledGraph {
  DirectedGraph graph;
  std::vector<std::uint32_t> component;
};

/// Disjoint TBT components followed by `cross_edges` directed edges between
/// uniformly chosen nodes of distinct components (source uniform over all
/// nodes, target uniform over nodes outside the source's component).
inline LabeledGraph build_seed(const SeedSpec& spec) {
  if (spec.components.empty()) throw Error(Errc::degenerate_spec, "seed spec has no components");
  LabeledGraph out;
  std::vector<NodeId> offset;
  for (std::uint32_t c = 0; c < spec.components.size(); ++c) {
    const auto part = build_component(spec.components[c]);
    const NodeId base = out.graph.add_nodes(part.node_count());
    offset.push_back(base);
    out.component.insert(out.component.end(), part.node_count(), c);
    for (const auto& e : part.edges()) out.graph.add_edge(base + e.src, base + e.dst);
  }
  offset.push_back(static_cast<NodeId>(out.graph.node_count()));
  if (spec.cross_edges > 0 && spec.components.size() < 2)
    throw Error(Errc::degenerate_spec, "cross edges need at least two components");

  Rng rng(derive_seed(spec.rng_seed, 2));
  const std::size_t n = out.graph.node_count();
  for (std::size_t e = 0; e < spec.cross_edges; ++e) {
    const auto src = static_cast<NodeId>(uniform_index(rng, n));
    const auto c = out.component[src];
    const std::size_t own = offset[c + 1] - offset[c];
    auto pick = static_cast<NodeId>(uniform_index(rng, n - own));
    if (pick >= offset[c]) pick += static_cast<NodeId>(own);
    out.graph.add_edge(src, pick);
  }
  return out;
}

}  // namespace evonet
