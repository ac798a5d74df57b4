#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "evonet/core.hpp"

namespace evonet {

using NodeId = std::uint32_t;

enum class Origin : std::uint8_t { seed, attached };

struct NodeInfo {
  std::int64_t step = 0;
  Origin origin = Origin::seed;
};

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed multigraph with dense, appearance-ordered node ids.
///
/// Parallel edges are kept (the beta attachment scheme may repeat a pair);
/// self-loops are rejected. Edges are stored in insertion order, which is
/// also the serialization order.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  NodeId add_node(std::int64_t step = 0, Origin origin = Origin::seed) {
    const auto id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back({step, origin});
    in_degree_.push_back(0);
    out_degree_.push_back(0);
    return id;
  }

  /// Appends `count` seed nodes and returns the id of the first one.
  NodeId add_nodes(std::size_t count, std::int64_t step = 0, Origin origin = Origin::seed) {
    const auto first = static_cast<NodeId>(nodes_.size());
    for (std::size_t i = 0; i < count; ++i) add_node(step, origin);
    return first;
  }

  void add_edge(NodeId src, NodeId dst) {
    if (src >= nodes_.size() || dst >= nodes_.size())
      throw Error(Errc::unknown_node, "edge (" + std::to_string(src) + "," + std::to_string(dst) +
                                          ") on graph with " + std::to_string(nodes_.size()) + " nodes");
    if (src == dst) throw Error(Errc::self_loop, "node " + std::to_string(src));
    edges_.push_back({src, dst});
    ++out_degree_[src];
    ++in_degree_[dst];
  }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }

  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const NodeInfo> nodes() const noexcept { return nodes_; }
  const NodeInfo& node(NodeId v) const { return nodes_.at(v); }

  std::uint64_t in_degree(NodeId v) const { return in_degree_.at(v); }
  std::uint64_t out_degree(NodeId v) const { return out_degree_.at(v); }
  std::span<const std::uint64_t> in_degrees() const noexcept { return in_degree_; }
  std::span<const std::uint64_t> out_degrees() const noexcept { return out_degree_; }

  /// Number of copies of the directed edge src -> dst. Linear in edge count.
  std::size_t multiplicity(NodeId src, NodeId dst) const {
    return static_cast<std::size_t>(
        std::count(edges_.begin(), edges_.end(), Edge{src, dst}));
  }

 private:
  std::vector<NodeInfo> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::uint64_t> in_degree_;
  std::vector<std::uint64_t> out_degree_;
};

/// Compressed adjacency (CSR) built from a graph snapshot.
struct Adjacency {
  std::vector<std::size_t> offsets;
  std::vector<NodeId> targets;

  std::span<const NodeId> operator[](NodeId v) const {
    return {targets.data() + offsets[v], offsets[v + 1] - offsets[v]};
  }
  std::size_t size() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
};

namespace detail {

template <class KeyFn, class ValFn>
Adjacency build_csr(std::size_t n, std::span<const Edge> edges, bool both, KeyFn key, ValFn val) {
  Adjacency adj;
  adj.offsets.assign(n + 1, 0);
  for (const auto& e : edges) {
    ++adj.offsets[key(e) + 1];
    if (both) ++adj.offsets[val(e) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) adj.offsets[i + 1] += adj.offsets[i];
  adj.targets.resize(adj.offsets[n]);
  std::vector<std::size_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
  for (const auto& e : edges) {
    adj.targets[cursor[key(e)]++] = val(e);
    if (both) adj.targets[cursor[val(e)]++] = key(e);
  }
  return adj;
}

}  // namespace detail

/// in_links[v] lists the sources of edges into v, with multiplicity.
inline Adjacency in_links(const DirectedGraph& g) {
  return detail::build_csr(
      g.node_count(), g.edges(), false, [](const Edge& e) { return e.dst; },
      [](const Edge& e) { return e.src; });
}

inline Adjacency out_links(const DirectedGraph& g) {
  return detail::build_csr(
      g.node_count(), g.edges(), false, [](const Edge& e) { return e.src; },
      [](const Edge& e) { return e.dst; });
}

/// Simple undirected view: directions dropped, parallel and antiparallel
/// edges collapsed, neighbor lists sorted.
inline Adjacency undirected_simple(const DirectedGraph& g) {
  auto adj = detail::build_csr(
      g.node_count(), g.edges(), true, [](const Edge& e) { return e.src; },
      [](const Edge& e) { return e.dst; });
  Adjacency out;
  out.offsets.assign(adj.size() + 1, 0);
  out.targets.reserve(adj.targets.size());
  for (NodeId v = 0; v < adj.size(); ++v) {
    std::vector<NodeId> nb(adj[v].begin(), adj[v].end());
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    out.targets.insert(out.targets.end(), nb.begin(), nb.end());
    out.offsets[v + 1] = out.targets.size();
  }
  return out;
}

/// Subgraph induced by `keep` (any order, duplicates ignored). Nodes are
/// renumbered by ascending original id; `mapping[new] = old`.
struct Subgraph {
  DirectedGraph graph;
  std::vector<NodeId> mapping;
};

inline Subgraph induced_subgraph(const DirectedGraph& g, std::span<const NodeId> keep) {
  Subgraph sub;
  sub.mapping.assign(keep.begin(), keep.end());
  std::sort(sub.mapping.begin(), sub.mapping.end());
  sub.mapping.erase(std::unique(sub.mapping.begin(), sub.mapping.end()), sub.mapping.end());
  constexpr auto absent = static_cast<NodeId>(-1);
  std::vector<NodeId> to_new(g.node_count(), absent);
  for (NodeId i = 0; i < sub.mapping.size(); ++i) {
    const NodeId old = sub.mapping[i];
    if (old >= g.node_count()) throw Error(Errc::unknown_node, std::to_string(old));
    to_new[old] = i;
    const auto& info = g.node(old);
    sub.graph.add_node(info.step, info.origin);
  }
  for (const auto& e : g.edges())
    if (to_new[e.src] != absent && to_new[e.dst] != absent) sub.graph.add_edge(to_new[e.src], to_new[e.dst]);
  return sub;
}

/// Nodes within `radius` undirected hops of `center`, as an induced subgraph.
inline Subgraph bfs_ball(const DirectedGraph& g, NodeId center, std::size_t radius) {
  if (center >= g.node_count()) throw Error(Errc::unknown_node, std::to_string(center));
  const auto adj = undirected_simple(g);
  std::vector<std::size_t> dist(g.node_count(), static_cast<std::size_t>(-1));
  std::deque<NodeId> queue{center};
  dist[center] = 0;
  std::vector<NodeId> ball{center};
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    if (dist[v] == radius) continue;
    for (NodeId w : adj[v]) {
      if (dist[w] != static_cast<std::size_t>(-1)) continue;
      dist[w] = dist[v] + 1;
      ball.push_back(w);
      queue.push_back(w);
    }
  }
  return induced_subgraph(g, ball);
}

}  // namespace evonet
