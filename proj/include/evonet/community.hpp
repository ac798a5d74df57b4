#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evonet/attachment.hpp"
#include "evonet/core.hpp"
#include "evonet/graph.hpp"
#include "evonet/stats.hpp"

namespace evonet {

/// Node -> community map. `rank[c]` is the 1-based position of community c
/// in ascending order of tail index (empty until `rank_by_tail` is called).
struct CommunityPartition {
  std::vector<std::uint32_t> assignment;
  std::uint32_t count = 0;
  std::vector<std::uint32_t> rank;
  double modularity = 0.0;

  std::vector<std::vector<NodeId>> members() const {
    std::vector<std::vector<NodeId>> out(count);
    for (NodeId v = 0; v < assignment.size(); ++v) out[assignment[v]].push_back(v);
    return out;
  }
};

inline CommunityPartition partition_from_labels(std::vector<std::uint32_t> labels) {
  CommunityPartition p;
  p.assignment = std::move(labels);
  p.count = p.assignment.empty() ? 0 : *std::max_element(p.assignment.begin(), p.assignment.end()) + 1;
  return p;
}

/// Directed modularity Q = (1/m) sum_ij [A_ij - k_i^out k_j^in / m] delta(c_i, c_j)
/// over the first assignment.size() nodes (edges touching other nodes are
/// ignored).
inline double directed_modularity(const DirectedGraph& g, const std::vector<std::uint32_t>& assignment) {
  const std::size_t n = assignment.size();
  std::uint32_t k = 0;
  for (auto c : assignment) k = std::max(k, c + 1);
  std::vector<double> tot_in(k, 0.0), tot_out(k, 0.0);
  double m = 0.0, internal = 0.0;
  for (const auto& e : g.edges()) {
    if (e.src >= n || e.dst >= n) continue;
    m += 1.0;
    tot_out[assignment[e.src]] += 1.0;
    tot_in[assignment[e.dst]] += 1.0;
    if (assignment[e.src] == assignment[e.dst]) internal += 1.0;
  }
  if (m == 0.0) return 0.0;
  double expected = 0.0;
  for (std::uint32_t c = 0; c < k; ++c) expected += tot_out[c] * tot_in[c];
  return (internal - expected / m) / m;
}

namespace detail {

struct WeightedDigraph {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> out, in;
  std::vector<double> self, k_out, k_in;
  double m = 0.0;

  explicit WeightedDigraph(std::size_t n) : out(n), in(n), self(n, 0.0), k_out(n, 0.0), k_in(n, 0.0) {}
  std::size_t size() const { return out.size(); }
};

inline WeightedDigraph to_weighted(const DirectedGraph& g) {
  WeightedDigraph w(g.node_count());
  std::vector<std::vector<std::pair<std::uint32_t, double>>> raw(g.node_count());
  for (const auto& e : g.edges()) raw[e.src].emplace_back(e.dst, 1.0);
  for (std::uint32_t v = 0; v < raw.size(); ++v) {
    auto& list = raw[v];
    std::sort(list.begin(), list.end());
    for (std::size_t i = 0; i < list.size();) {
      std::size_t j = i;
      double weight = 0.0;
      while (j < list.size() && list[j].first == list[i].first) weight += list[j++].second;
      w.out[v].emplace_back(list[i].first, weight);
      w.in[list[i].first].emplace_back(v, weight);
      w.k_out[v] += weight;
      w.k_in[list[i].first] += weight;
      w.m += weight;
      i = j;
    }
  }
  return w;
}

/// Local moving phase. Returns true if any node changed community.
inline bool louvain_local_moves(const WeightedDigraph& g, std::vector<std::uint32_t>& comm, Rng& rng) {
  const std::size_t n = g.size();
  std::vector<double> tot_in(n, 0.0), tot_out(n, 0.0);
  for (std::uint32_t v = 0; v < n; ++v) {
    tot_in[comm[v]] += g.k_in[v];
    tot_out[comm[v]] += g.k_out[v];
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  evonet::shuffle(order.begin(), order.end(), rng);

  std::vector<double> link(n, 0.0);
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> touched;
  bool any_move = false;
  for (bool moved = true; moved;) {
    moved = false;
    for (std::uint32_t v : order) {
      const std::uint32_t own = comm[v];
      tot_in[own] -= g.k_in[v];
      tot_out[own] -= g.k_out[v];
      touched.clear();
      auto touch = [&](std::uint32_t c, double w) {
        if (!seen[c]) {
          seen[c] = 1;
          touched.push_back(c);
        }
        link[c] += w;
      };
      touch(own, 0.0);
      for (auto [u, w] : g.out[v])
        if (u != v) touch(comm[u], w);
      for (auto [u, w] : g.in[v])
        if (u != v) touch(comm[u], w);

      auto gain = [&](std::uint32_t c) {
        return link[c] - (g.k_out[v] * tot_in[c] + g.k_in[v] * tot_out[c]) / g.m;
      };
      std::uint32_t best = own;
      double best_gain = gain(own);
      for (std::uint32_t c : touched) {
        const double gc = gain(c);
        if (gc > best_gain + 1e-12) {
          best_gain = gc;
          best = c;
        }
      }
      for (std::uint32_t c : touched) {
        link[c] = 0.0;
        seen[c] = 0;
      }
      comm[v] = best;
      tot_in[best] += g.k_in[v];
      tot_out[best] += g.k_out[v];
      if (best != own) moved = any_move = true;
    }
  }
  return any_move;
}

/// Renumbers labels densely in order of first appearance.
inline std::uint32_t compact_labels(std::vector<std::uint32_t>& labels) {
  std::vector<std::uint32_t> remap(labels.size() + 1, static_cast<std::uint32_t>(-1));
  std::uint32_t next = 0;
  for (auto& c : labels) {
    if (c >= remap.size()) remap.resize(c + 1, static_cast<std::uint32_t>(-1));
    if (remap[c] == static_cast<std::uint32_t>(-1)) remap[c] = next++;
    c = remap[c];
  }
  return next;
}

inline WeightedDigraph aggregate(const WeightedDigraph& g, const std::vector<std::uint32_t>& comm, std::uint32_t k) {
  WeightedDigraph agg(k);
  std::vector<std::vector<std::pair<std::uint32_t, double>>> raw(k);
  for (std::uint32_t v = 0; v < g.size(); ++v) {
    agg.self[comm[v]] += g.self[v];
    for (auto [u, w] : g.out[v]) {
      if (comm[u] == comm[v]) agg.self[comm[v]] += w;
      else raw[comm[v]].emplace_back(comm[u], w);
    }
  }
  for (std::uint32_t c = 0; c < k; ++c) {
    auto& list = raw[c];
    std::sort(list.begin(), list.end());
    for (std::size_t i = 0; i < list.size();) {
      std::size_t j = i;
      double weight = 0.0;
      while (j < list.size() && list[j].first == list[i].first) weight += list[j++].second;
      agg.out[c].emplace_back(list[i].first, weight);
      agg.in[list[i].first].emplace_back(c, weight);
      i = j;
    }
  }
  for (std::uint32_t v = 0; v < g.size(); ++v) {
    agg.k_out[comm[v]] += g.k_out[v];
    agg.k_in[comm[v]] += g.k_in[v];
  }
  agg.m = g.m;
  return agg;
}

}  // namespace detail

/// Two-phase Louvain on directed modularity. Node visiting order is shuffled
/// with `rng_seed`; communities are numbered by their smallest member id.
inline CommunityPartition louvain_directed(const DirectedGraph& g, std::uint64_t rng_seed) {
  if (g.edge_count() == 0) throw Error(Errc::empty_graph, "louvain needs at least one edge");
  Rng rng(derive_seed(rng_seed, 4));
  auto level = detail::to_weighted(g);
  std::vector<std::uint32_t> node_comm(g.node_count());
  std::iota(node_comm.begin(), node_comm.end(), 0u);

  for (;;) {
    std::vector<std::uint32_t> comm(level.size());
    std::iota(comm.begin(), comm.end(), 0u);
    const bool moved = detail::louvain_local_moves(level, comm, rng);
    if (!moved) break;
    const auto k = detail::compact_labels(comm);
    for (auto& c : node_comm) c = comm[c];
    level = detail::aggregate(level, comm, k);
  }
  CommunityPartition p;
  p.assignment = std::move(node_comm);
  p.count = detail::compact_labels(p.assignment);
  p.modularity = directed_modularity(g, p.assignment);
  return p;
}

/// Repeatedly merges the smallest community into the neighbor community it
/// shares the most edges with (the largest community if it has none) until
/// `target` communities remain.
inline void merge_to_count(const DirectedGraph& g, CommunityPartition& p, std::uint32_t target) {
  if (target == 0) throw Error(Errc::invalid_params, "target community count must be positive");
  while (p.count > target) {
    std::vector<std::size_t> size(p.count, 0);
    for (auto c : p.assignment) ++size[c];
    const auto smallest = static_cast<std::uint32_t>(std::min_element(size.begin(), size.end()) - size.begin());
    std::vector<std::size_t> links(p.count, 0);
    for (const auto& e : g.edges()) {
      if (e.src >= p.assignment.size() || e.dst >= p.assignment.size()) continue;
      const auto a = p.assignment[e.src], b = p.assignment[e.dst];
      if (a == smallest && b != smallest) ++links[b];
      if (b == smallest && a != smallest) ++links[a];
    }
    std::uint32_t into = smallest == 0 ? 1 : 0;
    for (std::uint32_t c = 0; c < p.count; ++c) {
      if (c == smallest) continue;
      if (links[c] > links[into] || (links[c] == links[into] && size[c] > size[into])) into = c;
    }
    for (auto& c : p.assignment)
      if (c == smallest) c = into;
    p.count = detail::compact_labels(p.assignment);
  }
  p.rank.clear();
  p.modularity = directed_modularity(g, p.assignment);
}

/// Sets rank[c] = 1-based position of community c in ascending order of
/// `tail_index[c]` (ties broken by community index).
inline void rank_by_tail(CommunityPartition& p, const std::vector<double>& tail_index) {
  if (tail_index.size() != p.count) throw Error(Errc::length_mismatch, "one tail index per community required");
  std::vector<std::uint32_t> order(p.count);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return tail_index[a] < tail_index[b]; });
  p.rank.assign(p.count, 0);
  for (std::uint32_t pos = 0; pos < order.size(); ++pos) p.rank[order[pos]] = pos + 1;
}

// ---------------------------------------------------------------------------
// Mean excess.

struct MeanExcessCurve {
  std::vector<double> thresholds;
  std::vector<double> values;
  std::vector<std::size_t> exceedances;
  stats::LinearFit linear_fit;
};

/// e_n(u) = sum (X_i - u) 1(X_i > u) / sum 1(X_i > u). Returns 0 when nothing
/// exceeds u.
inline double mean_excess_at(std::span<const double> sample, double u, std::size_t* count = nullptr) {
  double sum = 0.0;
  std::size_t k = 0;
  for (double x : sample)
    if (x > u) {
      sum += x - u;
      ++k;
    }
  if (count) *count = k;
  return k ? sum / static_cast<double>(k) : 0.0;
}

inline constexpr std::size_t kMinExceedances = 10;

/// Mean excess at explicit thresholds plus a least-squares line through the
/// points. Every threshold must leave at least 10 exceedances.
inline MeanExcessCurve mean_excess_at_thresholds(std::span<const double> sample, std::vector<double> thresholds) {
  MeanExcessCurve curve;
  std::sort(thresholds.begin(), thresholds.end());
  curve.thresholds = std::move(thresholds);
  for (double u : curve.thresholds) {
    std::size_t k = 0;
    curve.values.push_back(mean_excess_at(sample, u, &k));
    curve.exceedances.push_back(k);
    if (k < kMinExceedances)
      throw Error(Errc::insufficient_exceedances,
                  std::to_string(k) + " exceedances above u = " + std::to_string(u));
  }
  if (curve.thresholds.size() >= 2) curve.linear_fit = stats::linear_fit(curve.thresholds, curve.values);
  return curve;
}

/// Mean excess with thresholds at the given empirical quantile levels.
inline MeanExcessCurve mean_excess(std::span<const double> sample, std::span<const double> quantile_levels) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> thresholds;
  for (double q : quantile_levels) thresholds.push_back(stats::quantile_sorted(sorted, q));
  return mean_excess_at_thresholds(sample, std::move(thresholds));
}

/// Default diagnostic grid: quantile levels 0.50, 0.55, ..., 0.95.
inline std::vector<double> default_mean_excess_grid() { return stats::linspace(0.50, 0.95, 10); }

struct StationarityCheck {
  bool pass = false;
  bool evaluated = false;
  MeanExcessCurve curve;
};

/// Pareto-type diagnostic: the mean excess over the default grid must be
/// close to linear (r^2 >= r2_min). Samples too small for the grid are
/// reported as not evaluated (and not passing).
inline StationarityCheck stationarity_proxy(std::span<const double> sample, double r2_min = 0.9) {
  StationarityCheck check;
  try {
    check.curve = mean_excess(sample, default_mean_excess_grid());
    check.evaluated = true;
    check.pass = check.curve.linear_fit.r2 >= r2_min;
  } catch (const Error& e) {
    if (e.code() != Errc::insufficient_exceedances) throw;
  }
  return check;
}

// ---------------------------------------------------------------------------
// Classification of attached nodes.

enum class Direction : std::uint8_t { in, out };

/// Digit i (1-based) is either 0 or i.
struct NodeCode {
  std::vector<std::uint32_t> digits;

  std::uint32_t first_nonzero() const {
    for (auto d : digits)
      if (d) return d;
    return 0;
  }

  /// Fixed-width rendering; each digit is zero-padded to the width of N_C.
  std::string to_string() const {
    const std::size_t width = std::to_string(digits.size()).size();
    std::string s;
    for (auto d : digits) {
      auto t = std::to_string(d);
      s.append(width - t.size(), '0');
      s += t;
    }
    return s;
  }
};

struct ClassLabel {
  std::uint32_t class_index = 0;
  Direction direction = Direction::in;
};

struct NodeClass {
  NodeId node = 0;
  NodeCode code;
  ClassLabel label;
};

/// Classifies each node the log attached. Position i of a code refers to the
/// community ranked i-th by tail index. Only edges between the node and seed
/// nodes covered by the partition set digits: for Direction::in an edge
/// seed -> node, for Direction::out an edge node -> seed. Class is the first
/// nonzero position, or N_C + 1 when the node touches no seed community.
inline std::vector<NodeClass> classify_new_nodes(const DirectedGraph& g, const CommunityPartition& p,
                                                 const EvolutionLog& log, Direction direction) {
  if (p.rank.size() != p.count) throw Error(Errc::invalid_params, "partition is not ranked");
  const std::size_t seed_nodes = p.assignment.size();
  const std::uint32_t nc = p.count;

  std::vector<NodeId> attached;
  for (const auto& r : log)
    if (r.new_node) attached.push_back(*r.new_node);
  std::vector<std::int64_t> slot(g.node_count(), -1);
  std::vector<NodeClass> out(attached.size());
  for (std::size_t i = 0; i < attached.size(); ++i) {
    if (attached[i] < seed_nodes) throw Error(Errc::invalid_params, "attached node is covered by the seed partition");
    slot.at(attached[i]) = static_cast<std::int64_t>(i);
    out[i].node = attached[i];
    out[i].code.digits.assign(nc, 0);
    out[i].label.direction = direction;
  }
  for (const auto& e : g.edges()) {
    const NodeId node = direction == Direction::in ? e.dst : e.src;
    const NodeId other = direction == Direction::in ? e.src : e.dst;
    if (other >= seed_nodes || slot[node] < 0) continue;
    const auto pos = p.rank[p.assignment[other]];
    out[static_cast<std::size_t>(slot[node])].code.digits[pos - 1] = pos;
  }
  for (auto& nc_ : out) {
    const auto first = nc_.code.first_nonzero();
    nc_.label.class_index = first ? first : nc + 1;
  }
  return out;
}

/// Class index -> sorted list of community ranks set in any member's code.
inline std::vector<std::vector<std::uint32_t>> class_links(const std::vector<NodeClass>& classes, std::uint32_t nc) {
  std::vector<std::vector<std::uint32_t>> links(nc + 2);
  for (const auto& c : classes)
    for (auto d : c.code.digits)
      if (d) links[c.label.class_index].push_back(d);
  for (auto& l : links) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return links;
}

}  // namespace evonet
