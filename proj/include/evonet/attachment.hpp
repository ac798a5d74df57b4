#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "evonet/core.hpp"
#include "evonet/graph.hpp"

namespace evonet {

enum class Scheme : std::uint8_t { alpha, beta, gamma };

inline char scheme_letter(Scheme s) {
  switch (s) {
    case Scheme::alpha: return 'a';
    case Scheme::beta: return 'b';
    case Scheme::gamma: return 'g';
  }
  return '?';
}

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::alpha: return "alpha";
    case Scheme::beta: return "beta";
    case Scheme::gamma: return "gamma";
  }
  return "?";
}

/// How degree-proportional endpoints are drawn. Both produce the same
/// distribution; `edge_pool` is O(1) per draw, `linear_scan` is the direct
/// cumulative-weight reference.
enum class EndpointSampler : std::uint8_t { edge_pool, linear_scan };

/// Linear preferential attachment PA(alpha, beta, gamma) with offsets
/// delta_in / delta_out.
struct PaParams {
  double alpha = 0.4;
  double beta = 0.2;
  double gamma = 0.4;
  double delta_in = 1.0;
  double delta_out = 1.0;
  std::size_t steps = 1;
  EndpointSampler sampler = EndpointSampler::edge_pool;
};

inline void validate(const PaParams& p) {
  if (p.alpha < 0 || p.beta < 0 || p.gamma < 0)
    throw Error(Errc::invalid_params, "PA probabilities must be non-negative");
  if (std::abs(p.alpha + p.beta + p.gamma - 1.0) > 1e-12)
    throw Error(Errc::invalid_params, "alpha + beta + gamma must equal 1");
  if (p.delta_in < 0 || p.delta_out < 0) throw Error(Errc::invalid_params, "delta must be non-negative");
  if (p.steps < 1) throw Error(Errc::invalid_params, "steps must be >= 1");
}

/// Wan et al. limit tail indices of in- and out-degrees under PA.
struct DegreeTailLaw {
  double iota_in;
  double iota_out;
};

inline DegreeTailLaw degree_tail_law(const PaParams& p) {
  return {(1.0 + p.delta_in * (p.alpha + p.gamma)) / (p.alpha + p.beta),
          (1.0 + p.delta_out * (p.alpha + p.gamma)) / (p.beta + p.gamma)};
}

struct StepRecord {
  std::size_t step = 0;
  Scheme scheme = Scheme::alpha;
  std::optional<NodeId> new_node;
  Edge edge;
};

using EvolutionLog = std::vector<StepRecord>;

namespace detail {

enum class Side { in, out };

/// Draws w with probability (deg(w) + delta) / (e + delta * N).
inline NodeId draw_endpoint(const DirectedGraph& g, Side side, double delta, EndpointSampler how, Rng& rng) {
  const std::size_t e = g.edge_count();
  const std::size_t n = g.node_count();
  const double total = static_cast<double>(e) + delta * static_cast<double>(n);
  if (how == EndpointSampler::edge_pool) {
    // With probability e / total take an endpoint of a uniform edge (degree
    // proportional), otherwise a uniform node (delta part).
    if (uniform01(rng) * total < static_cast<double>(e)) {
      const auto& edge = g.edges()[uniform_index(rng, e)];
      return side == Side::in ? edge.dst : edge.src;
    }
    return static_cast<NodeId>(uniform_index(rng, n));
  }
  const auto degs = side == Side::in ? g.in_degrees() : g.out_degrees();
  double target = uniform01(rng) * total;
  for (NodeId w = 0; w < n; ++w) {
    target -= static_cast<double>(degs[w]) + delta;
    if (target < 0) return w;
  }
  // Rounding left a sliver past the end; fall back to the last positive weight.
  for (NodeId w = static_cast<NodeId>(n); w-- > 0;)
    if (static_cast<double>(degs[w]) + delta > 0) return w;
  return 0;
}

}  // namespace detail

/// Probability that one beta draw (before self-loop redraws) yields the pair
/// (v, w): the out-degree weight of v times the in-degree weight of w.
inline double beta_pair_probability(const DirectedGraph& g, NodeId v, NodeId w, const PaParams& p) {
  const double e = static_cast<double>(g.edge_count());
  const double n = static_cast<double>(g.node_count());
  return (static_cast<double>(g.out_degree(v)) + p.delta_out) / (e + p.delta_out * n) *
         (static_cast<double>(g.in_degree(w)) + p.delta_in) / (e + p.delta_in * n);
}

/// Exact per-node probabilities used by the alpha (in-degree) or gamma
/// (out-degree) scheme. Mostly useful for tests and diagnostics.
inline std::vector<double> attachment_probabilities(const DirectedGraph& g, Scheme s, const PaParams& p) {
  const bool in = s == Scheme::alpha;
  const double delta = in ? p.delta_in : p.delta_out;
  const auto degs = in ? g.in_degrees() : g.out_degrees();
  const double total = static_cast<double>(g.edge_count()) + delta * static_cast<double>(g.node_count());
  std::vector<double> probs(g.node_count());
  for (std::size_t w = 0; w < probs.size(); ++w) probs[w] = (static_cast<double>(degs[w]) + delta) / total;
  return probs;
}

/// One attachment step. The scheme is drawn trinomially; alpha adds a new node
/// v with edge v -> w (w by in-degree), gamma adds v with edge w -> v (w by
/// out-degree), beta adds v -> w between existing nodes with v by out-degree
/// and w by in-degree drawn independently (v == w is redrawn).
inline StepRecord pa_step(DirectedGraph& g, const PaParams& p, Rng& rng, std::size_t step_index = 0) {
  using detail::Side;
  if (g.empty()) throw Error(Errc::degenerate_graph, "attachment needs at least one node");
  if (g.edge_count() == 0 && p.delta_in == 0 && p.delta_out == 0)
    throw Error(Errc::degenerate_graph, "no edges and zero deltas: attachment weights vanish");

  const double u = uniform01(rng);
  const Scheme scheme = u < p.alpha ? Scheme::alpha : (u < p.alpha + p.beta ? Scheme::beta : Scheme::gamma);
  const auto needs = [&](Side side) {
    const double delta = side == Side::in ? p.delta_in : p.delta_out;
    if (g.edge_count() == 0 && delta == 0)
      throw Error(Errc::degenerate_graph, std::string(scheme_name(scheme)) + " step has zero total weight");
  };

  StepRecord rec;
  rec.step = step_index;
  rec.scheme = scheme;
  const auto stamp = static_cast<std::int64_t>(step_index);
  switch (scheme) {
    case Scheme::alpha: {
      needs(Side::in);
      const NodeId w = detail::draw_endpoint(g, Side::in, p.delta_in, p.sampler, rng);
      const NodeId v = g.add_node(stamp, Origin::attached);
      g.add_edge(v, w);
      rec.new_node = v;
      rec.edge = {v, w};
      break;
    }
    case Scheme::gamma: {
      needs(Side::out);
      const NodeId w = detail::draw_endpoint(g, Side::out, p.delta_out, p.sampler, rng);
      const NodeId v = g.add_node(stamp, Origin::attached);
      g.add_edge(w, v);
      rec.new_node = v;
      rec.edge = {w, v};
      break;
    }
    case Scheme::beta: {
      needs(Side::in);
      needs(Side::out);
      if (g.node_count() < 2) throw Error(Errc::degenerate_graph, "beta step needs two nodes");
      for (int attempt = 0;; ++attempt) {
        if (attempt == 10000) throw Error(Errc::degenerate_graph, "beta step could not avoid a self-loop");
        const NodeId v = detail::draw_endpoint(g, Side::out, p.delta_out, p.sampler, rng);
        const NodeId w = detail::draw_endpoint(g, Side::in, p.delta_in, p.sampler, rng);
        if (v == w) continue;
        g.add_edge(v, w);
        rec.edge = {v, w};
        break;
      }
      break;
    }
  }
  return rec;
}

/// Called after the given (1-based) number of completed steps.
using CheckpointFn = std::function<void(std::size_t completed_steps, const DirectedGraph&)>;

/// Runs p.steps attachment steps. `checkpoints` must be ascending.
inline EvolutionLog evolve(DirectedGraph& g, const PaParams& p, std::uint64_t rng_seed,
                           std::span<const std::size_t> checkpoints = {}, const CheckpointFn& on_checkpoint = {}) {
  validate(p);
  Rng rng(derive_seed(rng_seed, 3));
  EvolutionLog log;
  log.reserve(p.steps);
  std::size_t next_cp = 0;
  for (std::size_t s = 0; s < p.steps; ++s) {
    log.push_back(pa_step(g, p, rng, s));
    while (next_cp < checkpoints.size() && checkpoints[next_cp] == s + 1) {
      if (on_checkpoint) on_checkpoint(s + 1, g);
      ++next_cp;
    }
  }
  return log;
}

inline std::size_t new_node_count(const EvolutionLog& log) {
  std::size_t n = 0;
  for (const auto& r : log) n += r.new_node.has_value();
  return n;
}

inline void write_log_csv(std::ostream& out, const EvolutionLog& log) {
  out << "step,scheme,new_node,src,dst\n";
  for (const auto& r : log) {
    out << r.step << ',' << scheme_name(r.scheme) << ',';
    if (r.new_node) out << *r.new_node;
    out << ',' << r.edge.src << ',' << r.edge.dst << '\n';
  }
}

inline EvolutionLog read_log_csv(std::istream& in) {
  EvolutionLog log;
  std::string line;
  std::size_t lineno = 0;
  const auto bad = [&] { return Error(Errc::parse_error, "log line " + std::to_string(lineno) + ": '" + line + "'"); };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (lineno == 1 && line.rfind("step,", 0) == 0)) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (;;) {
      const auto comma = line.find(',', pos);
      f.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (f.size() < 5) throw bad();  // trailing columns (e.g. run metadata) are ignored
    StepRecord r;
    try {
      r.step = std::stoull(f[0]);
      if (f[1] == "alpha") r.scheme = Scheme::alpha;
      else if (f[1] == "beta") r.scheme = Scheme::beta;
      else if (f[1] == "gamma") r.scheme = Scheme::gamma;
      else throw bad();
      if (!f[2].empty()) r.new_node = static_cast<NodeId>(std::stoul(f[2]));
      r.edge = {static_cast<NodeId>(std::stoul(f[3])), static_cast<NodeId>(std::stoul(f[4]))};
    } catch (const std::logic_error&) {
      throw bad();
    }
    log.push_back(r);
  }
  return log;
}

}  // namespace evonet
