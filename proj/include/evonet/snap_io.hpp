#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "evonet/graph.hpp"

namespace evonet {

/// Result of reading a SNAP edge list. `original_ids[dense] = id in file`.
struct SnapGraph {
  DirectedGraph graph;
  std::vector<std::uint64_t> original_ids;
  std::size_t skipped_self_loops = 0;
};

enum class IdMode {
  /// Dense ids assigned in order of first appearance (source before target).
  first_appearance,
  /// Ids in the file are already dense; a "# Nodes: N" header, when present,
  /// declares isolated trailing nodes.
  preserve,
};

namespace detail {

inline bool parse_u64(std::string_view tok, std::uint64_t& out) {
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::size_t declared_nodes(std::string_view comment) {
  const auto pos = comment.find("Nodes:");
  if (pos == std::string_view::npos) return 0;
  const auto toks = split_ws(comment.substr(pos + 6));
  std::uint64_t n = 0;
  if (!toks.empty() && parse_u64(toks.front(), n)) return static_cast<std::size_t>(n);
  return 0;
}

}  // namespace detail

/// Reads "FromNodeId ToNodeId" lines; '#' starts a comment line. Self-loops
/// are skipped and counted. Malformed lines throw ParseError with the line
/// number.
inline SnapGraph read_snap(std::istream& in, IdMode mode = IdMode::first_appearance) {
  SnapGraph out;
  std::unordered_map<std::uint64_t, NodeId> dense;
  std::vector<std::pair<NodeId, NodeId>> pending;
  std::size_t declared = 0;
  std::string line;
  std::size_t lineno = 0;

  auto intern = [&](std::uint64_t raw) -> NodeId {
    if (mode == IdMode::preserve) {
      while (out.original_ids.size() <= raw) out.original_ids.push_back(out.original_ids.size());
      return static_cast<NodeId>(raw);
    }
    auto [it, inserted] = dense.try_emplace(raw, static_cast<NodeId>(out.original_ids.size()));
    if (inserted) out.original_ids.push_back(raw);
    return it->second;
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    const auto toks = detail::split_ws(view);
    if (toks.empty()) continue;
    if (toks.front().front() == '#') {
      if (mode == IdMode::preserve) declared = std::max(declared, detail::declared_nodes(view));
      continue;
    }
    std::uint64_t a = 0, b = 0;
    if (toks.size() != 2 || !detail::parse_u64(toks[0], a) || !detail::parse_u64(toks[1], b))
      throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": '" + line + "'");
    if (a == b) {
      ++out.skipped_self_loops;
      continue;
    }
    const NodeId s = intern(a);
    const NodeId t = intern(b);
    pending.emplace_back(s, t);
  }
  if (mode == IdMode::preserve)
    while (out.original_ids.size() < declared) out.original_ids.push_back(out.original_ids.size());
  out.graph.add_nodes(out.original_ids.size());
  for (auto [s, t] : pending) out.graph.add_edge(s, t);
  return out;
}

inline SnapGraph read_snap_file(const std::string& path, IdMode mode = IdMode::first_appearance) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  return read_snap(in, mode);
}

/// Deterministic serialization: a node/edge count header followed by one
/// tab-separated edge per line, in insertion order.
inline void write_snap(std::ostream& out, const DirectedGraph& g) {
  out << "# Nodes: " << g.node_count() << " Edges: " << g.edge_count() << '\n';
  out << "# FromNodeId\tToNodeId\n";
  for (const auto& e : g.edges()) out << e.src << '\t' << e.dst << '\n';
}

inline void write_snap_file(const std::string& path, const DirectedGraph& g) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path);
  write_snap(out, g);
}

}  // namespace evonet
