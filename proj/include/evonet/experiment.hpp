#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "evonet/attachment.hpp"
#include "evonet/community.hpp"
#include "evonet/evt/extremal.hpp"
#include "evonet/evt/graph_gaps.hpp"
#include "evonet/evt/tail.hpp"
#include "evonet/generators.hpp"
#include "evonet/influence.hpp"
#include "evonet/snap_io.hpp"
#include "evonet/theory.hpp"
#include "json.hpp"

namespace evonet {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration.

struct SnapSource {
  enum class Extraction : std::uint8_t { whole, induced, bfs_ball };
  std::string path;
  Extraction extraction = Extraction::whole;
  std::vector<std::uint64_t> nodes;  // file ids kept by `induced`
  std::uint64_t center = 0;          // file id at the centre of `bfs_ball`
  std::size_t radius = 1;
  bool preserve_ids = false;
};

struct EstimatorConfig {
  std::size_t bootstrap_resamples = 500;
  double level = 0.975;
  evt::KSelection k_selection = evt::KSelection::bootstrap;
  std::vector<double> u_grid = evt::default_threshold_grid();
  std::size_t k_grid_max = 5;
  bool exclude_ones = false;
  std::size_t max_path_len = 10;  // 0 skips the graph estimator
  double graph_u_level = 0.95;
  std::size_t hill_curve_points = 200;
};

struct ExperimentConfig {
  std::uint64_t rng_seed = 1;
  std::optional<SeedSpec> tbt;
  std::optional<SnapSource> snap;
  PaParams pa;
  PrParams pagerank;
  EstimatorConfig estimators;
  std::uint32_t communities = 0;  // target N_C; 0 keeps TBT components as they are
  std::size_t checkpoints = 20;
  bool score_mlm = true;
  std::string output_dir = "results";
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

[[noreturn]] inline void bad_config(const std::string& what) { throw Error(Errc::invalid_params, "config: " + what); }

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    bad_config(std::string(key) + ": " + e.what());
  }
}

inline DanglingMode dangling_from(const std::string& s) {
  if (s == "literal") return DanglingMode::literal;
  if (s == "redistribute") return DanglingMode::redistribute;
  bad_config("pagerank.dangling must be literal|redistribute");
}

inline evt::KSelection k_selection_from(const std::string& s) {
  if (s == "bootstrap") return evt::KSelection::bootstrap;
  if (s == "double_bootstrap") return evt::KSelection::double_bootstrap;
  if (s == "min_distance") return evt::KSelection::min_distance;
  bad_config("estimators.k_selection must be bootstrap|double_bootstrap|min_distance");
}

inline const char* dangling_name(DanglingMode d) { return d == DanglingMode::literal ? "literal" : "redistribute"; }

inline const char* extraction_name(SnapSource::Extraction e) {
  switch (e) {
    case SnapSource::Extraction::whole: return "whole";
    case SnapSource::Extraction::induced: return "induced";
    case SnapSource::Extraction::bfs_ball: return "bfs-ball";
  }
  return "?";
}

}  // namespace detail

/// Reads an experiment config. Missing keys take the defaults above; TBT
/// components without an explicit rng_seed get one derived from the master.
inline ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) detail::bad_config("top level must be an object");
  ExperimentConfig c;
  c.rng_seed = detail::field<std::uint64_t>(j, "rng_seed", 1);
  if (!j.contains("seed_graph") || !j["seed_graph"].is_object()) detail::bad_config("seed_graph is required");
  const auto& sg = j["seed_graph"];
  if (sg.contains("tbt") == sg.contains("snap")) detail::bad_config("seed_graph needs exactly one of tbt, snap");
  if (sg.contains("tbt")) {
    const auto& t = sg["tbt"];
    SeedSpec s;
    s.cross_edges = detail::field<std::size_t>(t, "cross_edges", 0);
    s.rng_seed = detail::field<std::uint64_t>(t, "rng_seed", derive_seed(c.rng_seed, 199));
    if (!t.contains("components") || !t["components"].is_array() || t["components"].empty())
      detail::bad_config("seed_graph.tbt.components must be a non-empty array");
    for (std::size_t i = 0; i < t["components"].size(); ++i) {
      const auto& cj = t["components"][i];
      BiDegreeSpec b;
      b.n = detail::field<std::size_t>(cj, "n", b.n);
      b.iota_in = detail::field<double>(cj, "iota_in", b.iota_in);
      b.iota_out = detail::field<double>(cj, "iota_out", b.iota_out);
      b.rng_seed = detail::field<std::uint64_t>(cj, "rng_seed", derive_seed(c.rng_seed, 200 + i));
      s.components.push_back(b);
    }
    c.tbt = s;
  } else {
    const auto& sj = sg["snap"];
    SnapSource s;
    s.path = detail::field<std::string>(sj, "path", "");
    if (s.path.empty()) detail::bad_config("seed_graph.snap.path is required");
    const auto ex = detail::field<std::string>(sj, "extraction", "whole");
    if (ex == "whole") s.extraction = SnapSource::Extraction::whole;
    else if (ex == "induced") s.extraction = SnapSource::Extraction::induced;
    else if (ex == "bfs-ball") s.extraction = SnapSource::Extraction::bfs_ball;
    else detail::bad_config("seed_graph.snap.extraction must be whole|induced|bfs-ball");
    s.nodes = detail::field<std::vector<std::uint64_t>>(sj, "nodes", {});
    s.center = detail::field<std::uint64_t>(sj, "center", 0);
    s.radius = detail::field<std::size_t>(sj, "radius", 1);
    s.preserve_ids = detail::field<bool>(sj, "preserve_ids", false);
    c.snap = s;
  }
  if (j.contains("pa")) {
    const auto& p = j["pa"];
    c.pa.alpha = detail::field<double>(p, "alpha", c.pa.alpha);
    c.pa.beta = detail::field<double>(p, "beta", c.pa.beta);
    c.pa.gamma = detail::field<double>(p, "gamma", c.pa.gamma);
    c.pa.delta_in = detail::field<double>(p, "delta_in", c.pa.delta_in);
    c.pa.delta_out = detail::field<double>(p, "delta_out", c.pa.delta_out);
    c.pa.steps = detail::field<std::size_t>(p, "steps", 0);
  } else {
    detail::bad_config("pa is required");
  }
  if (j.contains("pagerank")) {
    const auto& p = j["pagerank"];
    c.pagerank.c = detail::field<double>(p, "c", c.pagerank.c);
    c.pagerank.tol = detail::field<double>(p, "tol", c.pagerank.tol);
    c.pagerank.max_iter = detail::field<std::size_t>(p, "max_iter", c.pagerank.max_iter);
    c.pagerank.dangling = detail::dangling_from(detail::field<std::string>(p, "dangling", "literal"));
  }
  if (j.contains("estimators")) {
    const auto& e = j["estimators"];
    auto& o = c.estimators;
    o.bootstrap_resamples = detail::field<std::size_t>(e, "bootstrap_resamples", o.bootstrap_resamples);
    o.level = detail::field<double>(e, "level", o.level);
    o.k_selection = detail::k_selection_from(detail::field<std::string>(e, "k_selection", "bootstrap"));
    if (e.contains("u_grid")) {
      const auto& g = e["u_grid"];
      if (g.is_array()) o.u_grid = g.get<std::vector<double>>();
      else if (g.is_object())
        o.u_grid = stats::linspace(detail::field<double>(g, "from", 0.90), detail::field<double>(g, "to", 0.995),
                                   detail::field<std::size_t>(g, "points", 20));
      else detail::bad_config("estimators.u_grid must be a list or {from,to,points}");
    }
    o.k_grid_max = detail::field<std::size_t>(e, "k_grid_max", o.k_grid_max);
    o.exclude_ones = detail::field<bool>(e, "exclude_ones", o.exclude_ones);
    o.max_path_len = detail::field<std::size_t>(e, "max_path_len", o.max_path_len);
    o.graph_u_level = detail::field<double>(e, "graph_u_level", o.graph_u_level);
    o.hill_curve_points = detail::field<std::size_t>(e, "hill_curve_points", o.hill_curve_points);
  }
  c.communities = detail::field<std::uint32_t>(j, "communities", 0);
  c.checkpoints = detail::field<std::size_t>(j, "checkpoints", 20);
  c.score_mlm = detail::field<bool>(j, "score_mlm", true);
  c.output_dir = detail::field<std::string>(j, "outputs", c.output_dir);
  validate(c.pa);
  validate(c.pagerank);
  if (c.snap && c.communities == 0) detail::bad_config("a SNAP seed needs a target community count");
  return c;
}

/// Canonical form with every default filled in; the config hash is taken over it.
inline json to_json(const ExperimentConfig& c) {
  json j;
  j["rng_seed"] = c.rng_seed;
  if (c.tbt) {
    json comps = json::array();
    for (const auto& b : c.tbt->components)
      comps.push_back({{"n", b.n}, {"iota_in", b.iota_in}, {"iota_out", b.iota_out}, {"rng_seed", b.rng_seed}});
    j["seed_graph"]["tbt"] = {{"components", comps}, {"cross_edges", c.tbt->cross_edges}, {"rng_seed", c.tbt->rng_seed}};
  } else if (c.snap) {
    j["seed_graph"]["snap"] = {{"path", c.snap->path},
                               {"extraction", detail::extraction_name(c.snap->extraction)},
                               {"nodes", c.snap->nodes},
                               {"center", c.snap->center},
                               {"radius", c.snap->radius},
                               {"preserve_ids", c.snap->preserve_ids}};
  }
  j["pa"] = {{"alpha", c.pa.alpha}, {"beta", c.pa.beta},         {"gamma", c.pa.gamma},
             {"delta_in", c.pa.delta_in}, {"delta_out", c.pa.delta_out}, {"steps", c.pa.steps}};
  j["pagerank"] = {{"c", c.pagerank.c},
                   {"tol", c.pagerank.tol},
                   {"max_iter", c.pagerank.max_iter},
                   {"dangling", detail::dangling_name(c.pagerank.dangling)}};
  const auto& e = c.estimators;
  j["estimators"] = {{"bootstrap_resamples", e.bootstrap_resamples},
                     {"level", e.level},
                     {"k_selection", evt::k_selection_name(e.k_selection)},
                     {"u_grid", e.u_grid},
                     {"k_grid_max", e.k_grid_max},
                     {"exclude_ones", e.exclude_ones},
                     {"max_path_len", e.max_path_len},
                     {"graph_u_level", e.graph_u_level},
                     {"hill_curve_points", e.hill_curve_points}};
  j["communities"] = c.communities;
  j["checkpoints"] = c.checkpoints;
  j["score_mlm"] = c.score_mlm;
  j["outputs"] = c.output_dir;
  return j;
}

/// FNV-1a over the canonical JSON dump, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) { return detail::hex64(detail::fnv1a(to_json(c).dump())); }

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open config " + path);
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse_error, "config " + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Results.

struct TailRow {
  std::string entity;
  std::string phase;  // pre | post
  std::string score;  // pagerank | mlm
  std::size_t n = 0;
  evt::TailEstimate estimate;
  bool ok = false;
  std::string status = "ok";
  bool stationarity_evaluated = false;
  bool stationary = false;
  double stationarity_r2 = std::numeric_limits<double>::quiet_NaN();
};

struct ThetaRow {
  std::string entity;
  std::string phase;
  std::string score;
  std::string estimator;
  std::string aggregation;
  std::size_t k_gap = 0;
  double theta = std::numeric_limits<double>::quiet_NaN();
  double threshold = std::numeric_limits<double>::quiet_NaN();
  bool fallback = false;
  std::string status = "ok";
};

struct CurvePoint {
  std::size_t checkpoint = 0;
  std::size_t steps = 0;
  double edge_ratio = 0.0;  // |E|_added / |E|_init
  std::string entity;
  std::size_t n = 0;
  double alpha_hat = std::numeric_limits<double>::quiet_NaN();
  double ci_lo = std::numeric_limits<double>::quiet_NaN();
  double ci_hi = std::numeric_limits<double>::quiet_NaN();
  std::size_t k = 0;
  std::string status = "ok";
};

struct MeanExcessRow {
  std::string entity;
  std::string phase;
  std::string score;
  double level = 0.0;
  double u = 0.0;
  double e = 0.0;
  double r2 = 0.0;
};

struct HillRow {
  std::string entity;
  std::string phase;
  std::string score;
  std::size_t k = 0;
  double alpha = 0.0;
};

struct ResultsBundle {
  ExperimentConfig config;
  std::string config_hash;
  std::size_t seed_nodes = 0;
  std::size_t seed_edges = 0;
  std::size_t final_nodes = 0;
  std::size_t final_edges = 0;
  std::uint32_t community_count = 0;
  std::vector<std::uint32_t> seed_partition;  // seed node -> community
  std::vector<std::uint32_t> community_rank;  // community -> rank (1 = heaviest tail)
  std::vector<TailRow> table1;
  std::vector<ThetaRow> table2;
  std::vector<CurvePoint> alpha_curve;
  std::vector<MeanExcessRow> mean_excess;
  std::vector<HillRow> hill_curves;
  std::vector<NodeClass> in_classes;
  std::vector<NodeClass> out_classes;
  json predictions = json::array();
  EvolutionLog log;
  std::vector<std::uint64_t> seed_original_ids;  // SNAP seeds only
  bool pagerank_converged = true;
  std::vector<std::string> completed_stages;
  std::optional<std::string> failed_stage;
  std::optional<Errc> error_code;
  std::string error;

  bool ok() const noexcept { return !failed_stage; }

  const TailRow* find_tail(std::string_view entity, std::string_view phase, std::string_view score = "pagerank") const {
    for (const auto& r : table1)
      if (r.entity == entity && r.phase == phase && r.score == score) return &r;
    return nullptr;
  }
};

inline std::string community_entity(std::uint32_t rank) { return "community_" + std::to_string(rank); }

inline std::string class_entity(Direction d, std::uint32_t cls) {
  return std::string(d == Direction::in ? "in_class_" : "out_class_") + std::to_string(cls);
}

// ---------------------------------------------------------------------------
// Pipeline.

namespace detail {

struct SeedGraph {
  DirectedGraph graph;
  std::vector<std::uint32_t> labels;  // TBT component labels, empty for SNAP
  std::vector<std::uint64_t> original_ids;
};

inline SeedGraph build_seed_graph(const ExperimentConfig& c) {
  SeedGraph s;
  if (c.tbt) {
    auto lg = build_seed(*c.tbt);
    s.graph = std::move(lg.graph);
    s.labels = std::move(lg.component);
    return s;
  }
  const auto& src = *c.snap;
  auto sg = read_snap_file(src.path, src.preserve_ids ? IdMode::preserve : IdMode::first_appearance);
  if (src.extraction == SnapSource::Extraction::whole) {
    s.graph = std::move(sg.graph);
    s.original_ids = std::move(sg.original_ids);
    return s;
  }
  std::unordered_map<std::uint64_t, NodeId> dense;
  for (NodeId v = 0; v < sg.original_ids.size(); ++v) dense.emplace(sg.original_ids[v], v);
  const auto lookup = [&](std::uint64_t id) {
    const auto it = dense.find(id);
    if (it == dense.end()) throw Error(Errc::unknown_node, "node " + std::to_string(id) + " not in " + src.path);
    return it->second;
  };
  Subgraph sub;
  if (src.extraction == SnapSource::Extraction::induced) {
    std::vector<NodeId> keep;
    for (auto id : src.nodes) keep.push_back(lookup(id));
    sub = induced_subgraph(sg.graph, keep);
  } else {
    sub = bfs_ball(sg.graph, lookup(src.center), src.radius);
  }
  s.graph = std::move(sub.graph);
  for (NodeId v : sub.mapping) s.original_ids.push_back(sg.original_ids[v]);
  return s;
}

inline std::vector<double> gather(std::span<const double> scores, std::span<const NodeId> nodes) {
  std::vector<double> out;
  out.reserve(nodes.size());
  for (NodeId v : nodes) out.push_back(scores[v]);
  return out;
}

inline std::uint64_t stream_for(std::uint64_t master, std::string_view label) { return derive_seed(master, fnv1a(label)); }

struct TailFit {
  evt::TailEstimate estimate;
  bool ok = false;
  std::string status = "ok";
};

inline TailFit fit_tail(std::span<const double> x, const EstimatorConfig& e, std::uint64_t seed) {
  TailFit f;
  f.estimate.n = x.size();
  if (x.size() < 100) {
    f.status = "insufficient_sample";
    return f;
  }
  evt::BootstrapOptions o;
  o.resamples = e.bootstrap_resamples;
  o.mode = e.k_selection;
  o.level = e.level;
  o.rng_seed = seed;
  o.grid_points = 40;
  try {
    f.estimate = e.k_selection == evt::KSelection::min_distance
                     ? evt::select_k_min_distance(x, {10, 200, e.bootstrap_resamples, e.level, seed})
                     : evt::select_k_bootstrap(x, o);
    f.ok = true;
  } catch (const Error& err) {
    f.status = std::string(errc_name(err.code()));
  }
  return f;
}

inline std::vector<NodeId> attached_nodes(const DirectedGraph& g) {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < g.node_count(); ++v)
    if (g.node(v).origin == Origin::attached) out.push_back(v);
  return out;
}

inline EvolutionLog pseudo_log(std::span<const NodeId> attached) {
  EvolutionLog log;
  for (NodeId v : attached) {
    StepRecord r;
    r.new_node = v;
    log.push_back(r);
  }
  return log;
}

/// Node lists per class index (1 .. nc + 1).
inline std::vector<std::vector<NodeId>> class_members(const std::vector<NodeClass>& cls, std::uint32_t nc) {
  std::vector<std::vector<NodeId>> m(nc + 2);
  for (const auto& c : cls) m[c.label.class_index].push_back(c.node);
  return m;
}

class Stage {
 public:
  Stage(ResultsBundle& b, std::string name) : b_(b), name_(std::move(name)) {}
  template <class Fn>
  bool run(Fn&& fn) {
    if (b_.failed_stage) return false;
    try {
      fn();
      b_.completed_stages.push_back(name_);
      return true;
    } catch (const Error& e) {
      b_.failed_stage = name_;
      b_.error_code = e.code();
      b_.error = e.what();
    }
    return false;
  }

 private:
  ResultsBundle& b_;
  std::string name_;
};

}  // namespace detail

/// seed -> communities -> stationarity and tail ranking -> evolve (with the
/// alpha-vs-edge-ratio curve at checkpoints) -> classify -> PR/MLM scores ->
/// tail and extremal estimates -> class predictions. A failing stage stops
/// the run; the bundle keeps everything finished before it and names the
/// stage in `failed_stage`.
inline ResultsBundle run_experiment(const ExperimentConfig& cfg) {
  ResultsBundle b;
  b.config = cfg;
  b.config_hash = config_hash(cfg);
  const auto& est = cfg.estimators;
  const std::uint64_t seed = cfg.rng_seed;

  detail::SeedGraph sg;
  DirectedGraph g;
  CommunityPartition part;
  std::vector<std::vector<NodeId>> members;  // by rank - 1
  std::uint32_t nc = 0;

  detail::Stage(b, "seed").run([&] {
    sg = detail::build_seed_graph(cfg);
    if (sg.graph.edge_count() == 0) throw Error(Errc::empty_graph, "seed graph has no edges");
    b.seed_nodes = sg.graph.node_count();
    b.seed_edges = sg.graph.edge_count();
    b.seed_original_ids = sg.original_ids;
  });

  detail::Stage(b, "communities").run([&] {
    if (!sg.labels.empty() && cfg.communities == 0) {
      part = partition_from_labels(sg.labels);
    } else {
      part = louvain_directed(sg.graph, derive_seed(seed, 10));
      if (cfg.communities > 0 && part.count > cfg.communities) merge_to_count(sg.graph, part, cfg.communities);
    }
    nc = part.count;
    b.community_count = nc;
  });

  // The max recursion starts from the seed PageRank scores, so those are the
  // personalization of seed nodes; attached nodes get 1 - c. With q = 1 - c
  // everywhere the MLM would be constant.
  ScoreVector seed_pr, seed_mlm;
  const auto seed_scores = [&] {
    seed_pr = pagerank(sg.graph, cfg.pagerank);
    b.pagerank_converged = b.pagerank_converged && seed_pr.converged;
    if (cfg.score_mlm) seed_mlm = max_linear(sg.graph, cfg.pagerank, seed_pr.values);
  };
  detail::Stage(b, "score_seed").run(seed_scores);

  const auto tail_row = [&](const std::string& entity, const std::string& phase, const std::string& score,
                            std::span<const double> x) {
    TailRow r;
    r.entity = entity;
    r.phase = phase;
    r.score = score;
    r.n = x.size();
    auto fit = detail::fit_tail(x, est, detail::stream_for(seed, entity + "/" + phase + "/" + score));
    r.estimate = fit.estimate;
    r.ok = fit.ok;
    r.status = fit.status;
    const auto st = stationarity_proxy(x);
    r.stationarity_evaluated = st.evaluated;
    r.stationary = st.pass;
    if (st.evaluated) {
      r.stationarity_r2 = st.curve.linear_fit.r2;
      const auto grid = default_mean_excess_grid();
      for (std::size_t i = 0; i < st.curve.thresholds.size(); ++i)
        b.mean_excess.push_back({entity, phase, score, grid[i], st.curve.thresholds[i], st.curve.values[i], st.curve.linear_fit.r2});
    }
    if (x.size() >= 2) try {
        for (const auto& [k, a] : evt::hill_curve(x, std::min(est.hill_curve_points, x.size() - 1)))
          b.hill_curves.push_back({entity, phase, score, k, a});
      } catch (const Error&) {
      }
    b.table1.push_back(r);
    return r;
  };

  detail::Stage(b, "rank").run([&] {
    const auto by_comm = part.members();
    std::vector<double> tail(nc, std::numeric_limits<double>::infinity());
    std::vector<evt::TailEstimate> pre(nc);
    for (std::uint32_t c = 0; c < nc; ++c) {
      const auto x = detail::gather(seed_pr.values, by_comm[c]);
      const auto fit = detail::fit_tail(x, est, detail::stream_for(seed, "rank/" + std::to_string(c)));
      if (fit.ok) tail[c] = fit.estimate.alpha_hat;
    }
    rank_by_tail(part, tail);
    b.seed_partition = part.assignment;
    b.community_rank = part.rank;
    members.assign(nc, {});
    for (std::uint32_t c = 0; c < nc; ++c) members[part.rank[c] - 1] = by_comm[c];
    for (std::uint32_t r = 1; r <= nc; ++r) {
      const auto x = detail::gather(seed_pr.values, members[r - 1]);
      const auto row = tail_row(community_entity(r), "pre", "pagerank", x);
      CurvePoint p;
      p.entity = community_entity(r);
      p.n = row.n;
      p.status = row.status;
      if (row.ok) {
        p.alpha_hat = row.estimate.alpha_hat;
        p.ci_lo = row.estimate.ci_lo;
        p.ci_hi = row.estimate.ci_hi;
        p.k = row.estimate.k_used;
      }
      b.alpha_curve.push_back(p);
      if (cfg.score_mlm) tail_row(community_entity(r), "pre", "mlm", detail::gather(seed_mlm.values, members[r - 1]));
    }
  });

  g = sg.graph;
  detail::Stage(b, "evolve").run([&] {
    std::vector<std::size_t> cps;
    const std::size_t steps = cfg.pa.steps;
    for (std::size_t i = 1; i <= cfg.checkpoints && steps > 0; ++i) {
      const auto s = static_cast<std::size_t>(std::llround(double(i) * double(steps) / double(cfg.checkpoints)));
      if (s >= 1 && (cps.empty() || s > cps.back())) cps.push_back(s);
    }
    std::size_t index = 0;
    const double e0 = static_cast<double>(b.seed_edges);
    const auto on_checkpoint = [&](std::size_t done, const DirectedGraph& cur) {
      ++index;
      const auto pr = pagerank(cur, cfg.pagerank);
      b.pagerank_converged = b.pagerank_converged && pr.converged;
      const auto point = [&](const std::string& entity, std::span<const double> x) {
        CurvePoint p;
        p.checkpoint = index;
        p.steps = done;
        p.edge_ratio = static_cast<double>(done) / e0;
        p.entity = entity;
        p.n = x.size();
        const auto fit =
            detail::fit_tail(x, est, detail::stream_for(seed, "curve/" + std::to_string(index) + "/" + entity));
        p.status = fit.status;
        if (fit.ok) {
          p.alpha_hat = fit.estimate.alpha_hat;
          p.ci_lo = fit.estimate.ci_lo;
          p.ci_hi = fit.estimate.ci_hi;
          p.k = fit.estimate.k_used;
        }
        b.alpha_curve.push_back(p);
      };
      for (std::uint32_t r = 1; r <= nc; ++r) point(community_entity(r), detail::gather(pr.values, members[r - 1]));
      const auto log = detail::pseudo_log(detail::attached_nodes(cur));
      for (auto dir : {Direction::in, Direction::out}) {
        const auto cm = detail::class_members(classify_new_nodes(cur, part, log, dir), nc);
        for (std::uint32_t k = 1; k <= nc + 1; ++k) point(class_entity(dir, k), detail::gather(pr.values, cm[k]));
      }
    };
    b.log = evolve(g, cfg.pa, derive_seed(seed, 11), cps, on_checkpoint);
    b.final_nodes = g.node_count();
    b.final_edges = g.edge_count();
  });

  detail::Stage(b, "classify").run([&] {
    b.in_classes = classify_new_nodes(g, part, b.log, Direction::in);
    b.out_classes = classify_new_nodes(g, part, b.log, Direction::out);
  });

  ScoreVector pr, mlm;
  detail::Stage(b, "score_final").run([&] {
    pr = pagerank(g, cfg.pagerank);
    b.pagerank_converged = b.pagerank_converged && pr.converged;
    if (cfg.score_mlm) {
      std::vector<double> q(g.node_count(), 1.0 - cfg.pagerank.c);
      std::copy(seed_pr.values.begin(), seed_pr.values.end(), q.begin());
      mlm = max_linear(g, cfg.pagerank, q);
    }
  });

  // Entities scored after evolution: old nodes of each community, then classes.
  std::vector<std::pair<std::string, std::vector<NodeId>>> entities;
  const auto theta_rows = [&](const std::string& entity, const std::string& score, std::span<const double> x,
                              std::span<const NodeId> nodes) {
    const auto push = [&](const std::string& estimator, const evt::ExtremalEstimate& e) {
      ThetaRow t;
      t.entity = entity;
      t.phase = "post";
      t.score = score;
      t.estimator = estimator;
      t.aggregation = evt::aggregation_name(e.aggregation);
      t.k_gap = e.k_gap;
      t.theta = e.theta_hat;
      t.threshold = e.threshold;
      t.fallback = e.fallback;
      b.table2.push_back(t);
    };
    const auto failed = [&](const std::string& estimator, const Error& err) {
      ThetaRow t;
      t.entity = entity;
      t.phase = "post";
      t.score = score;
      t.estimator = estimator;
      t.status = std::string(errc_name(err.code()));
      b.table2.push_back(t);
    };
    try {
      const auto r = evt::discrepancy_thresholds(x, evt::ThetaRule{evt::ThetaEstimator::intervals, 1, est.exclude_ones},
                                                 est.u_grid);
      push("intervals", r.theta1);
      push("intervals", r.theta2);
    } catch (const Error& err) {
      failed("intervals", err);
    }
    try {
      const auto k = evt::select_k_gap(x, est.u_grid, est.k_grid_max, est.exclude_ones);
      push("kgaps", k.result.theta1);
      push("kgaps", k.result.theta2);
    } catch (const Error& err) {
      failed("kgaps", err);
    }
    try {
      push("plateau", evt::plateau_theta(x, est.u_grid, {evt::ThetaEstimator::intervals, 1, est.exclude_ones}));
    } catch (const Error& err) {
      failed("plateau", err);
    }
    if (est.max_path_len > 0) try {
        const auto sub = induced_subgraph(g, nodes);
        const auto xs = detail::gather(score == "mlm" ? std::span<const double>(mlm.values) : pr.values, sub.mapping);
        evt::GraphGapOptions o;
        o.max_len = est.max_path_len;
        push("modified_intervals", evt::modified_intervals(sub.graph, xs, stats::quantile(xs, est.graph_u_level), o,
                                                           est.exclude_ones));
      } catch (const Error& err) {
        failed("modified_intervals", err);
      }
  };

  detail::Stage(b, "estimate").run([&] {
    for (std::uint32_t r = 1; r <= nc; ++r) entities.emplace_back(community_entity(r), members[r - 1]);
    for (auto dir : {Direction::in, Direction::out}) {
      const auto cm = detail::class_members(dir == Direction::in ? b.in_classes : b.out_classes, nc);
      for (std::uint32_t k = 1; k <= nc + 1; ++k) entities.emplace_back(class_entity(dir, k), cm[k]);
    }
    for (const auto& [name, nodes] : entities) {
      if (nodes.empty()) {
        // An empty class (e.g. no new nodes at all) still gets its row.
        for (const char* score : {"pagerank", "mlm"}) {
          if (std::string_view(score) == "mlm" && !cfg.score_mlm) continue;
          TailRow r;
          r.entity = name;
          r.phase = "post";
          r.score = score;
          r.status = "empty";
          b.table1.push_back(r);
        }
        continue;
      }
      const auto x = detail::gather(pr.values, nodes);
      tail_row(name, "post", "pagerank", x);
      theta_rows(name, "pagerank", x, nodes);
      if (cfg.score_mlm) {
        const auto y = detail::gather(mlm.values, nodes);
        tail_row(name, "post", "mlm", y);
        theta_rows(name, "mlm", y, nodes);
      }
    }
  });

  detail::Stage(b, "predict").run([&] {
    // Community indices from the post-evolution scores of their old nodes.
    std::vector<std::vector<double>> cols;
    std::vector<CommunityIndices> comm;
    for (std::uint32_t r = 1; r <= nc; ++r) {
      const auto* t = b.find_tail(community_entity(r), "post");
      CommunityIndices ci;
      ci.k_hat = ci.k_lo = ci.k_hi = std::numeric_limits<double>::infinity();
      if (t && t->ok) {
        ci.k_hat = t->estimate.alpha_hat;
        ci.k_lo = t->estimate.ci_lo;
        ci.k_hi = t->estimate.ci_hi;
      }
      ci.stationary = !t || !t->stationarity_evaluated || t->stationary;
      for (const auto& row : b.table2)
        if (row.entity == community_entity(r) && row.score == "pagerank" && row.estimator == "intervals" &&
            row.aggregation == "theta1" && row.status == "ok")
          ci.theta = row.theta;
      const auto x = detail::gather(pr.values, members[r - 1]);
      ci.sample_max = x.empty() ? 0.0 : *std::max_element(x.begin(), x.end());
      comm.push_back(ci);
      cols.push_back(x);
    }
    PredictOptions po;
    if (nc >= 2) po.dependence = dominance_diagnostics(cols, 0.95).ratios;
    for (auto dir : {Direction::in, Direction::out}) {
      const auto links = class_links(dir == Direction::in ? b.in_classes : b.out_classes, nc);
      for (std::uint32_t k = 1; k <= nc + 1; ++k) {
        json entry;
        if (links[k].empty()) {
          entry = {{"class", k}, {"error", std::string(errc_name(Errc::no_linked_community))}};
        } else {
          std::vector<std::uint32_t> idx;
          for (auto rank : links[k]) idx.push_back(rank - 1);
          const std::vector<std::vector<std::uint32_t>> one{idx};
          auto p = predict_indices(comm, one, po);
          entry = to_json(p.front());
          entry["class"] = k;
          for (auto& d : entry["dominating_set"]) d = d.get<std::uint32_t>() + 1;  // report ranks
          entry["linked_communities"] = links[k];
        }
        entry["direction"] = dir == Direction::in ? "in" : "out";
        if (const auto* t = b.find_tail(class_entity(dir, k), "post"); t && t->ok)
          entry["observed"] = {{"n", t->n}, {"alpha_hat", t->estimate.alpha_hat}, {"ci_lo", t->estimate.ci_lo},
                               {"ci_hi", t->estimate.ci_hi}};
        b.predictions.push_back(entry);
      }
    }
  });
  return b;
}

// ---------------------------------------------------------------------------
// Output.

namespace detail {

inline std::string num(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + p.string());
  return out;
}

}  // namespace detail

/// Writes every table of the bundle into `dir` (created if missing). Each
/// CSV row starts with the run's rng_seed and config hash.
inline void write_bundle(const ResultsBundle& b, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + dir.string() + ": " + ec.message());
  const std::string tag = std::to_string(b.config.rng_seed) + "," + b.config_hash + ",";
  using detail::num;

  {
    auto out = detail::open_out(dir / "table1.csv");
    out << "rng_seed,config_hash,entity,phase,score,n,alpha_hat,ci_lo,ci_hi,level,k,k_selection,stationarity_r2,"
           "stationary,status\n";
    for (const auto& r : b.table1) {
      const auto& e = r.estimate;
      out << tag << r.entity << ',' << r.phase << ',' << r.score << ',' << r.n << ',' << (r.ok ? num(e.alpha_hat) : "NA")
          << ',' << (r.ok ? num(e.ci_lo) : "NA") << ',' << (r.ok ? num(e.ci_hi) : "NA") << ',' << num(e.level) << ','
          << (r.ok ? std::to_string(e.k_used) : "NA") << ',' << evt::k_selection_name(e.k_selection) << ','
          << num(r.stationarity_r2) << ',' << (r.stationarity_evaluated ? (r.stationary ? "yes" : "no") : "NA") << ','
          << r.status << '\n';
    }
  }
  {
    auto out = detail::open_out(dir / "table2.csv");
    out << "rng_seed,config_hash,entity,phase,score,estimator,aggregation,k_gap,theta_hat,threshold,fallback,status\n";
    for (const auto& r : b.table2)
      out << tag << r.entity << ',' << r.phase << ',' << r.score << ',' << r.estimator << ',' << r.aggregation << ','
          << r.k_gap << ',' << num(r.theta) << ',' << num(r.threshold) << ',' << (r.fallback ? "yes" : "no") << ','
          << r.status << '\n';
  }
  {
    auto out = detail::open_out(dir / "curve_alpha_vs_edge_ratio.csv");
    out << "rng_seed,config_hash,checkpoint,steps,edge_ratio,entity,n,alpha_hat,ci_lo,ci_hi,k,status\n";
    for (const auto& p : b.alpha_curve)
      out << tag << p.checkpoint << ',' << p.steps << ',' << num(p.edge_ratio) << ',' << p.entity << ',' << p.n << ','
          << num(p.alpha_hat) << ',' << num(p.ci_lo) << ',' << num(p.ci_hi) << ',' << p.k << ',' << p.status << '\n';
  }
  {
    auto out = detail::open_out(dir / "curve_mean_excess.csv");
    out << "rng_seed,config_hash,entity,phase,score,level,u,mean_excess,r2\n";
    for (const auto& m : b.mean_excess)
      out << tag << m.entity << ',' << m.phase << ',' << m.score << ',' << num(m.level) << ',' << num(m.u) << ','
          << num(m.e) << ',' << num(m.r2) << '\n';
  }
  {
    auto out = detail::open_out(dir / "curve_hill.csv");
    out << "rng_seed,config_hash,entity,phase,score,k,alpha_hat\n";
    for (const auto& h : b.hill_curves)
      out << tag << h.entity << ',' << h.phase << ',' << h.score << ',' << h.k << ',' << num(h.alpha) << '\n';
  }
  {
    auto out = detail::open_out(dir / "classes.csv");
    out << "rng_seed,config_hash,node,direction,code,class\n";
    for (const auto* set : {&b.in_classes, &b.out_classes})
      for (const auto& c : *set)
        out << tag << c.node << ',' << (c.label.direction == Direction::in ? "in" : "out") << ',' << c.code.to_string()
            << ',' << c.label.class_index << '\n';
  }
  {
    auto out = detail::open_out(dir / "evolution_log.csv");
    out << "step,scheme,new_node,src,dst,rng_seed,config_hash\n";
    for (const auto& r : b.log) {
      out << r.step << ',' << scheme_name(r.scheme) << ',';
      if (r.new_node) out << *r.new_node;
      out << ',' << r.edge.src << ',' << r.edge.dst << ',' << b.config.rng_seed << ',' << b.config_hash << '\n';
    }
  }
  if (!b.seed_original_ids.empty()) {
    auto out = detail::open_out(dir / "seed_mapping.csv");
    out << "rng_seed,config_hash,node,original_id,community\n";
    for (std::size_t v = 0; v < b.seed_original_ids.size(); ++v)
      out << tag << v << ',' << b.seed_original_ids[v] << ','
          << (v < b.seed_partition.size() ? std::to_string(b.seed_partition[v]) : "NA") << '\n';
  }
  {
    json preds = {{"rng_seed", b.config.rng_seed}, {"config_hash", b.config_hash}, {"classes", b.predictions}};
    auto out = detail::open_out(dir / "predictions.json");
    out << preds.dump(2) << '\n';
  }
  {
    json m = {{"rng_seed", b.config.rng_seed},
              {"config_hash", b.config_hash},
              {"config", to_json(b.config)},
              {"completed_stages", b.completed_stages},
              {"partial", !b.ok()},
              {"pagerank_converged", b.pagerank_converged},
              {"seed_nodes", b.seed_nodes},
              {"seed_edges", b.seed_edges},
              {"final_nodes", b.final_nodes},
              {"final_edges", b.final_edges},
              {"new_nodes", new_node_count(b.log)},
              {"communities", b.community_count}};
    if (b.failed_stage) m["failed_stage"] = {{"stage", *b.failed_stage}, {"error", b.error}};
    auto out = detail::open_out(dir / "manifest.json");
    out << m.dump(2) << '\n';
  }
}

}  // namespace evonet
