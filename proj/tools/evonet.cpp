// evonet command line: every pipeline stage as a subcommand that reads and
// writes plain files, plus run-experiment for the whole chain.
//
// Exit codes: 0 success, 1 usage or bad config, 2 data error, 3 a PageRank
// iteration hit max_iter before reaching tol.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "evonet/experiment.hpp"

namespace {

using namespace evonet;

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNoConvergence = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Format { csv, json };

// ---------------------------------------------------------------------------
// File helpers.

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    out.push_back(f);
  }
  return out;
}

bool is_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

/// Reads one numeric column. `column` names a header field; empty means the
/// last column. A non-numeric first line is treated as the header.
std::vector<double> read_column(const std::string& path, const std::string& column = "") {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::vector<double> out;
  std::string line;
  std::optional<std::size_t> idx;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (first) {
      first = false;
      double v;
      if (!is_number(f.back(), v)) {
        if (!column.empty()) {
          for (std::size_t i = 0; i < f.size(); ++i)
            if (f[i] == column) idx = i;
          if (!idx) throw Error(Errc::parse_error, path + ": no column named " + column);
        }
        continue;
      }
      if (!column.empty()) throw Error(Errc::parse_error, path + ": --column needs a header line");
    }
    const std::size_t i = idx.value_or(f.size() - 1);
    double v;
    if (i >= f.size() || !is_number(f[i], v))
      throw Error(Errc::parse_error, path + ":" + std::to_string(lineno) + ": not a number");
    out.push_back(v);
  }
  return out;
}

/// node,community[,rank] with dense node ids 0..n-1.
CommunityPartition read_partition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::vector<std::uint32_t> labels;
  std::vector<std::uint32_t> rank_of;
  bool have_rank = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    double node, comm;
    if (f.size() < 2 || !is_number(f[0], node) || !is_number(f[1], comm)) {
      if (lineno == 1) continue;  // header
      throw Error(Errc::parse_error, path + ":" + std::to_string(lineno) + ": expected node,community[,rank]");
    }
    const auto v = static_cast<std::size_t>(node);
    if (v != labels.size()) throw Error(Errc::parse_error, path + ": node ids must be dense and in order");
    labels.push_back(static_cast<std::uint32_t>(comm));
    double r;
    if (f.size() >= 3 && is_number(f[2], r)) {
      have_rank = true;
      const auto c = static_cast<std::size_t>(comm);
      if (rank_of.size() <= c) rank_of.resize(c + 1, 0);
      rank_of[c] = static_cast<std::uint32_t>(r);
    }
  }
  auto p = partition_from_labels(std::move(labels));
  if (have_rank) {
    rank_of.resize(p.count, 0);
    p.rank = rank_of;
  }
  return p;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path);
  out << text;
}

std::string scores_text(const ScoreVector& s, Format f) {
  std::ostringstream o;
  if (f == Format::json) {
    json j = {{"kind", s.kind == ScoreKind::pagerank ? "pagerank" : "mlm"},
              {"converged", s.converged},
              {"iterations", s.iterations},
              {"values", s.values}};
    o << j.dump(2) << '\n';
    return o.str();
  }
  o << "node,score\n";
  for (std::size_t i = 0; i < s.values.size(); ++i) o << i << ',' << detail::num(s.values[i]) << '\n';
  return o.str();
}

json tail_json(const evt::TailEstimate& e) {
  return {{"alpha_hat", e.alpha_hat}, {"k", e.k_used},   {"n", e.n},
          {"ci_lo", e.ci_lo},         {"ci_hi", e.ci_hi}, {"level", e.level},
          {"k_selection", evt::k_selection_name(e.k_selection)}};
}

json extremal_json(const evt::ExtremalEstimate& e) {
  return {{"estimator", evt::estimator_name(e.estimator)},
          {"aggregation", evt::aggregation_name(e.aggregation)},
          {"theta_hat", e.theta_hat},
          {"threshold", e.threshold},
          {"k_gap", e.k_gap},
          {"fallback", e.fallback}};
}

std::string object_text(const json& j, Format f) {
  if (f == Format::json) return j.dump(2) + "\n";
  std::string head, row;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!head.empty()) {
      head += ',';
      row += ',';
    }
    head += it.key();
    row += it->is_string() ? it->get<std::string>() : it->dump();
  }
  return head + "\n" + row + "\n";
}

/// "q95" -> 0.95 quantile of x; otherwise a literal threshold.
double parse_threshold(const std::string& u, std::span<const double> x) {
  double v;
  if (u.size() > 1 && u[0] == 'q' && is_number(u.substr(1), v)) {
    const double level = v / std::pow(10.0, static_cast<double>(u.size() - 1));
    if (!(level > 0 && level < 1)) throw UsageError("--u quantile must lie in (0,1)");
    return stats::quantile(x, level);
  }
  if (!is_number(u, v)) throw UsageError("--u must be a number or qNN");
  return v;
}

PrParams pr_params(double c, const std::string& dangling, std::size_t max_iter, double tol) {
  PrParams p;
  p.c = c;
  p.tol = tol;
  p.max_iter = max_iter;
  p.dangling = detail::dangling_from(dangling);
  validate(p);
  return p;
}

/// Config problems of any kind are usage errors (exit 1), not data errors.
template <class Fn>
auto config_stage(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

DirectedGraph load_graph(const std::string& path) { return read_snap_file(path, IdMode::preserve).graph; }

std::filesystem::path out_dir(const std::string& dir) {
  std::filesystem::path p(dir.empty() ? "." : dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + p.string());
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evonet: tail and extremal indices of evolving networks"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string format_name = "csv";
  app.add_option("--format", format_name, "Output format")->check(CLI::IsMember({"csv", "json"}));
  int exit_code = 0;

  // generate-seed
  auto* gen = app.add_subcommand("generate-seed", "Build a TBT seed graph from a config");
  std::string gen_config, gen_out = ".";
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--config", gen_config, "Experiment config (seed_graph.tbt is used)")->required();
  gen->add_option("--seed", gen_seed, "Override rng_seed");
  gen->add_option("--out", gen_out, "Output directory");

  // ingest
  auto* ing = app.add_subcommand("ingest", "Read a SNAP edge list, optionally extracting a subgraph");
  std::string ing_input, ing_out = ".", ing_nodes;
  std::optional<std::uint64_t> ing_center;
  std::size_t ing_radius = 1;
  ing->add_option("--input", ing_input, "SNAP edge list")->required();
  ing->add_option("--induced", ing_nodes, "File with one original node id per line");
  ing->add_option("--bfs-ball", ing_center, "Original id of the ball centre");
  ing->add_option("--radius", ing_radius, "Ball radius");
  ing->add_option("--out", ing_out, "Output directory");

  // evolve
  auto* evo = app.add_subcommand("evolve", "Grow a graph by preferential attachment");
  std::string evo_graph, evo_config, evo_out = ".";
  std::uint64_t evo_seed = 1;
  PaParams evo_pa;
  evo->add_option("--graph", evo_graph, "Input graph (SNAP, dense ids)")->required();
  evo->add_option("--config", evo_config, "Experiment config; its pa block overrides the flags");
  evo->add_option("--seed", evo_seed, "rng seed");
  evo->add_option("--alpha", evo_pa.alpha);
  evo->add_option("--beta", evo_pa.beta);
  evo->add_option("--gamma", evo_pa.gamma);
  evo->add_option("--delta-in", evo_pa.delta_in);
  evo->add_option("--delta-out", evo_pa.delta_out);
  evo->add_option("--steps", evo_pa.steps);
  evo->add_option("--out", evo_out, "Output directory");

  // pagerank / mlm
  double pr_c = 0.85, pr_tol = 1e-10;
  std::size_t pr_iter = 1000;
  std::string pr_dangling = "literal";
  auto add_pr_flags = [&](CLI::App* s) {
    s->add_option("--c", pr_c, "Damping factor");
    s->add_option("--tol", pr_tol, "Sup-norm tolerance");
    s->add_option("--max-iter", pr_iter, "Iteration cap");
  };
  auto* prc = app.add_subcommand("pagerank", "Scale-free PageRank scores");
  std::string sc_graph, sc_out, mlm_q;
  prc->add_option("--graph", sc_graph, "Graph (SNAP)")->required();
  prc->add_option("--dangling", pr_dangling)->check(CLI::IsMember({"literal", "redistribute"}));
  prc->add_option("--out", sc_out, "Output file (default stdout)");
  add_pr_flags(prc);
  auto* mlmc = app.add_subcommand("mlm", "Max-linear model scores");
  mlmc->add_option("--graph", sc_graph, "Graph (SNAP)")->required();
  mlmc->add_option("--q", mlm_q, "Personalization CSV (default 1 - c everywhere)");
  mlmc->add_option("--out", sc_out, "Output file (default stdout)");
  add_pr_flags(mlmc);

  // communities
  auto* com = app.add_subcommand("communities", "Directed Louvain partition, ranked by score tails");
  std::string com_graph, com_scores, com_out;
  std::uint64_t com_seed = 1;
  std::uint32_t com_target = 0;
  com->add_option("--graph", com_graph, "Graph (SNAP)")->required();
  com->add_option("--scores", com_scores, "Scores used to rank communities by Hill estimate");
  com->add_option("--target", com_target, "Merge down to this many communities");
  com->add_option("--seed", com_seed, "rng seed");
  com->add_option("--out", com_out, "Output file (default stdout)");

  // classify
  auto* cls = app.add_subcommand("classify", "Classify attached nodes by their links to seed communities");
  std::string cls_graph, cls_comm, cls_log, cls_out, cls_dir = "both";
  cls->add_option("--graph", cls_graph, "Evolved graph (SNAP)")->required();
  cls->add_option("--communities", cls_comm, "node,community,rank CSV of the seed nodes")->required();
  cls->add_option("--log", cls_log, "Evolution log CSV")->required();
  cls->add_option("--direction", cls_dir)->check(CLI::IsMember({"in", "out", "both"}));
  cls->add_option("--out", cls_out, "Output file (default stdout)");

  // tail
  auto* tl = app.add_subcommand("tail", "Hill tail-index estimate with bootstrap CI");
  std::string tl_input, tl_column, tl_k = "auto", tl_out;
  std::size_t tl_resamples = 500;
  double tl_level = 0.975;
  std::uint64_t tl_seed = 1;
  tl->add_option("--input", tl_input, "CSV of values")->required();
  tl->add_option("--column", tl_column, "Column name (default last)");
  tl->add_option("--k", tl_k, "auto | double | min-distance | integer");
  tl->add_option("--resamples", tl_resamples);
  tl->add_option("--level", tl_level);
  tl->add_option("--seed", tl_seed);
  tl->add_option("--out", tl_out, "Output file (default stdout)");

  // extremal
  auto* ex = app.add_subcommand("extremal", "Extremal-index estimate");
  std::string ex_est = "intervals", ex_scores, ex_graph, ex_column, ex_u, ex_out;
  std::size_t ex_k = 1, ex_max_len = 10;
  bool ex_exclude = false;
  ex->add_option("--estimator", ex_est)
      ->check(CLI::IsMember({"intervals", "kgaps", "plateau", "modified-intervals"}));
  ex->add_option("--scores", ex_scores, "CSV of values")->required();
  ex->add_option("--column", ex_column, "Column name (default last)");
  ex->add_option("--graph", ex_graph, "Graph for modified-intervals (SNAP)");
  ex->add_option("--u", ex_u, "Threshold: number or qNN; omit for the discrepancy-selected threshold");
  ex->add_option("--K", ex_k, "K-gaps parameter");
  ex->add_option("--max-len", ex_max_len, "Path length cap for modified-intervals");
  ex->add_flag("--exclude-ones", ex_exclude, "Drop unit gaps");
  ex->add_option("--out", ex_out, "Output file (default stdout)");

  // predict
  auto* pre = app.add_subcommand("predict", "Predict class tail and extremal indices");
  std::string pre_comm, pre_cls, pre_out;
  pre->add_option("--communities", pre_comm, "JSON list of {k_hat,k_lo,k_hi,theta,stationary,sample_max}")->required();
  pre->add_option("--classes", pre_cls, "JSON list of linked community index lists")->required();
  pre->add_option("--out", pre_out, "Output file (default stdout)");

  // run-experiment
  auto* run = app.add_subcommand("run-experiment", "Run the full pipeline from a config");
  std::string run_config, run_out;
  std::optional<std::uint64_t> run_seed;
  run->add_option("--config", run_config, "Experiment config JSON")->required();
  run->add_option("--seed", run_seed, "Override rng_seed");
  run->add_option("--out", run_out, "Override the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  const Format fmt = format_name == "json" ? Format::json : Format::csv;

  try {
    if (*gen) {
      const auto cfg = config_stage([&] {
        std::ifstream in(gen_config);
        if (!in) throw Error(Errc::io_error, "cannot open " + gen_config);
        auto j = json::parse(in, nullptr, false);
        if (j.is_discarded()) throw Error(Errc::parse_error, gen_config + ": malformed JSON");
        if (gen_seed) j["rng_seed"] = *gen_seed;
        return config_from_json(j);
      });
      if (!cfg.tbt) throw UsageError("generate-seed needs seed_graph.tbt");
      const auto lg = build_seed(*cfg.tbt);
      const auto dir = out_dir(gen_out);
      write_snap_file((dir / "seed.snap").string(), lg.graph);
      std::ostringstream o;
      o << "node,community\n";
      for (std::size_t v = 0; v < lg.component.size(); ++v) o << v << ',' << lg.component[v] << '\n';
      write_text((dir / "components.csv").string(), o.str());
    } else if (*ing) {
      if (!ing_nodes.empty() && ing_center) throw UsageError("--induced and --bfs-ball are exclusive");
      ExperimentConfig cfg;
      SnapSource src;
      src.path = ing_input;
      if (!ing_nodes.empty()) {
        src.extraction = SnapSource::Extraction::induced;
        for (double v : read_column(ing_nodes)) src.nodes.push_back(static_cast<std::uint64_t>(v));
      } else if (ing_center) {
        src.extraction = SnapSource::Extraction::bfs_ball;
        src.center = *ing_center;
        src.radius = ing_radius;
      }
      cfg.snap = src;
      const auto sg = detail::build_seed_graph(cfg);
      const auto dir = out_dir(ing_out);
      write_snap_file((dir / "graph.snap").string(), sg.graph);
      std::ostringstream o;
      o << "node,original_id\n";
      for (std::size_t v = 0; v < sg.original_ids.size(); ++v) o << v << ',' << sg.original_ids[v] << '\n';
      write_text((dir / "mapping.csv").string(), o.str());
    } else if (*evo) {
      auto g = load_graph(evo_graph);
      PaParams p = evo_pa;
      if (!evo_config.empty()) p = config_stage([&] { return load_config(evo_config).pa; });
      config_stage([&] {
        validate(p);
        return 0;
      });
      const auto log = evolve(g, p, evo_seed);
      const auto dir = out_dir(evo_out);
      write_snap_file((dir / "graph.snap").string(), g);
      std::ofstream out(dir / "evolution_log.csv", std::ios::binary);
      if (!out) throw Error(Errc::io_error, "cannot write evolution_log.csv");
      write_log_csv(out, log);
    } else if (*prc || *mlmc) {
      const auto g = load_graph(sc_graph);
      const auto p = config_stage([&] { return pr_params(pr_c, pr_dangling, pr_iter, pr_tol); });
      ScoreVector s;
      if (*prc) {
        s = pagerank(g, p);
      } else if (mlm_q.empty()) {
        s = max_linear(g, p);
      } else {
        const auto q = read_column(mlm_q);
        s = max_linear(g, p, q);
      }
      write_text(sc_out, scores_text(s, fmt));
      if (!s.converged) {
        std::cerr << "evonet: iteration did not converge within " << p.max_iter << " steps\n";
        exit_code = kNoConvergence;
      }
    } else if (*com) {
      const auto g = load_graph(com_graph);
      auto part = louvain_directed(g, derive_seed(com_seed, 10));
      if (com_target > 0 && part.count > com_target) merge_to_count(g, part, com_target);
      std::vector<double> tail(part.count, std::numeric_limits<double>::infinity());
      if (!com_scores.empty()) {
        const auto x = read_column(com_scores);
        if (x.size() != g.node_count()) throw Error(Errc::length_mismatch, "one score per node required");
        const auto members = part.members();
        EstimatorConfig e;
        for (std::uint32_t c = 0; c < part.count; ++c) {
          const auto f = detail::fit_tail(detail::gather(x, members[c]), e,
                                          detail::stream_for(com_seed, "rank/" + std::to_string(c)));
          if (f.ok) tail[c] = f.estimate.alpha_hat;
        }
      } else {
        // Without scores the ranking follows community index.
        for (std::uint32_t c = 0; c < part.count; ++c) tail[c] = c;
      }
      rank_by_tail(part, tail);
      std::ostringstream o;
      if (fmt == Format::json) {
        o << json({{"assignment", part.assignment}, {"rank", part.rank}, {"modularity", part.modularity}}).dump(2)
          << '\n';
      } else {
        o << "node,community,rank\n";
        for (std::size_t v = 0; v < part.assignment.size(); ++v)
          o << v << ',' << part.assignment[v] << ',' << part.rank[part.assignment[v]] << '\n';
      }
      write_text(com_out, o.str());
    } else if (*cls) {
      const auto g = load_graph(cls_graph);
      const auto part = read_partition(cls_comm);
      if (part.rank.size() != part.count) throw Error(Errc::parse_error, cls_comm + ": rank column missing");
      std::ifstream lin(cls_log);
      if (!lin) throw Error(Errc::io_error, "cannot open " + cls_log);
      const auto log = read_log_csv(lin);
      std::vector<NodeClass> all;
      for (auto d : {Direction::in, Direction::out}) {
        if ((cls_dir == "in" && d == Direction::out) || (cls_dir == "out" && d == Direction::in)) continue;
        const auto c = classify_new_nodes(g, part, log, d);
        all.insert(all.end(), c.begin(), c.end());
      }
      std::ostringstream o;
      if (fmt == Format::json) {
        json arr = json::array();
        for (const auto& c : all)
          arr.push_back({{"node", c.node},
                         {"direction", c.label.direction == Direction::in ? "in" : "out"},
                         {"code", c.code.to_string()},
                         {"class", c.label.class_index}});
        o << arr.dump(2) << '\n';
      } else {
        o << "node,direction,code,class\n";
        for (const auto& c : all)
          o << c.node << ',' << (c.label.direction == Direction::in ? "in" : "out") << ',' << c.code.to_string() << ','
            << c.label.class_index << '\n';
      }
      write_text(cls_out, o.str());
    } else if (*tl) {
      const auto x = read_column(tl_input, tl_column);
      evt::TailEstimate e;
      if (tl_k == "auto" || tl_k == "double") {
        evt::BootstrapOptions o;
        o.resamples = tl_resamples;
        o.level = tl_level;
        o.rng_seed = tl_seed;
        o.mode = tl_k == "auto" ? evt::KSelection::bootstrap : evt::KSelection::double_bootstrap;
        e = evt::select_k_bootstrap(x, o);
      } else if (tl_k == "min-distance") {
        e = evt::select_k_min_distance(x, {10, 200, tl_resamples, tl_level, tl_seed});
      } else {
        double k;
        if (!is_number(tl_k, k) || k < 1) throw UsageError("--k must be auto, double, min-distance or a positive integer");
        e = evt::hill_fixed(x, static_cast<std::size_t>(k), tl_resamples, tl_level, tl_seed);
      }
      write_text(tl_out, object_text(tail_json(e), fmt));
    } else if (*ex) {
      const auto x = read_column(ex_scores, ex_column);
      evt::ExtremalEstimate e;
      if (ex_est == "modified-intervals") {
        if (ex_graph.empty()) throw UsageError("modified-intervals needs --graph");
        const auto g = load_graph(ex_graph);
        if (x.size() != g.node_count()) throw Error(Errc::length_mismatch, "one score per node required");
        evt::GraphGapOptions o;
        o.max_len = ex_max_len;
        e = evt::modified_intervals(g, x, parse_threshold(ex_u.empty() ? "q95" : ex_u, x), o, ex_exclude);
      } else if (ex_est == "plateau") {
        e = evt::plateau_theta(x, evt::default_threshold_grid(), {evt::ThetaEstimator::intervals, 1, ex_exclude});
      } else {
        const auto kind = ex_est == "kgaps" ? evt::ThetaEstimator::kgaps : evt::ThetaEstimator::intervals;
        const evt::ThetaRule rule{kind, ex_k, ex_exclude};
        if (ex_u.empty()) {
          e = evt::discrepancy_thresholds(x, rule, evt::default_threshold_grid()).theta1;
        } else {
          const double u = parse_threshold(ex_u, x);
          e.estimator = kind;
          e.threshold = u;
          e.k_gap = kind == evt::ThetaEstimator::kgaps ? ex_k : 0;
          e.theta_hat = evt::theta_at(evt::inter_exceedances(x, u), rule);
        }
      }
      write_text(ex_out, object_text(extremal_json(e), fmt));
    } else if (*pre) {
      const auto read_json = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(Errc::io_error, "cannot open " + path);
        try {
          return json::parse(in);
        } catch (const json::parse_error& e) {
          throw Error(Errc::parse_error, path + ": " + e.what());
        }
      };
      const auto cj = read_json(pre_comm);
      const auto& list = cj.is_object() ? cj.at("communities") : cj;
      std::vector<CommunityIndices> comm;
      try {
        for (const auto& c : list) {
          CommunityIndices ci;
          ci.k_hat = c.at("k_hat").get<double>();
          ci.k_lo = c.value("k_lo", ci.k_hat);
          ci.k_hi = c.value("k_hi", ci.k_hat);
          if (c.contains("theta") && !c["theta"].is_null()) ci.theta = c["theta"].get<double>();
          ci.stationary = c.value("stationary", true);
          ci.sample_max = c.value("sample_max", 0.0);
          comm.push_back(ci);
        }
        PredictOptions po;
        if (cj.is_object() && cj.contains("dependence"))
          po.dependence = cj["dependence"].get<std::vector<std::vector<double>>>();
        const auto classes = read_json(pre_cls).get<std::vector<std::vector<std::uint32_t>>>();
        for (const auto& c : classes)
          for (auto i : c)
            if (i >= comm.size()) throw Error(Errc::invalid_params, "class links unknown community " + std::to_string(i));
        json out = json::array();
        for (const auto& p : predict_indices(comm, classes, po)) out.push_back(to_json(p));
        write_text(pre_out, out.dump(2) + "\n");
      } catch (const json::exception& e) {
        throw Error(Errc::parse_error, std::string("predict input: ") + e.what());
      }
    } else if (*run) {
      const auto cfg = config_stage([&] {
        std::ifstream in(run_config);
        if (!in) throw Error(Errc::io_error, "cannot open " + run_config);
        auto j = json::parse(in, nullptr, false);
        if (j.is_discarded()) throw Error(Errc::parse_error, run_config + ": malformed JSON");
        if (run_seed) j["rng_seed"] = *run_seed;
        if (!run_out.empty()) j["outputs"] = run_out;
        return config_from_json(j);
      });
      const auto b = run_experiment(cfg);
      write_bundle(b, cfg.output_dir);
      if (!b.ok()) {
        std::cerr << "evonet: stage " << *b.failed_stage << " failed: " << b.error << " (partial outputs in "
                  << cfg.output_dir << ")\n";
        return kData;
      }
      if (!b.pagerank_converged) {
        std::cerr << "evonet: a PageRank iteration did not converge\n";
        exit_code = kNoConvergence;
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "evonet: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "evonet: " << e.what() << '\n';
    return kData;
  }
  return exit_code;
}
