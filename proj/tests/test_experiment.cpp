#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "evonet/experiment.hpp"

using namespace evonet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("evonet_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

json small_config(std::uint64_t seed = 5) {
  auto j = json::parse(R"({
    "seed_graph": {"tbt": {"components": [
      {"n": 300, "iota_in": 3.8, "iota_out": 2.0},
      {"n": 300, "iota_in": 2.5, "iota_out": 2.5},
      {"n": 300, "iota_in": 3.0, "iota_out": 4.5}], "cross_edges": 40}},
    "pa": {"alpha": 0.4, "beta": 0.2, "gamma": 0.4, "delta_in": 1, "delta_out": 1, "steps": 2500},
    "estimators": {"bootstrap_resamples": 100, "max_path_len": 4},
    "checkpoints": 4
  })");
  j["rng_seed"] = seed;
  return j;
}

// Two 40-node rings joined by a few edges, as a SNAP file with sparse ids.
fs::path two_ring_snap(const fs::path& dir) {
  const auto p = dir / "rings.snap";
  std::ofstream out(p);
  out << "# two rings\n";
  for (int r = 0; r < 2; ++r)
    for (int i = 0; i < 40; ++i) {
      const int a = 1000 * (r + 1) + i, b = 1000 * (r + 1) + (i + 1) % 40, c = 1000 * (r + 1) + (i + 7) % 40;
      out << a << '\t' << b << '\n' << a << '\t' << c << '\n';
    }
  out << "1000\t2000\n2005\t1005\n1010\t1010\n";
  return p;
}

}  // namespace

TEST(Config, DefaultsAndValidation) {
  const auto c = config_from_json(small_config());
  EXPECT_EQ(c.rng_seed, 5u);
  ASSERT_TRUE(c.tbt);
  EXPECT_EQ(c.tbt->components.size(), 3u);
  EXPECT_EQ(c.tbt->components[1].rng_seed, derive_seed(5, 201));
  EXPECT_DOUBLE_EQ(c.pagerank.c, 0.85);
  EXPECT_EQ(c.estimators.u_grid.size(), 20u);
  EXPECT_EQ(c.checkpoints, 4u);

  auto bad = small_config();
  bad["pa"]["beta"] = 0.3;
  EXPECT_THROW(config_from_json(bad), Error);
  auto both = small_config();
  both["seed_graph"]["snap"] = {{"path", "x.snap"}};
  EXPECT_THROW(config_from_json(both), Error);
  auto none = small_config();
  none.erase("seed_graph");
  EXPECT_THROW(config_from_json(none), Error);
  auto typo = small_config();
  typo["pagerank"] = {{"dangling", "sometimes"}};
  EXPECT_THROW(config_from_json(typo), Error);
  auto snap_no_target = json{{"seed_graph", {{"snap", {{"path", "x.snap"}}}}}, {"pa", {{"steps", 10}}}};
  EXPECT_THROW(config_from_json(snap_no_target), Error);
  auto no_pa = small_config();
  no_pa.erase("pa");
  EXPECT_THROW(config_from_json(no_pa), Error);
}

TEST(Config, HashIsCanonical) {
  const auto a = config_from_json(small_config(5));
  // Round trip through the canonical form keeps the hash.
  EXPECT_EQ(config_hash(config_from_json(to_json(a))), config_hash(a));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_NE(config_hash(config_from_json(small_config(6))), config_hash(a));
  auto j = small_config(5);
  j["estimators"]["u_grid"] = evt::default_threshold_grid();
  EXPECT_EQ(config_hash(config_from_json(j)), config_hash(a));
}

TEST(Experiment, Table1Structure) {
  const auto b = run_experiment(config_from_json(small_config()));
  ASSERT_TRUE(b.ok()) << *b.failed_stage << ": " << b.error;
  EXPECT_EQ(b.completed_stages,
            (std::vector<std::string>{"seed", "communities", "score_seed", "rank", "evolve", "classify", "score_final",
                                      "estimate", "predict"}));
  EXPECT_EQ(b.community_count, 3u);
  EXPECT_EQ(b.seed_nodes, 900u);
  EXPECT_EQ(b.final_edges, b.seed_edges + 2500);
  for (std::uint32_t r = 1; r <= 3; ++r) {
    EXPECT_NE(b.find_tail(community_entity(r), "pre"), nullptr);
    EXPECT_NE(b.find_tail(community_entity(r), "post"), nullptr);
  }
  // Four in-degree and four out-degree classes; class sizes add up to N_0.
  for (auto dir : {Direction::in, Direction::out}) {
    std::size_t total = 0;
    for (std::uint32_t k = 1; k <= 4; ++k) {
      const auto* t = b.find_tail(class_entity(dir, k), "post");
      ASSERT_NE(t, nullptr) << class_entity(dir, k);
      total += t->n;
    }
    EXPECT_EQ(total, new_node_count(b.log));
    EXPECT_EQ(b.find_tail(class_entity(dir, 5), "post"), nullptr);
  }
  EXPECT_EQ(b.in_classes.size(), new_node_count(b.log));
  EXPECT_EQ(b.predictions.size(), 8u);
  // The community ranking is ascending in the pre-evolution tail estimate.
  EXPECT_LE(b.find_tail(community_entity(1), "pre")->estimate.alpha_hat,
            b.find_tail(community_entity(2), "pre")->estimate.alpha_hat);
  EXPECT_LE(b.find_tail(community_entity(2), "pre")->estimate.alpha_hat,
            b.find_tail(community_entity(3), "pre")->estimate.alpha_hat);
  bool graph_rows = false;
  for (const auto& r : b.table2) graph_rows |= r.estimator == "modified_intervals";
  EXPECT_TRUE(graph_rows);
}

TEST(Experiment, CheckpointCurve) {
  const auto b = run_experiment(config_from_json(small_config()));
  ASSERT_TRUE(b.ok());
  std::vector<double> ratios;
  for (const auto& p : b.alpha_curve)
    if (p.entity == community_entity(1)) ratios.push_back(p.edge_ratio);
  ASSERT_EQ(ratios.size(), 5u);  // checkpoint 0 plus four during evolution
  EXPECT_DOUBLE_EQ(ratios.front(), 0.0);
  EXPECT_DOUBLE_EQ(ratios.back(), 2500.0 / static_cast<double>(b.seed_edges));
  EXPECT_TRUE(std::is_sorted(ratios.begin(), ratios.end()));
}

TEST(Experiment, PureBetaHasNoNewNodes) {
  auto j = small_config();
  j["pa"] = {{"alpha", 0.0}, {"beta", 1.0}, {"gamma", 0.0}, {"steps", 300}};
  const auto b = run_experiment(config_from_json(j));
  ASSERT_TRUE(b.ok()) << b.error;
  EXPECT_EQ(new_node_count(b.log), 0u);
  EXPECT_TRUE(b.in_classes.empty());
  EXPECT_TRUE(b.out_classes.empty());
  EXPECT_EQ(b.final_nodes, b.seed_nodes);
  const auto dir = scratch("pure_beta");
  write_bundle(b, dir);
  EXPECT_EQ(lines(dir / "classes.csv").size(), 1u);  // header only
}

TEST(Experiment, DeterministicBytes) {
  const auto cfg = config_from_json(small_config(9));
  const auto d1 = scratch("det1"), d2 = scratch("det2");
  write_bundle(run_experiment(cfg), d1);
  write_bundle(run_experiment(cfg), d2);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(d1)) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(d2 / e.path().filename())) << e.path().filename();
  }
  EXPECT_GE(files, 9u);
}

TEST(Experiment, EveryRowCarriesSeedAndHash) {
  const auto cfg = config_from_json(small_config(11));
  const auto b = run_experiment(cfg);
  const auto dir = scratch("tags");
  write_bundle(b, dir);
  const std::string tag = "11," + config_hash(cfg) + ",";
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") {
      const auto ls = lines(e.path());
      ASSERT_GE(ls.size(), 1u);
      const bool log = e.path().filename() == "evolution_log.csv";
      for (std::size_t i = 1; i < ls.size(); ++i) {
        if (log) {
          EXPECT_TRUE(ls[i].ends_with(",11," + config_hash(cfg))) << ls[i];
        } else {
          EXPECT_TRUE(ls[i].starts_with(tag)) << e.path().filename() << ": " << ls[i];
        }
      }
    } else {
      const auto j = json::parse(slurp(e.path()));
      EXPECT_EQ(j["config_hash"], config_hash(cfg));
      EXPECT_EQ(j["rng_seed"], 11);
    }
  }
  // The log written with extra columns still reads back.
  std::ifstream in(dir / "evolution_log.csv");
  EXPECT_EQ(read_log_csv(in).size(), b.log.size());
}

TEST(Experiment, StageErrorKeepsPartialOutputs) {
  auto j = json{{"seed_graph", {{"snap", {{"path", "/nonexistent/graph.snap"}}}}},
                {"communities", 2},
                {"pa", {{"steps", 10}}}};
  const auto b = run_experiment(config_from_json(j));
  EXPECT_FALSE(b.ok());
  EXPECT_EQ(*b.failed_stage, "seed");
  EXPECT_EQ(*b.error_code, Errc::io_error);
  EXPECT_TRUE(b.completed_stages.empty());
  const auto dir = scratch("partial");
  write_bundle(b, dir);
  const auto m = json::parse(slurp(dir / "manifest.json"));
  EXPECT_TRUE(m["partial"].get<bool>());
  EXPECT_EQ(m["failed_stage"]["stage"], "seed");

}

TEST(Experiment, FailedStageStopsLaterStages) {
  ResultsBundle b;
  int later = 0;
  EXPECT_TRUE(detail::Stage(b, "one").run([] {}));
  EXPECT_FALSE(detail::Stage(b, "two").run([] { throw Error(Errc::empty_gap_set, "boom"); }));
  EXPECT_FALSE(detail::Stage(b, "three").run([&] { ++later; }));
  EXPECT_EQ(later, 0);
  EXPECT_EQ(b.completed_stages, std::vector<std::string>{"one"});
  EXPECT_EQ(*b.failed_stage, "two");
  EXPECT_EQ(*b.error_code, Errc::empty_gap_set);
}

TEST(Experiment, SnapSeedWithExtraction) {
  const auto dir = scratch("snap");
  const auto path = two_ring_snap(dir);
  auto j = json{{"rng_seed", 3},
                {"seed_graph", {{"snap", {{"path", path.string()}}}}},
                {"communities", 2},
                {"pa", {{"steps", 400}}},
                {"estimators", {{"bootstrap_resamples", 100}, {"max_path_len", 3}}},
                {"checkpoints", 2}};
  const auto whole = run_experiment(config_from_json(j));
  ASSERT_TRUE(whole.ok()) << whole.error;
  EXPECT_EQ(whole.seed_nodes, 80u);
  EXPECT_EQ(whole.community_count, 2u);
  // The rings are recovered as the two communities.
  for (std::size_t v = 0; v < 80; ++v) {
    const auto ring = whole.seed_original_ids[v] / 1000;
    for (std::size_t w = 0; w < 80; ++w)
      if (whole.seed_original_ids[w] / 1000 == ring) {
        EXPECT_EQ(whole.seed_partition[v], whole.seed_partition[w]);
      }
  }
  write_bundle(whole, dir / "out");
  EXPECT_EQ(lines(dir / "out" / "seed_mapping.csv").size(), 81u);

  j["seed_graph"]["snap"]["extraction"] = "bfs-ball";
  j["seed_graph"]["snap"]["center"] = 1000;
  j["seed_graph"]["snap"]["radius"] = 1;
  const auto ball = run_experiment(config_from_json(j));
  ASSERT_TRUE(ball.ok()) << ball.error;
  EXPECT_EQ(ball.seed_nodes, 6u);  // 1000, its out-neighbours 1001, 1007, 2000 and in-neighbours 1039, 1033
  EXPECT_EQ(ball.seed_original_ids.front(), 1000u);

  j["seed_graph"]["snap"]["extraction"] = "induced";
  j["seed_graph"]["snap"]["nodes"] = {1000, 1001, 1002, 99};
  const auto bad = run_experiment(config_from_json(j));
  EXPECT_EQ(*bad.failed_stage, "seed");
  EXPECT_EQ(*bad.error_code, Errc::unknown_node);
}

// ---------------------------------------------------------------------------
// Command line.

#ifdef EVONET_CLI_PATH
namespace {

int cli(const std::string& args, const fs::path& out = {}) {
  std::string cmd = std::string(EVONET_CLI_PATH) + " " + args;
  cmd += out.empty() ? " > /dev/null 2>&1" : " > " + out.string() + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Cli, RunExperimentAndExitCodes) {
  const auto dir = scratch("cli_run");
  auto j = small_config(2);
  j["pa"]["steps"] = 800;
  j["estimators"]["max_path_len"] = 0;
  { std::ofstream(dir / "cfg.json") << j.dump(); }
  EXPECT_EQ(cli("run-experiment --config " + (dir / "cfg.json").string() + " --out " + (dir / "res").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "res" / "table1.csv"));
  EXPECT_TRUE(fs::exists(dir / "res" / "predictions.json"));
  EXPECT_EQ(json::parse(slurp(dir / "res" / "manifest.json"))["rng_seed"], 2);
  EXPECT_EQ(cli("run-experiment --config " + (dir / "cfg.json").string() + " --seed 8 --out " +
                (dir / "res8").string()),
            0);
  EXPECT_EQ(json::parse(slurp(dir / "res8" / "manifest.json"))["rng_seed"], 8);

  { std::ofstream(dir / "bad.json") << R"({"seed_graph": {}})"; }
  EXPECT_EQ(cli("run-experiment --config " + (dir / "bad.json").string()), 1);
  EXPECT_EQ(cli("run-experiment"), 1);
  EXPECT_EQ(cli("no-such-command"), 1);
  EXPECT_EQ(cli("tail --input " + (dir / "missing.csv").string()), 2);
}

TEST(Cli, ComposableStages) {
  const auto dir = scratch("cli_stages");
  auto j = small_config(4);
  j["pa"]["steps"] = 600;
  { std::ofstream(dir / "cfg.json") << j.dump(); }
  const auto d = dir.string();
  ASSERT_EQ(cli("generate-seed --config " + d + "/cfg.json --out " + d + "/seed"), 0);
  ASSERT_EQ(cli("evolve --graph " + d + "/seed/seed.snap --config " + d + "/cfg.json --out " + d + "/evo"), 0);
  ASSERT_EQ(cli("pagerank --graph " + d + "/seed/seed.snap --out " + d + "/pr0.csv"), 0);
  ASSERT_EQ(cli("communities --graph " + d + "/seed/seed.snap --scores " + d + "/pr0.csv --target 3 --out " + d +
                "/comm.csv"),
            0);
  ASSERT_EQ(cli("classify --graph " + d + "/evo/graph.snap --communities " + d + "/comm.csv --log " + d +
                "/evo/evolution_log.csv --out " + d + "/classes.csv"),
            0);
  const auto cls = lines(dir / "classes.csv");
  std::ifstream lin(dir / "evo" / "evolution_log.csv");
  EXPECT_EQ(cls.size(), 1 + 2 * new_node_count(read_log_csv(lin)));

  ASSERT_EQ(cli("pagerank --graph " + d + "/evo/graph.snap --out " + d + "/pr.csv"), 0);
  ASSERT_EQ(cli("tail --input " + d + "/pr.csv --k auto --format json", dir / "tail.json"), 0);
  const auto t = json::parse(slurp(dir / "tail.json"));
  EXPECT_GT(t["alpha_hat"].get<double>(), 0.0);
  EXPECT_EQ(t["k_selection"], "bootstrap");

  ASSERT_EQ(cli("extremal --estimator modified-intervals --graph " + d + "/evo/graph.snap --scores " + d +
                    "/pr.csv --u q95 --max-len 3 --format json",
                dir / "theta.json"),
            0);
  const auto th = json::parse(slurp(dir / "theta.json"));
  EXPECT_GE(th["theta_hat"].get<double>(), 0.0);
  EXPECT_LE(th["theta_hat"].get<double>(), 1.0);
  EXPECT_EQ(th["estimator"], "modified_intervals");

  ASSERT_EQ(cli("mlm --graph " + d + "/evo/graph.snap --q " + d + "/pr.csv", dir / "mlm.csv"), 0);
  EXPECT_EQ(lines(dir / "mlm.csv").size(), lines(dir / "pr.csv").size());
  EXPECT_EQ(cli("pagerank --graph " + d + "/evo/graph.snap --max-iter 1"), 3);
}

TEST(Cli, PredictWrapper) {
  const auto dir = scratch("cli_predict");
  {
    std::ofstream(dir / "comm.json") << R"({"communities": [
      {"k_hat": 1.0, "theta": 0.5, "sample_max": 100},
      {"k_hat": 1.0, "theta": 0.9, "sample_max": 50},
      {"k_hat": 3.0, "theta": 0.8, "sample_max": 10}],
      "dependence": [[1, 0.01, 0.02], [0.01, 1, 0.0], [0.02, 0.0, 1]]})";
    std::ofstream(dir / "cls.json") << "[[0, 1, 2], [2]]";
  }
  const auto d = dir.string();
  ASSERT_EQ(cli("predict --communities " + d + "/comm.json --classes " + d + "/cls.json", dir / "p.json"), 0);
  const auto p = json::parse(slurp(dir / "p.json"));
  ASSERT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ(p[0]["k_pred"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(p[0]["theta_pred"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(p[1]["theta_pred"].get<double>(), 0.8);
  { std::ofstream(dir / "bad.json") << "[[7]]"; }
  EXPECT_EQ(cli("predict --communities " + d + "/comm.json --classes " + d + "/bad.json"), 2);
}
#endif
