#include <gtest/gtest.h>

#include <deque>
#include <numeric>

#include "evonet/evt/tail.hpp"
#include "evonet/generators.hpp"
#include "evonet/stats.hpp"

using namespace evonet;

namespace {

std::uint64_t sum(const std::vector<std::uint64_t>& v) { return std::accumulate(v.begin(), v.end(), std::uint64_t{0}); }

bool weakly_connected(const DirectedGraph& g) {
  const auto adj = undirected_simple(g);
  std::vector<char> seen(g.node_count(), 0);
  std::deque<NodeId> q{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    const auto v = q.front();
    q.pop_front();
    for (auto w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        q.push_back(w);
      }
  }
  return count == g.node_count();
}

}  // namespace

TEST(DiscretePareto, SurvivalMatchesPowerLaw) {
  Rng rng(3);
  const int n = 200000;
  int gt2 = 0, gt4 = 0;
  for (int i = 0; i < n; ++i) {
    const auto d = discrete_pareto(rng, 2.0);
    ASSERT_GE(d, 1u);
    gt2 += d > 2;
    gt4 += d > 4;
  }
  // P(D > k) = k^{-2}
  EXPECT_NEAR(gt2 / double(n), 0.25, 0.005);
  EXPECT_NEAR(gt4 / double(n), 0.0625, 0.003);
}

TEST(SampleBidegree, LightTailsOnTwoNodes) {
  const auto s = sample_bidegree({2, 60.0, 60.0, 4});
  // Both sides sit at the smallest practical degree, 2.
  EXPECT_EQ(s.in, (std::vector<std::uint64_t>{2, 2}));
  EXPECT_EQ(s.out, (std::vector<std::uint64_t>{2, 2}));
}

TEST(SampleBidegree, SumsMatchForManySpecs) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto s = sample_bidegree({50 + seed * 7, 1.2 + 0.05 * double(seed), 3.5, seed});
    EXPECT_EQ(sum(s.in), sum(s.out));
  }
}

TEST(SampleBidegree, DeterministicInSeed) {
  const BiDegreeSpec spec{300, 2.1, 2.7, 77};
  const auto a = sample_bidegree(spec), b = sample_bidegree(spec);
  EXPECT_EQ(a.in, b.in);
  EXPECT_EQ(a.out, b.out);
}

TEST(SampleBidegree, RejectsDegenerateSpec) {
  EXPECT_THROW(sample_bidegree({1, 2.0, 2.0, 1}), Error);
  EXPECT_THROW(sample_bidegree({10, 0.9, 2.0, 1}), Error);
}

TEST(SampleBidegree, OutDegreeTailNearTarget) {
  std::vector<double> est;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto s = sample_bidegree({800, 3.8, 2.0, seed});
    std::vector<double> x(s.out.begin(), s.out.end());
    evt::BootstrapOptions opt;
    opt.rng_seed = seed;
    est.push_back(evt::select_k_bootstrap(x, opt).alpha_hat);
  }
  const double med = stats::median(est);
  EXPECT_GE(med, 1.6);
  EXPECT_LE(med, 2.6);
}

TEST(BuildTbt, TwoNodeHandOracle) {
  // Node 1 attaches to root 0 (edge 1->0). The only leftover stubs are out
  // of node 0 and into node 1, which must pair as 0->1.
  const auto g = build_tbt({{1, 1}, {1, 1}}, 5);
  ASSERT_EQ(g.edge_count(), 2u);
  EXPECT_EQ(g.edges()[0], (Edge{1, 0}));
  EXPECT_EQ(g.edges()[1], (Edge{0, 1}));
}

TEST(BuildTbt, SkeletonSpansAndDegreesPreserved) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const BiDegreeSpec spec{800, 2.5, 2.0, seed};
    const auto seq = sample_bidegree(spec);
    const auto g = build_tbt(seq, derive_seed(seed, 1));
    EXPECT_TRUE(weakly_connected(g));
    EXPECT_EQ(g.edge_count(), sum(seq.in));
    for (NodeId v = 0; v < g.node_count(); ++v) {
      EXPECT_EQ(g.in_degree(v), seq.in[v]);
      EXPECT_EQ(g.out_degree(v), seq.out[v]);
    }
    // Every non-root node has its parent edge among the first n-1 edges.
    std::vector<char> has_parent(g.node_count(), 0);
    for (std::size_t i = 0; i + 1 < g.node_count(); ++i) {
      const auto e = g.edges()[i];
      EXPECT_LT(e.dst, e.src);
      has_parent[e.src] = 1;
    }
    for (NodeId v = 1; v < g.node_count(); ++v) EXPECT_TRUE(has_parent[v]);
  }
}

TEST(BuildTbt, SequenceValidation) {
  EXPECT_THROW(build_tbt({{1, 2}, {1, 1}}, 1), Error);
  EXPECT_THROW(build_tbt({{0, 2}, {1, 1}}, 1), Error);
}

TEST(BuildTbt, ImpossibleMatchingExhaustsBudget) {
  // After the skeleton edge 1->0 both spare out-stubs sit on node 0 and one
  // spare in-stub does too, so some pairing is always a self-loop.
  try {
    build_tbt({{2, 1}, {2, 1}}, 1, 50);
    FAIL() << "matching should not succeed";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::stub_match_failure);
  }
}

TEST(BuildSeed, SingleComponentEqualsTbt) {
  const BiDegreeSpec c{200, 2.2, 2.4, 9};
  const auto seed = build_seed({{c}, 0, 1});
  const auto tbt = build_component(c);
  ASSERT_EQ(seed.graph.edge_count(), tbt.edge_count());
  for (std::size_t i = 0; i < tbt.edge_count(); ++i) EXPECT_EQ(seed.graph.edges()[i], tbt.edges()[i]);
}

TEST(BuildSeed, ThreeComponentsWithCrossEdges) {
  SeedSpec spec{{{800, 3.8, 2.0, 1}, {800, 2.2, 2.4, 2}, {800, 1.8, 2.6, 3}}, 100, 4};
  const auto s = build_seed(spec);
  EXPECT_EQ(s.graph.node_count(), 2400u);
  std::size_t cross = 0, within = 0;
  for (const auto& e : s.graph.edges()) (s.component[e.src] != s.component[e.dst] ? cross : within)++;
  EXPECT_EQ(cross, 100u);
  std::size_t comp_edges = 0;
  for (const auto& c : spec.components) comp_edges += build_component(c).edge_count();
  EXPECT_EQ(within, comp_edges);
}

TEST(BuildSeed, OneCrossEdge) {
  const auto s = build_seed({{{30, 2.5, 2.5, 1}, {40, 2.5, 2.5, 2}}, 1, 7});
  std::size_t cross = 0;
  for (const auto& e : s.graph.edges()) cross += s.component[e.src] != s.component[e.dst];
  EXPECT_EQ(cross, 1u);
}
