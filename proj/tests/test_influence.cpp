#include <gtest/gtest.h>

#include <functional>

#include "evonet/influence.hpp"

using namespace evonet;

namespace {

// Dense Google matrix oracle: pi = pi G with G = c S + (1-c)/n, where S is the
// row-normalized adjacency (dangling rows uniform). Returns n * pi.
std::vector<double> google_oracle(const DirectedGraph& g, double c) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<double>> G(n, std::vector<double>(n, 0.0));
  for (const auto& e : g.edges()) G[e.src][e.dst] += 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0;
    for (double x : G[i]) row += x;
    for (std::size_t j = 0; j < n; ++j) {
      const double s = row > 0 ? G[i][j] / row : 1.0 / double(n);
      G[i][j] = c * s + (1.0 - c) / double(n);
    }
  }
  std::vector<double> pi(n, 1.0 / double(n)), next(n);
  for (int it = 0; it < 5000; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) next[j] += pi[i] * G[i][j];
    pi.swap(next);
  }
  for (double& x : pi) x *= double(n);
  return pi;
}

// max over directed paths j ~> i (including the empty path) of c^len q_j, by DFS on a DAG.
std::vector<double> path_max_oracle(const DirectedGraph& g, double c, const std::vector<double>& q) {
  const std::size_t n = g.node_count();
  std::vector<double> best(q);
  const auto out = out_links(g);
  std::function<void(NodeId, NodeId, double)> walk = [&](NodeId src, NodeId v, double w) {
    for (NodeId t : out[v]) {
      const double val = w * c;
      best[t] = std::max(best[t], val * q[src]);
      walk(src, t, val);
    }
  };
  for (NodeId s = 0; s < n; ++s) walk(s, s, 1.0);
  return best;
}

DirectedGraph random_graph(Rng& rng, std::size_t n, std::size_t m, bool dangling_free) {
  DirectedGraph g;
  g.add_nodes(n);
  if (dangling_free)
    for (NodeId v = 0; v < n; ++v) g.add_edge(v, static_cast<NodeId>((v + 1 + uniform_index(rng, n - 1)) % n));
  for (std::size_t k = 0; k < m; ++k) {
    const auto a = static_cast<NodeId>(uniform_index(rng, n)), b = static_cast<NodeId>(uniform_index(rng, n));
    if (a != b) g.add_edge(a, b);
  }
  return g;
}

}  // namespace

TEST(PageRank, TwoCycleIsOne) {
  DirectedGraph g;
  g.add_nodes(2);
  g.add_edge(0, 1);
  g.add_edge(1, 0);
  for (double tol : {1e-3, 1e-12}) {
    PrParams p;
    p.tol = tol;
    const auto r = pagerank(g, p);
    EXPECT_DOUBLE_EQ(r.values[0], 1.0);
    EXPECT_DOUBLE_EQ(r.values[1], 1.0);
  }
}

TEST(PageRank, IsolatedNodeLiteral) {
  DirectedGraph g;
  g.add_node();
  const auto r = pagerank(g);
  EXPECT_NEAR(r.values[0], 0.15, 1e-15);
}

TEST(PageRank, ChainRedistributeMatchesDenseOracle) {
  DirectedGraph g;
  g.add_nodes(3);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  PrParams p;
  p.dangling = DanglingMode::redistribute;
  const auto r = pagerank(g, p);
  const auto o = google_oracle(g, 0.85);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.values[i], o[i], 1e-8);
}

TEST(PageRank, RandomGraphsMatchDenseOracle) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto n = 5 + uniform_index(rng, 40);
    const auto g = random_graph(rng, n, 2 * n, false);
    PrParams p;
    p.dangling = DanglingMode::redistribute;
    const auto r = pagerank(g, p);
    const auto o = google_oracle(g, 0.85);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(r.values[i], o[i], 1e-8);
    double s = 0;
    for (double x : r.values) s += x;
    EXPECT_NEAR(s, double(n), 1e-6);
  }
}

TEST(PageRank, LowerBoundAndModesAgreeWithoutDangling) {
  Rng rng(6);
  const auto g = random_graph(rng, 200, 300, true);
  PrParams lit, red;
  red.dangling = DanglingMode::redistribute;
  const auto a = pagerank(g, lit), b = pagerank(g, red);
  for (std::size_t i = 0; i < 200; ++i) {
    EXPECT_GE(a.values[i], 0.15 - 1e-12);
    EXPECT_NEAR(a.values[i], b.values[i], 1e-10);
  }
}

TEST(PageRank, PermutationEquivariant) {
  Rng rng(7);
  const auto g = random_graph(rng, 60, 150, false);
  std::vector<NodeId> perm(60);
  for (NodeId i = 0; i < 60; ++i) perm[i] = i;
  evonet::shuffle(perm.begin(), perm.end(), rng);
  DirectedGraph h;
  h.add_nodes(60);
  for (const auto& e : g.edges()) h.add_edge(perm[e.src], perm[e.dst]);
  const auto a = pagerank(g), b = pagerank(h);
  for (NodeId i = 0; i < 60; ++i) EXPECT_NEAR(a.values[i], b.values[perm[i]], 1e-12);
}

TEST(PageRank, NonConvergenceIsFlagged) {
  Rng rng(8);
  const auto g = random_graph(rng, 50, 200, true);
  PrParams p;
  p.max_iter = 3;
  const auto r = pagerank(g, p);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3u);
  EXPECT_THROW(pagerank(DirectedGraph{}), Error);
}

TEST(MaxLinear, NoInLinksAndChainFloor) {
  DirectedGraph g;
  g.add_nodes(3);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  const auto x = max_linear(g);
  for (double v : x.values) EXPECT_DOUBLE_EQ(v, 0.15);
}

TEST(MaxLinear, RandomDagsMatchPathOracle) {
  Rng rng(10);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 9);
    DirectedGraph g;
    g.add_nodes(n);
    for (NodeId a = 0; a < n; ++a)
      for (NodeId b = a + 1; b < n; ++b)
        if (uniform01(rng) < 0.4) g.add_edge(a, b);
    std::vector<double> q(n);
    for (double& v : q) v = 0.01 + 10.0 * uniform01(rng);
    PrParams p;
    p.c = 0.3 + 0.6 * uniform01(rng);
    const auto x = max_linear(g, p, q);
    const auto o = path_max_oracle(g, p.c, q);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(x.values[i], o[i], 1e-12);
      EXPECT_GE(x.values[i], q[i]);
      EXPECT_LE(x.values[i], *std::max_element(q.begin(), q.end()));
    }
  }
}

TEST(MaxLinear, CyclesConverge) {
  Rng rng(12);
  const auto g = random_graph(rng, 100, 400, true);
  std::vector<double> q(100);
  for (double& v : q) v = pareto(rng, 1.5);
  const auto x = max_linear(g, PrParams{}, q);
  EXPECT_TRUE(x.converged);
  EXPECT_THROW(max_linear(g, PrParams{}, std::vector<double>(3, 1.0)), Error);
}
