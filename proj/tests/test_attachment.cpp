#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "evonet/attachment.hpp"
#include "evonet/generators.hpp"

using namespace evonet;

namespace {

DirectedGraph one_edge() {
  DirectedGraph g;
  g.add_nodes(2);
  g.add_edge(0, 1);
  return g;
}

PaParams pure(double a, double b, double c, std::size_t steps = 1) {
  PaParams p;
  p.alpha = a;
  p.beta = b;
  p.gamma = c;
  p.steps = steps;
  return p;
}

}  // namespace

TEST(Attachment, AlphaProbabilitiesOnOneEdge) {
  const auto g = one_edge();
  const auto pr = attachment_probabilities(g, Scheme::alpha, pure(1, 0, 0));
  EXPECT_DOUBLE_EQ(pr[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(pr[0], 1.0 / 3.0);
}

TEST(Attachment, AlphaSamplingFrequencyBothSamplers) {
  for (auto how : {EndpointSampler::edge_pool, EndpointSampler::linear_scan}) {
    auto p = pure(1, 0, 0);
    p.sampler = how;
    Rng rng(21);
    const int trials = 60000;
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
      auto g = one_edge();
      hits += pa_step(g, p, rng).edge.dst == 1;
    }
    // Binomial sd is about 0.002; allow 4 sd.
    EXPECT_NEAR(hits / double(trials), 2.0 / 3.0, 0.008);
  }
}

TEST(Attachment, BetaProductFormAndRedrawnPair) {
  const auto g0 = one_edge();
  auto p = pure(0, 1, 0);
  EXPECT_DOUBLE_EQ(beta_pair_probability(g0, 0, 1, p), 4.0 / 9.0);
  // Redrawing the pairs (0,0) and (1,1), mass 4/9, leaves (0,1) with (4/9)/(5/9).
  Rng rng(8);
  const int trials = 60000;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    auto g = one_edge();
    const auto r = pa_step(g, p, rng);
    EXPECT_FALSE(r.new_node.has_value());
    hits += r.edge == Edge{0, 1};
  }
  EXPECT_NEAR(hits / double(trials), 0.8, 0.008);
}

TEST(Attachment, GammaAddsNodeWithInDegreeOne) {
  auto g = one_edge();
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto n = g.node_count();
    const auto r = pa_step(g, pure(0, 0, 1), rng);
    ASSERT_TRUE(r.new_node.has_value());
    EXPECT_EQ(g.node_count(), n + 1);
    EXPECT_EQ(g.in_degree(*r.new_node), 1u);
    EXPECT_EQ(g.out_degree(*r.new_node), 0u);
    EXPECT_EQ(r.edge.dst, *r.new_node);
  }
}

TEST(Attachment, PureAlphaAndPureBeta) {
  auto g = one_edge();
  const auto log = evolve(g, pure(1, 0, 0, 500), 1);
  EXPECT_EQ(new_node_count(log), 500u);
  for (NodeId v = 2; v < g.node_count(); ++v) EXPECT_EQ(g.out_degree(v), 1u);

  auto h = one_edge();
  h.add_node();
  const auto blog = evolve(h, pure(0, 1, 0, 400), 1);
  EXPECT_EQ(new_node_count(blog), 0u);
  EXPECT_EQ(h.edge_count(), 401u);
  EXPECT_EQ(h.node_count(), 3u);
}

TEST(Attachment, LogInvariantsAndDegreeSums) {
  auto g = build_component({100, 2.5, 2.5, 3});
  const auto e0 = g.edge_count();
  PaParams p;
  p.steps = 3000;
  std::vector<std::size_t> cps{1000, 2000, 3000};
  std::vector<std::size_t> seen;
  const auto log = evolve(g, p, 5, cps, [&](std::size_t s, const DirectedGraph& gg) {
    seen.push_back(s);
    const auto in = gg.in_degrees();
    EXPECT_EQ(std::accumulate(in.begin(), in.end(), std::uint64_t{0}), gg.edge_count());
  });
  EXPECT_EQ(seen, cps);
  ASSERT_EQ(log.size(), 3000u);
  for (const auto& r : log) EXPECT_EQ(r.new_node.has_value(), r.scheme != Scheme::beta);
  EXPECT_EQ(g.edge_count(), e0 + 3000);
  const auto out = g.out_degrees();
  EXPECT_EQ(std::accumulate(out.begin(), out.end(), std::uint64_t{0}), g.edge_count());
  // Appended ids exceed every seed id and carry their step.
  for (const auto& r : log)
    if (r.new_node) {
      EXPECT_GE(*r.new_node, 100u);
      EXPECT_EQ(g.node(*r.new_node).step, static_cast<std::int64_t>(r.step));
      EXPECT_EQ(g.node(*r.new_node).origin, Origin::attached);
    }
}

TEST(Attachment, EvolveIsReproducible) {
  auto a = build_component({80, 2.2, 2.8, 4});
  auto b = a;
  PaParams p;
  p.steps = 2000;
  evolve(a, p, 17);
  evolve(b, p, 17);
  ASSERT_EQ(a.edge_count(), b.edge_count());
  EXPECT_TRUE(std::equal(a.edges().begin(), a.edges().end(), b.edges().begin()));
}

TEST(Attachment, SamplersAgreeInDistribution) {
  // Degree-proportional draws on a fixed skewed graph: both samplers should
  // match the exact probabilities.
  auto g = build_component({40, 1.5, 2.0, 6});
  PaParams p = pure(1, 0, 0);
  p.delta_in = 0.5;
  const auto exact = attachment_probabilities(g, Scheme::alpha, p);
  for (auto how : {EndpointSampler::edge_pool, EndpointSampler::linear_scan}) {
    Rng rng(how == EndpointSampler::edge_pool ? 1 : 2);
    std::vector<double> freq(g.node_count(), 0.0);
    const int trials = 200000;
    for (int t = 0; t < trials; ++t) freq[detail::draw_endpoint(g, detail::Side::in, 0.5, how, rng)] += 1.0 / trials;
    double chi2 = 0.0;
    for (std::size_t v = 0; v < freq.size(); ++v) chi2 += trials * std::pow(freq[v] - exact[v], 2) / exact[v];
    // 39 degrees of freedom; the 0.999 quantile is about 72.
    EXPECT_LT(chi2, 72.0);
  }
}

TEST(Attachment, DegenerateAndInvalid) {
  DirectedGraph g;
  g.add_nodes(3);
  auto p = pure(0.4, 0.2, 0.4);
  p.delta_in = p.delta_out = 0;
  Rng rng(1);
  try {
    pa_step(g, p, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_graph);
  }
  EXPECT_THROW(validate(pure(0.5, 0.5, 0.5)), Error);
}

TEST(Attachment, DegreeTailLaw) {
  const auto law = degree_tail_law(pure(0.4, 0.2, 0.4));
  EXPECT_DOUBLE_EQ(law.iota_in, 3.0);
  EXPECT_DOUBLE_EQ(law.iota_out, 3.0);
}

TEST(Attachment, LogCsvRoundTrip) {
  auto g = one_edge();
  PaParams p;
  p.steps = 50;
  const auto log = evolve(g, p, 2);
  std::stringstream buf;
  write_log_csv(buf, log);
  const auto back = read_log_csv(buf);
  ASSERT_EQ(back.size(), log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(back[i].scheme, log[i].scheme);
    EXPECT_EQ(back[i].new_node, log[i].new_node);
    EXPECT_EQ(back[i].edge, log[i].edge);
  }
}
