#include <gtest/gtest.h>

#include <cmath>

#include "evonet/evt/tail.hpp"
#include "evonet/stats.hpp"

using namespace evonet;
using namespace evonet::evt;

namespace {

std::vector<double> pareto_sample(std::size_t n, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = pareto(rng, alpha);
  return x;
}

// Independent Hill oracle: sort ascending, index from the top.
double hill_oracle(std::vector<double> x, std::size_t k) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  long double s = 0;
  for (std::size_t i = 1; i <= k; ++i) s += std::log(x[n - i] / x[n - k - 1]);
  return static_cast<double>(1.0L / (s / k));
}

}  // namespace

TEST(Hill, HandComputation) {
  const double e = std::exp(1.0);
  const std::vector<double> x{1.0, e, e};
  EXPECT_NEAR(hill(x, 2), 1.0, 1e-12);
}

TEST(Hill, MatchesOracle) {
  const auto x = pareto_sample(3000, 1.7, 4);
  for (std::size_t k : {1u, 10u, 100u, 999u, 2999u}) EXPECT_NEAR(hill(x, k), hill_oracle(x, k), 1e-9);
}

TEST(Hill, QuantileGrid) {
  const std::size_t n = 10000;
  std::vector<double> x(n);
  for (std::size_t i = 1; i <= n; ++i) x[i - 1] = std::pow(double(i) / double(n + 1), -0.5);
  EXPECT_NEAR(hill(x, 500), 2.0, 0.1);
}

TEST(Hill, ScaleInvariant) {
  auto x = pareto_sample(2000, 2.3, 5);
  const double base = hill(x, 150);
  for (double lambda : {0.001, 3.0, 1e6}) {
    std::vector<double> y(x);
    for (double& v : y) v *= lambda;
    EXPECT_NEAR(hill(y, 150), base, 1e-9 * base);
  }
}

TEST(Hill, Errors) {
  const std::vector<double> ties{1, 2, 5, 5, 5};
  try {
    hill(ties, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ties_at_cutoff);
  }
  const std::vector<double> x{1, 2, 3};
  EXPECT_THROW(hill(x, 3), Error);
  EXPECT_THROW(hill(x, 0), Error);
  std::vector<double> neg = pareto_sample(100, 2, 1);
  neg[0] = -1;
  neg[1] = 0;
  try {
    hill(neg, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::non_positive_data);
  }
  auto one_bad = pareto_sample(300, 2.0, 3);
  one_bad[7] = 0.0;  // 1 of 300 is under the 1% limit and is dropped
  std::vector<double> clean(one_bad);
  clean.erase(clean.begin() + 7);
  EXPECT_DOUBLE_EQ(hill(one_bad, 20), hill(clean, 20));
}

TEST(Bootstrap, DeterministicAndCiContainsEstimate) {
  const auto x = pareto_sample(2000, 2.0, 6);
  BootstrapOptions opt;
  opt.rng_seed = 9;
  const auto a = select_k_bootstrap(x, opt), b = select_k_bootstrap(x, opt);
  EXPECT_EQ(a.k_used, b.k_used);
  EXPECT_EQ(a.ci_lo, b.ci_lo);
  EXPECT_EQ(a.ci_hi, b.ci_hi);
  EXPECT_LE(a.ci_lo, a.alpha_hat);
  EXPECT_GE(a.ci_hi, a.alpha_hat);
  EXPECT_GE(a.k_used, 1u);
  EXPECT_LT(a.k_used, x.size());
  EXPECT_EQ(opt.resamples, 500u);
}

TEST(Bootstrap, ParetoCalibrationBothModes) {
  for (auto mode : {KSelection::bootstrap, KSelection::double_bootstrap}) {
    std::vector<double> est;
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
      BootstrapOptions opt;
      opt.mode = mode;
      opt.rng_seed = seed;
      opt.resamples = 200;
      est.push_back(select_k_bootstrap(pareto_sample(10000, 2.0, 100 + seed), opt).alpha_hat);
    }
    const double med = stats::median(est);
    EXPECT_GE(med, 1.8) << k_selection_name(mode);
    EXPECT_LE(med, 2.2) << k_selection_name(mode);
  }
}

TEST(Bootstrap, Preconditions) {
  const auto x = pareto_sample(50, 2.0, 1);
  EXPECT_THROW(select_k_bootstrap(x), Error);
  const auto y = pareto_sample(500, 2.0, 1);
  BootstrapOptions opt;
  opt.resamples = 50;
  EXPECT_THROW(select_k_bootstrap(y, opt), Error);
}

TEST(Bootstrap, FixedKInterval) {
  const auto x = pareto_sample(3000, 1.5, 2);
  const auto e = hill_fixed(x, 200, 300);
  EXPECT_NEAR(e.alpha_hat, hill(x, 200), 1e-12);
  EXPECT_LE(e.ci_lo, e.alpha_hat);
  EXPECT_GE(e.ci_hi, e.alpha_hat);
  EXPECT_LT(e.ci_hi - e.ci_lo, 1.0);
}

TEST(MinDistance, ParetoCalibration) {
  std::vector<double> est;
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
    est.push_back(select_k_min_distance(pareto_sample(5000, 2.0, 200 + seed), {10, 200, 100, 0.975, seed}).alpha_hat);
  EXPECT_NEAR(stats::median(est), 2.0, 0.15);
}

TEST(MinDistance, KsDistanceOracle) {
  // Exceedances 4/1, 2/1 over cut 1 with the Hill index at k = 2:
  // gamma = (log 4 + log 2) / 2, F(y) = 1 - y^(-1/gamma); the cdf jumps
  // 0 -> 1/2 at y = 2 and 1/2 -> 1 at y = 4.
  const HillTable t({4.0, 2.0, 1.0});
  const double a = 2.0 / (std::log(4.0) + std::log(2.0));
  const double f2 = 1 - std::pow(2.0, -a), f4 = 1 - std::pow(4.0, -a);
  const double want = std::max({f2, std::abs(0.5 - f2), std::abs(0.5 - f4), 1 - f4});
  EXPECT_NEAR(pareto_ks_distance(t, 2), want, 1e-12);
}

TEST(MinDistance, IntegerDataCutsBetweenTieBlocks) {
  Rng rng(9);
  std::vector<double> x(4000);
  for (double& v : x) v = std::ceil(pareto(rng, 2.5));
  const auto e = select_k_min_distance(x, {10, 200, 100, 0.975, 1});
  std::vector<double> d(x);
  std::sort(d.begin(), d.end(), std::greater<>());
  EXPECT_LT(d[e.k_used], d[e.k_used - 1]);
  EXPECT_EQ(e.k_selection, KSelection::min_distance);
  EXPECT_LE(e.ci_lo, e.alpha_hat);
  EXPECT_GE(e.ci_hi, e.alpha_hat);
  EXPECT_THROW(select_k_min_distance(std::vector<double>(50, 3.0)), Error);
}
