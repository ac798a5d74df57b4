#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "evonet/core.hpp"
#include "evonet/stats.hpp"

namespace evonet::evt {

enum class KSelection : std::uint8_t { bootstrap, double_bootstrap, fixed, min_distance };

inline const char* k_selection_name(KSelection k) {
  switch (k) {
    case KSelection::bootstrap: return "bootstrap";
    case KSelection::double_bootstrap: return "double_bootstrap";
    case KSelection::fixed: return "fixed";
    case KSelection::min_distance: return "min_distance";
  }
  return "?";
}

struct TailEstimate {
  double alpha_hat = 0.0;
  std::size_t k_used = 0;
  std::size_t n = 0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double level = 0.975;
  KSelection k_selection = KSelection::fixed;
};

/// Drops non-positive values; more than 1% of them is an error.
inline std::vector<double> positive_part(std::span<const double> sample) {
  std::vector<double> out;
  out.reserve(sample.size());
  for (double x : sample)
    if (x > 0.0) out.push_back(x);
  const std::size_t dropped = sample.size() - out.size();
  if (dropped * 100 > sample.size())
    throw Error(Errc::non_positive_data, std::to_string(dropped) + " of " + std::to_string(sample.size()) +
                                              " values are non-positive");
  return out;
}

/// Order statistics in descending order, with running sums of logs, so the
/// Hill estimate for any k costs O(1).
class HillTable {
 public:
  explicit HillTable(std::vector<double> positive) : desc_(std::move(positive)) {
    std::sort(desc_.begin(), desc_.end(), std::greater<>());
    logsum_.resize(desc_.size() + 1, 0.0);
    for (std::size_t i = 0; i < desc_.size(); ++i) logsum_[i + 1] = logsum_[i] + std::log(desc_[i]);
  }

  std::size_t size() const noexcept { return desc_.size(); }
  double operator[](std::size_t i) const { return desc_[i]; }  // i-th largest, from 0

  /// Mean of log(X_(n-i+1) / X_(n-k)) over the k largest; 0 on a tie plateau.
  double gamma(std::size_t k) const {
    return logsum_[k] / static_cast<double>(k) - std::log(desc_[k]);
  }

  /// Second log-moment, used by the double bootstrap.
  double second_moment(std::size_t k) const {
    const double cut = std::log(desc_[k]);
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double d = std::log(desc_[i]) - cut;
      s += d * d;
    }
    return s / static_cast<double>(k);
  }

  double alpha(std::size_t k) const {
    check_k(k);
    if (desc_[k] == desc_[0]) throw Error(Errc::ties_at_cutoff, "X_(n-k) equals the sample maximum at k = " + std::to_string(k));
    return 1.0 / gamma(k);
  }

  void check_k(std::size_t k) const {
    if (k < 1 || k >= desc_.size())
      throw Error(Errc::invalid_params, "Hill needs 1 <= k < n (k = " + std::to_string(k) + ", n = " +
                                            std::to_string(desc_.size()) + ")");
  }

 private:
  std::vector<double> desc_;
  std::vector<double> logsum_;
};

/// Hill estimate of the tail index from the k largest order statistics.
inline double hill(std::span<const double> sample, std::size_t k) {
  return HillTable(positive_part(sample)).alpha(k);
}

/// Hill plot: (k, alpha_hat(k)) for k = 1 .. n-1; tie plateaus are skipped.
inline std::vector<std::pair<std::size_t, double>> hill_curve(std::span<const double> sample, std::size_t k_max = 0) {
  HillTable t(positive_part(sample));
  std::vector<std::pair<std::size_t, double>> out;
  const std::size_t hi = k_max ? std::min(k_max, t.size() - 1) : t.size() - 1;
  for (std::size_t k = 1; k <= hi; ++k) {
    const double g = t.gamma(k);
    if (g > 0) out.emplace_back(k, 1.0 / g);
  }
  return out;
}

/// Roughly log-spaced integers in [lo, hi] (at most `points`, deduplicated).
inline std::vector<std::size_t> log_grid(std::size_t lo, std::size_t hi, std::size_t points = 40) {
  std::vector<std::size_t> g;
  if (hi < lo) return g;
  const double a = std::log(static_cast<double>(lo)), b = std::log(static_cast<double>(hi));
  for (std::size_t i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    const auto k = static_cast<std::size_t>(std::lround(std::exp(a + (b - a) * t)));
    if (g.empty() || g.back() != k) g.push_back(std::clamp(k, lo, hi));
  }
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

struct BootstrapOptions {
  std::size_t resamples = 500;
  KSelection mode = KSelection::bootstrap;
  double level = 0.975;
  std::uint64_t rng_seed = 1;
  std::size_t grid_points = 40;
};

namespace detail {

inline std::vector<double> resample(std::span<const double> x, std::size_t m, Rng& rng) {
  std::vector<double> out(m);
  for (auto& v : out) v = x[uniform_index(rng, x.size())];
  return out;
}

/// argmin over the grid of the mean squared `stat(table, k) - target` across
/// `B` subsamples of size m. Grid points where a resample has a tie plateau
/// are charged +inf.
template <class Stat>
std::size_t bootstrap_argmin(std::span<const double> x, std::size_t m, std::size_t B, const std::vector<std::size_t>& grid,
                             double target, Stat stat, Rng& rng) {
  std::vector<double> mse(grid.size(), 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    HillTable t(resample(x, m, rng));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double s = stat(t, grid[i]);
      const double d = s - target;
      mse[i] += std::isfinite(s) ? d * d : std::numeric_limits<double>::infinity();
    }
  }
  return grid[static_cast<std::size_t>(std::min_element(mse.begin(), mse.end()) - mse.begin())];
}

}  // namespace detail

/// Percentile bootstrap interval of alpha_hat(k) over full-size resamples,
/// widened if needed so that it contains the point estimate.
inline void bootstrap_ci(std::span<const double> x, TailEstimate& est, std::size_t B, Rng& rng) {
  std::vector<double> alphas;
  alphas.reserve(B);
  for (std::size_t b = 0; b < B; ++b) {
    HillTable t(detail::resample(x, x.size(), rng));
    const double g = t.gamma(est.k_used);
    if (g > 0) alphas.push_back(1.0 / g);
  }
  if (alphas.empty()) {
    est.ci_lo = est.ci_hi = est.alpha_hat;
    return;
  }
  std::sort(alphas.begin(), alphas.end());
  const double tail = (1.0 - est.level) / 2.0;
  est.ci_lo = std::min(stats::quantile_sorted(alphas, tail), est.alpha_hat);
  est.ci_hi = std::max(stats::quantile_sorted(alphas, 1.0 - tail), est.alpha_hat);
}

/// Hill estimate with bootstrap selection of k and a percentile CI.
///
/// Single mode (Hall): subsamples of size n1 = floor(n^0.9); k1 minimizes
/// the bootstrap MSE of 1/alpha against the full-sample pilot at
/// k0 = floor(2 sqrt n); then k = k1 (n / n1)^{2/3}.
///
/// Double mode (Danielsson, de Haan, Peng, de Vries): subsample sizes
/// n1 = floor(n^0.9), n2 = floor(n1^2 / n); each minimizes the bootstrap
/// MSE of M(k) - 2 gamma(k)^2 and the two minimizers are extrapolated to n.
inline TailEstimate select_k_bootstrap(std::span<const double> sample, const BootstrapOptions& opt = {}) {
  const auto x = positive_part(sample);
  const std::size_t n = x.size();
  if (n < 100) throw Error(Errc::invalid_params, "bootstrap k-selection needs n >= 100");
  if (opt.resamples < 100) throw Error(Errc::invalid_params, "bootstrap needs >= 100 resamples");
  if (opt.mode == KSelection::fixed) throw Error(Errc::invalid_params, "use hill() for a fixed k");
  if (opt.mode == KSelection::min_distance) throw Error(Errc::invalid_params, "use select_k_min_distance()");
  HillTable full(x);
  Rng rng(derive_seed(opt.rng_seed, 5));

  const auto n1 = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 0.9)));
  const auto tie_safe_gamma = [](const HillTable& t, std::size_t k) {
    const double g = t.gamma(k);
    return g > 0 ? g : std::numeric_limits<double>::quiet_NaN();
  };
  std::size_t k = 0;
  if (opt.mode == KSelection::bootstrap) {
    const auto k0 = std::clamp<std::size_t>(static_cast<std::size_t>(2.0 * std::sqrt(static_cast<double>(n))), 2, n - 1);
    const double pilot = full.gamma(k0);
    const auto grid = log_grid(5, n1 / 2, opt.grid_points);
    const auto k1 = detail::bootstrap_argmin(x, n1, opt.resamples, grid, pilot, tie_safe_gamma, rng);
    k = static_cast<std::size_t>(std::lround(static_cast<double>(k1) *
                                             std::pow(static_cast<double>(n) / static_cast<double>(n1), 2.0 / 3.0)));
  } else {
    const auto n2 = std::max<std::size_t>(
        static_cast<std::size_t>(std::floor(static_cast<double>(n1) * static_cast<double>(n1) / static_cast<double>(n))), 20);
    const auto z = [](const HillTable& t, std::size_t kk) {
      const double g = t.gamma(kk);
      if (!(g > 0)) return std::numeric_limits<double>::quiet_NaN();
      return t.second_moment(kk) - 2.0 * g * g;
    };
    const auto k1 = detail::bootstrap_argmin(x, n1, opt.resamples, log_grid(5, n1 / 2, opt.grid_points), 0.0, z, rng);
    const auto k2 = detail::bootstrap_argmin(x, n2, opt.resamples, log_grid(3, n2 / 2, opt.grid_points), 0.0, z, rng);
    const double lk1 = std::log(static_cast<double>(k1)), ln1 = std::log(static_cast<double>(n1));
    const double base = static_cast<double>(k1) * static_cast<double>(k1) / static_cast<double>(k2);
    const double ratio = lk1 * lk1 / std::pow(2.0 * ln1 - lk1, 2.0);
    k = static_cast<std::size_t>(std::lround(base * std::pow(ratio, (ln1 - lk1) / ln1)));
  }
  k = std::clamp<std::size_t>(k, 2, n - 1);
  // A tie plateau at the cutoff has no finite estimate; walk to the next k.
  while (k + 1 < n && !(full.gamma(k) > 0)) ++k;

  TailEstimate est;
  est.n = n;
  est.k_used = k;
  est.alpha_hat = full.alpha(k);
  est.level = opt.level;
  est.k_selection = opt.mode;
  bootstrap_ci(x, est, opt.resamples, rng);
  return est;
}

/// Hill estimate at a fixed k with the same bootstrap percentile CI.
inline TailEstimate hill_fixed(std::span<const double> sample, std::size_t k, std::size_t resamples = 500,
                               double level = 0.975, std::uint64_t rng_seed = 1) {
  const auto x = positive_part(sample);
  HillTable t(x);
  TailEstimate est;
  est.n = x.size();
  est.k_used = k;
  est.alpha_hat = t.alpha(k);
  est.level = level;
  est.k_selection = KSelection::fixed;
  Rng rng(derive_seed(rng_seed, 6));
  bootstrap_ci(x, est, resamples, rng);
  return est;
}

struct MinDistanceOptions {
  std::size_t k_min = 10;
  std::size_t max_candidates = 200;
  std::size_t resamples = 500;
  double level = 0.975;
  std::uint64_t rng_seed = 1;
};

/// Kolmogorov distance between the k scaled exceedances X_(n-i+1) / X_(n-k)
/// and the Pareto law with the Hill index at k. Ties are handled block-wise,
/// so integer data is compared at its jump points only.
inline double pareto_ks_distance(const HillTable& t, std::size_t k) {
  const double a = t.alpha(k), cut = t[k];
  double d = 0.0;
  for (std::size_t i = 0; i < k;) {
    std::size_t j = i;
    while (j < k && t[j] == t[i]) ++j;
    // Values t[i..j) are tied; ascending cdf jumps from (k - j) / k to (k - i) / k there.
    const double f = 1.0 - std::pow(t[i] / cut, -a);
    const double lo = static_cast<double>(k - j) / static_cast<double>(k);
    const double hi = static_cast<double>(k - i) / static_cast<double>(k);
    d = std::max({d, std::abs(hi - f), std::abs(lo - f)});
    i = j;
  }
  return d;
}

/// Hill estimate with k chosen by minimising the Kolmogorov distance to the
/// fitted Pareto tail. Candidates are the ends of tie blocks (thresholds that
/// every one of the k top values strictly exceeds), thinned to a log grid
/// when there are too many. This is the usual choice for integer-valued data
/// such as degrees, where the bootstrap MSE criterion is misled by ties.
inline TailEstimate select_k_min_distance(std::span<const double> sample, const MinDistanceOptions& opt = {}) {
  const auto x = positive_part(sample);
  if (x.size() <= opt.k_min + 1) throw Error(Errc::invalid_params, "sample too small for minimum-distance selection");
  HillTable t(x);
  std::vector<std::size_t> cand;
  for (std::size_t k = std::max<std::size_t>(opt.k_min, 1); k < t.size(); ++k)
    if (t[k] < t[k - 1] && t[k] < t[0]) cand.push_back(k);
  if (cand.empty()) throw Error(Errc::ties_at_cutoff, "no threshold below the top values");
  if (cand.size() > opt.max_candidates) {
    std::vector<std::size_t> thin;
    for (std::size_t g : log_grid(cand.front(), cand.back(), opt.max_candidates)) {
      const auto it = std::lower_bound(cand.begin(), cand.end(), g);
      if (it != cand.end() && (thin.empty() || thin.back() != *it)) thin.push_back(*it);
    }
    cand = std::move(thin);
  }
  std::size_t best = cand.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k : cand) {
    const double d = pareto_ks_distance(t, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  TailEstimate est;
  est.n = x.size();
  est.k_used = best;
  est.alpha_hat = t.alpha(best);
  est.level = opt.level;
  est.k_selection = KSelection::min_distance;
  Rng rng(derive_seed(opt.rng_seed, 6));
  bootstrap_ci(x, est, opt.resamples, rng);
  return est;
}

}  // namespace evonet::evt
