#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evonet/core.hpp"
#include "evonet/stats.hpp"

namespace evonet::evt {

/// Gaps between successive exceedances of a threshold u.
struct InterExceedanceTimes {
  std::vector<std::uint64_t> times;
  std::size_t exceedances = 0;  // L
  double exceedance_rate = 0.0;  // fraction of the sample above u
  double threshold = 0.0;
  std::size_t truncated_paths = 0;  // graph variant only
};

enum class ThetaEstimator : std::uint8_t { intervals, kgaps, plateau, modified_intervals };
enum class Aggregation : std::uint8_t { single, theta1, theta2 };

inline const char* estimator_name(ThetaEstimator e) {
  switch (e) {
    case ThetaEstimator::intervals: return "intervals";
    case ThetaEstimator::kgaps: return "kgaps";
    case ThetaEstimator::plateau: return "plateau";
    case ThetaEstimator::modified_intervals: return "modified_intervals";
  }
  return "?";
}

inline const char* aggregation_name(Aggregation a) {
  switch (a) {
    case Aggregation::single: return "single";
    case Aggregation::theta1: return "theta1";
    case Aggregation::theta2: return "theta2";
  }
  return "?";
}

struct ExtremalEstimate {
  double theta_hat = 1.0;
  ThetaEstimator estimator = ThetaEstimator::intervals;
  double threshold = 0.0;
  Aggregation aggregation = Aggregation::single;
  bool fallback = false;  // no accepted threshold / no plateau
  std::size_t k_gap = 0;  // K of the K-gaps estimator, when used
};

/// Exceedances of X_i > u with times S_{i+1} - S_i between them.
inline InterExceedanceTimes inter_exceedances(std::span<const double> series, double u) {
  InterExceedanceTimes t;
  t.threshold = u;
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!(series[i] > u)) continue;
    ++t.exceedances;
    if (prev) t.times.push_back(i - *prev);
    prev = i;
  }
  t.exceedance_rate = series.empty() ? 0.0 : static_cast<double>(t.exceedances) / static_cast<double>(series.size());
  return t;
}

/// Same, with u the type-7 empirical quantile of the series at `level`.
inline InterExceedanceTimes inter_exceedances_at_level(std::span<const double> series, double level) {
  return inter_exceedances(series, stats::quantile(series, level));
}

namespace detail {

inline std::vector<double> usable_gaps(const InterExceedanceTimes& t, bool exclude_ones) {
  if (t.times.size() < 2)
    throw Error(Errc::too_few_exceedances, "need at least 3 exceedances (2 gaps), got " + std::to_string(t.times.size()) + " gaps");
  std::vector<double> g;
  g.reserve(t.times.size());
  for (auto x : t.times)
    if (!(exclude_ones && x == 1)) g.push_back(static_cast<double>(x));
  return g;
}

}  // namespace detail

/// Ferro-Segers intervals estimator, clipped to [0,1]. The first form is
/// used when every gap is at most 2, the bias-corrected form otherwise.
inline double intervals_estimator(const InterExceedanceTimes& t, bool exclude_ones = false) {
  const auto g = detail::usable_gaps(t, exclude_ones);
  if (g.empty()) throw Error(Errc::zero_denominator, "no gaps left after excluding ones");
  const double m = static_cast<double>(g.size());
  const double tmax = *std::max_element(g.begin(), g.end());
  double num = 0.0, den = 0.0;
  if (tmax <= 2.0) {
    for (double x : g) {
      num += x;
      den += x * x;
    }
  } else {
    for (double x : g) {
      num += x - 1.0;
      den += (x - 1.0) * (x - 2.0);
    }
    if (den == 0.0) throw Error(Errc::zero_denominator, "all gaps in {1,2}");
  }
  const double theta = 2.0 * num * num / (m * den);
  return std::clamp(theta, 0.0, 1.0);
}

/// Parts of the K-gaps log-likelihood
///   (N - N_C) log(1 - theta) + 2 N_C log(theta) - theta c
/// with N the number of gaps, N_C the number of positive K-gaps and
/// c = sum of rate * max(T - K, 0).
struct KGapsStats {
  double a = 0.0;  // N - N_C
  double b = 0.0;  // 2 N_C
  double c = 0.0;
};

inline KGapsStats kgaps_stats(const InterExceedanceTimes& t, double rate, std::size_t K, bool exclude_ones = false) {
  const auto g = detail::usable_gaps(t, exclude_ones);
  KGapsStats s;
  double nc = 0.0;
  for (double x : g) {
    const double sk = std::max(x - static_cast<double>(K), 0.0);
    if (sk > 0) nc += 1.0;
    s.c += rate * sk;
  }
  s.a = static_cast<double>(g.size()) - nc;
  s.b = 2.0 * nc;
  return s;
}

inline double kgaps_loglik(const KGapsStats& s, double theta) {
  double ll = -theta * s.c;
  if (s.a > 0) ll += s.a * std::log1p(-theta);
  if (s.b > 0) ll += s.b * std::log(theta);
  return ll;
}

/// Suveges-Davison K-gaps maximum likelihood estimate, clipped to [0,1].
inline double kgaps_estimator(const InterExceedanceTimes& t, double rate, std::size_t K, bool exclude_ones = false) {
  const auto s = kgaps_stats(t, rate, K, exclude_ones);
  if (s.c == 0.0) throw Error(Errc::all_gaps_zero, "every K-gap is zero (K = " + std::to_string(K) + ")");
  const double h = (s.a + s.b) / s.c + 1.0;
  // h^2 - 4b/c = ((a+b)/c - 1)^2 + 4a/c >= 0; clamp away rounding.
  const double disc = std::max(h * h - 4.0 * s.b / s.c, 0.0);
  return std::clamp(0.5 * (h - std::sqrt(disc)), 0.0, 1.0);
}

inline double kgaps_estimator(const InterExceedanceTimes& t, std::size_t K, bool exclude_ones = false) {
  return kgaps_estimator(t, t.exceedance_rate, K, exclude_ones);
}

/// Which threshold-level estimator the discrepancy and plateau rules apply.
struct ThetaRule {
  ThetaEstimator kind = ThetaEstimator::intervals;
  std::size_t K = 1;
  bool exclude_ones = false;
};

inline double theta_at(const InterExceedanceTimes& t, const ThetaRule& r) {
  if (r.kind == ThetaEstimator::kgaps) return kgaps_estimator(t, r.K, r.exclude_ones);
  return intervals_estimator(t, r.exclude_ones);
}

/// Cramer-von Mises statistic of the k largest normalized gaps
/// Y = rate * T against the exponential part 1 - exp(-theta y) of their
/// limit law; k = floor(theta * #gaps).
inline double omega2_statistic(const InterExceedanceTimes& t, double theta) {
  std::vector<double> y;
  y.reserve(t.times.size());
  for (auto x : t.times) y.push_back(t.exceedance_rate * static_cast<double>(x));
  std::sort(y.begin(), y.end());
  const auto k = static_cast<std::size_t>(std::floor(theta * static_cast<double>(y.size())));
  if (k == 0 || theta <= 0.0) return std::numeric_limits<double>::infinity();
  const double kd = static_cast<double>(k);
  double w2 = 1.0 / (12.0 * kd);
  const std::size_t off = y.size() - k;
  for (std::size_t i = 0; i < k; ++i) {
    const double g = 1.0 - std::exp(-theta * y[off + i]);
    const double d = g - (2.0 * static_cast<double>(i) + 1.0) / (2.0 * kd);
    w2 += d * d;
  }
  return w2;
}

/// Critical value of the Cramer-von Mises statistic at the 5% level.
inline constexpr double kOmega2Critical = 0.461;

inline std::vector<double> default_threshold_grid() { return stats::linspace(0.90, 0.995, 20); }

struct ThresholdPoint {
  double level = 0.0;
  double u = 0.0;
  double theta = 0.0;
  double omega2 = 0.0;
  bool accepted = false;
  bool valid = false;  // estimator defined at this level
};

struct DiscrepancyResult {
  std::vector<ThresholdPoint> grid;
  ExtremalEstimate theta1;
  ExtremalEstimate theta2;
  std::size_t accepted = 0;
};

/// theta(u) over the quantile grid, scored by the omega^2 rule. theta1 is
/// the mean over accepted thresholds, theta2 the estimate at the lowest
/// accepted one. With nothing accepted both fall back to the 95% quantile.
inline DiscrepancyResult discrepancy_thresholds(std::span<const double> series, const ThetaRule& rule,
                                                std::span<const double> levels, double critical = kOmega2Critical) {
  if (levels.empty()) throw Error(Errc::invalid_params, "empty threshold grid");
  for (double q : levels)
    if (!(q > 0.5 && q < 0.995 + 1e-12)) throw Error(Errc::invalid_params, "threshold levels must lie in (0.5, 0.995]");
  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  DiscrepancyResult r;
  double sum = 0.0;
  std::optional<std::size_t> lowest;
  for (double q : levels) {
    ThresholdPoint pt;
    pt.level = q;
    pt.u = stats::quantile_sorted(sorted, q);
    const auto t = inter_exceedances(series, pt.u);
    try {
      pt.theta = theta_at(t, rule);
      pt.omega2 = omega2_statistic(t, pt.theta);
      pt.valid = true;
      pt.accepted = pt.omega2 <= critical;
    } catch (const Error&) {
      pt.valid = false;
    }
    if (pt.accepted) {
      ++r.accepted;
      sum += pt.theta;
      if (!lowest || pt.u < r.grid[*lowest].u) lowest = r.grid.size();
    }
    r.grid.push_back(pt);
  }
  const ThetaEstimator kind = rule.kind;
  r.theta1.estimator = r.theta2.estimator = kind;
  r.theta1.aggregation = Aggregation::theta1;
  r.theta2.aggregation = Aggregation::theta2;
  r.theta1.k_gap = r.theta2.k_gap = rule.kind == ThetaEstimator::kgaps ? rule.K : 0;
  if (r.accepted > 0) {
    r.theta1.theta_hat = sum / static_cast<double>(r.accepted);
    r.theta1.threshold = r.grid[*lowest].u;
    r.theta2.theta_hat = r.grid[*lowest].theta;
    r.theta2.threshold = r.grid[*lowest].u;
  } else {
    const double u = stats::quantile_sorted(sorted, 0.95);
    const double th = theta_at(inter_exceedances(series, u), rule);
    for (auto* e : {&r.theta1, &r.theta2}) {
      e->theta_hat = th;
      e->threshold = u;
      e->fallback = true;
    }
  }
  return r;
}

/// K in {0..k_max} scored by the omega^2 rule: most accepted thresholds,
/// ties broken by the smaller mean statistic over accepted thresholds.
struct KGridChoice {
  std::size_t K = 0;
  DiscrepancyResult result;
};

inline KGridChoice select_k_gap(std::span<const double> series, std::span<const double> levels, std::size_t k_max = 5,
                                bool exclude_ones = false) {
  KGridChoice best;
  double best_score = std::numeric_limits<double>::infinity();
  bool have = false;
  for (std::size_t K = 0; K <= k_max; ++K) {
    auto r = discrepancy_thresholds(series, ThetaRule{ThetaEstimator::kgaps, K, exclude_ones}, levels);
    double mean_w2 = std::numeric_limits<double>::infinity();
    if (r.accepted > 0) {
      mean_w2 = 0.0;
      for (const auto& p : r.grid)
        if (p.accepted) mean_w2 += p.omega2;
      mean_w2 /= static_cast<double>(r.accepted);
    }
    if (!have || r.accepted > best.result.accepted || (r.accepted == best.result.accepted && mean_w2 < best_score)) {
      best.K = K;
      best.result = std::move(r);
      best_score = mean_w2;
      have = true;
    }
  }
  return best;
}

/// Longest stable stretch of a smoothed theta(u) curve.
struct Plateau {
  std::vector<double> smoothed;
  std::size_t begin = 0;  // index range [begin, end) into smoothed
  std::size_t end = 0;
  bool found = false;
  double value = 0.0;
};

/// Moving average with window w = ceil(size / 10) (valid part only), then
/// the longest run whose successive differences stay below `tol`.
inline Plateau find_plateau(std::span<const double> curve, double tol = 0.005) {
  if (curve.size() < 10) throw Error(Errc::invalid_params, "plateau search needs a grid of at least 10 points");
  const std::size_t w = (curve.size() + 9) / 10;
  Plateau p;
  for (std::size_t i = 0; i + w <= curve.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = i; j < i + w; ++j) s += curve[j];
    p.smoothed.push_back(s / static_cast<double>(w));
  }
  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= p.smoothed.size(); ++i) {
    const bool continues = i < p.smoothed.size() && std::abs(p.smoothed[i] - p.smoothed[i - 1]) < tol;
    if (continues) continue;
    if (i - run_start >= 2 && i - run_start > p.end - p.begin) {
      p.begin = run_start;
      p.end = i;
      p.found = true;
    }
    run_start = i;
  }
  if (p.found) {
    double s = 0.0;
    for (std::size_t i = p.begin; i < p.end; ++i) s += p.smoothed[i];
    p.value = s / static_cast<double>(p.end - p.begin);
  }
  return p;
}

/// Plateau rule over theta(u) on the quantile grid; levels where the
/// estimator is undefined are dropped. Falls back to the 95% quantile.
inline ExtremalEstimate plateau_theta(std::span<const double> series, std::span<const double> levels,
                                      const ThetaRule& rule = {}) {
  if (levels.size() < 10) throw Error(Errc::invalid_params, "plateau search needs a grid of at least 10 points");
  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> curve, us;
  for (double q : levels) {
    const double u = stats::quantile_sorted(sorted, q);
    try {
      curve.push_back(theta_at(inter_exceedances(series, u), rule));
      us.push_back(u);
    } catch (const Error&) {
    }
  }
  ExtremalEstimate e;
  e.estimator = ThetaEstimator::plateau;
  e.k_gap = rule.kind == ThetaEstimator::kgaps ? rule.K : 0;
  if (curve.size() >= 10) {
    const auto p = find_plateau(curve);
    if (p.found) {
      e.theta_hat = p.value;
      e.threshold = us[p.begin];
      return e;
    }
  }
  e.threshold = stats::quantile_sorted(sorted, 0.95);
  e.theta_hat = theta_at(inter_exceedances(series, e.threshold), rule);
  e.fallback = true;
  return e;
}

}  // namespace evonet::evt
