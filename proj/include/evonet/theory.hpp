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
#include "evonet/evt/series.hpp"
#include "evonet/stats.hpp"
#include "json.hpp"

namespace evonet {

struct ColumnSpec {
  double tail_index = 1.0;
  double theta = 1.0;
  bool stationary = true;
};

/// Ragged matrix of row series Y_{n,1..N_n} with per-row personalization Q_n.
struct SeriesMatrix {
  std::vector<std::vector<double>> rows;
  std::vector<double> q;
  std::vector<ColumnSpec> columns;

  std::size_t row_count() const noexcept { return rows.size(); }
  std::size_t column_count() const noexcept { return columns.size(); }

  /// Entries of column j over the rows long enough to have one.
  std::vector<double> column(std::size_t j) const {
    std::vector<double> out;
    for (const auto& r : rows)
      if (j < r.size()) out.push_back(r[j]);
    return out;
  }
};

enum class DominoKind : std::uint8_t { sum, max };

/// One iteration of the domino recursion: entry j of each output row is
/// c * (sum or max of the input row from j to its end) combined with Q
/// (added for sums, maxed for maxima). Row lengths are kept.
inline SeriesMatrix domino_step(const SeriesMatrix& m, double c, DominoKind kind) {
  if (m.rows.empty()) throw Error(Errc::invalid_params, "domino step on an empty matrix");
  if (m.q.size() != m.rows.size()) throw Error(Errc::length_mismatch, "one Q value per row required");
  SeriesMatrix out;
  out.q = m.q;
  out.columns = m.columns;
  out.rows.resize(m.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    const auto& row = m.rows[i];
    auto& dst = out.rows[i];
    dst.resize(row.size());
    double acc = kind == DominoKind::sum ? 0.0 : -std::numeric_limits<double>::infinity();
    for (std::size_t j = row.size(); j-- > 0;) {
      acc = kind == DominoKind::sum ? acc + row[j] : std::max(acc, row[j]);
      dst[j] = kind == DominoKind::sum ? c * acc + m.q[i] : std::max(c * acc, m.q[i]);
    }
  }
  return out;
}

/// Row-length law for synthetic matrices, truncated to the column count.
struct RowLengthLaw {
  enum class Kind : std::uint8_t { full, uniform } kind = Kind::full;
  std::size_t min_length = 1;
};

struct SynthOptions {
  std::size_t rows = 1000;
  RowLengthLaw lengths{};
  double q = 0.15;
  std::uint64_t rng_seed = 1;
};

/// Synthetic test bed. Column j is iid Pareto(k_j) when theta_j = 1 and an
/// ARMAX(theta_j) series mapped to tail index k_j (x -> x^{1/k_j}, which
/// keeps the extremal index) otherwise. A non-stationary column has its
/// scale grow linearly from 1 to 2 across rows.
inline SeriesMatrix synth_matrix(std::span<const ColumnSpec> specs, const SynthOptions& opt) {
  if (specs.empty()) throw Error(Errc::invalid_params, "at least one column spec required");
  if (opt.rows == 0) throw Error(Errc::invalid_params, "at least one row required");
  const std::size_t C = specs.size();
  SeriesMatrix m;
  m.columns.assign(specs.begin(), specs.end());
  m.q.assign(opt.rows, opt.q);
  std::vector<std::vector<double>> cols(C);
  for (std::size_t j = 0; j < C; ++j) {
    const auto& s = specs[j];
    if (!(s.tail_index > 0.0)) throw Error(Errc::invalid_params, "tail index must be positive");
    const std::uint64_t seed = derive_seed(opt.rng_seed, 100 + j);
    if (s.theta < 1.0) {
      cols[j] = evt::armax_series(opt.rows, s.theta, seed);
      for (double& x : cols[j]) x = std::pow(x, 1.0 / s.tail_index);
    } else {
      Rng rng(seed);
      cols[j].resize(opt.rows);
      for (double& x : cols[j]) x = pareto(rng, s.tail_index);
    }
    if (!s.stationary)
      for (std::size_t i = 0; i < opt.rows; ++i)
        cols[j][i] *= 1.0 + static_cast<double>(i) / static_cast<double>(opt.rows);
  }
  Rng len_rng(derive_seed(opt.rng_seed, 99));
  const std::size_t lo = std::clamp<std::size_t>(opt.lengths.min_length, 1, C);
  m.rows.resize(opt.rows);
  for (std::size_t i = 0; i < opt.rows; ++i) {
    const std::size_t len =
        opt.lengths.kind == RowLengthLaw::Kind::full ? C : lo + static_cast<std::size_t>(uniform_index(len_rng, C - lo + 1));
    m.rows[i].resize(len);
    for (std::size_t j = 0; j < len; ++j) m.rows[i][j] = cols[j][i];
  }
  return m;
}

/// Sets column j to zero on rows [begin, end).
inline void plant_zeros(SeriesMatrix& m, std::size_t j, std::size_t begin, std::size_t end) {
  end = std::min(end, m.rows.size());
  for (std::size_t i = begin; i < end; ++i)
    if (j < m.rows[i].size()) m.rows[i][j] = 0.0;
}

/// Row reordering into blocks, each block non-zero in one dominating column.
struct BlockPermutation {
  std::vector<std::size_t> order;        // new position -> old row
  std::vector<std::size_t> block_begin;  // one entry per dominating column, plus end
  std::size_t uncovered = 0;             // rows zero in every dominating column, placed last
};

/// Scans the zero pattern: each row joins the block of the first dominating
/// column where it is non-zero; rows are stable within a block.
inline BlockPermutation block_permutation(const SeriesMatrix& m, std::span<const std::size_t> dominating) {
  const std::size_t B = dominating.size();
  std::vector<std::vector<std::size_t>> blocks(B + 1);
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    std::size_t b = B;
    for (std::size_t t = 0; t < B; ++t) {
      const std::size_t j = dominating[t];
      if (j < m.rows[i].size() && m.rows[i][j] != 0.0) {
        b = t;
        break;
      }
    }
    blocks[b].push_back(i);
  }
  BlockPermutation p;
  for (std::size_t b = 0; b <= B; ++b) {
    p.block_begin.push_back(p.order.size());
    p.order.insert(p.order.end(), blocks[b].begin(), blocks[b].end());
  }
  p.uncovered = blocks[B].size();
  return p;
}

inline SeriesMatrix permute_rows(const SeriesMatrix& m, std::span<const std::size_t> order) {
  SeriesMatrix out;
  out.columns = m.columns;
  for (std::size_t i : order) {
    out.rows.push_back(m.rows.at(i));
    out.q.push_back(m.q.at(i));
  }
  return out;
}

struct TheoryHelpers {
  double chi0 = 0.0;
  double chi = 0.0;
  std::uint64_t l_n = 0;
  double d_n = 0.0;
};

/// chi0 = (k - k1) / (k1 (k + 1)), l_n = floor(n^chi), d_n = min(C, l_n).
/// chi defaults to chi0 / 2 and must lie in (0, chi0).
inline TheoryHelpers theory_helpers(double k1, double k, std::uint64_t n, double C, std::optional<double> chi = {}) {
  if (!(k1 > 0.0)) throw Error(Errc::invalid_params, "k1 must be positive");
  if (!(k1 < k)) throw Error(Errc::invalid_ordering, "need k1 < k");
  if (n < 2) throw Error(Errc::invalid_params, "n must be >= 2");
  if (!(C > 1.0)) throw Error(Errc::invalid_params, "C must exceed 1");
  TheoryHelpers h;
  h.chi0 = (k - k1) / (k1 * (k + 1.0));
  h.chi = chi.value_or(h.chi0 / 2.0);
  if (!(h.chi > 0.0 && h.chi < h.chi0)) throw Error(Errc::invalid_params, "chi must lie in (0, chi0)");
  // Nudge up by an ulp-scale epsilon so exact integer powers are not lost to rounding.
  h.l_n = static_cast<std::uint64_t>(std::floor(std::pow(static_cast<double>(n), h.chi) * (1.0 + 1e-12)));
  h.d_n = std::min(C, static_cast<double>(h.l_n));
  return h;
}

/// Pairwise dependence and maxima report over column series.
struct DominanceReport {
  std::vector<std::vector<double>> ratios;  // joint / min marginal exceedance share
  double max_ratio = 0.0;
  double spread = 0.0;  // max - min off-diagonal ratio
  std::vector<double> maxima;
  std::vector<std::size_t> by_maximum;  // column indices, largest maximum first
  std::size_t a4_candidate = 0;
  bool weak_dependence = true;  // every ratio <= tolerance
};

/// Each column is thresholded at its own empirical quantile `level`; rows
/// are aligned up to the shortest column.
inline DominanceReport dominance_diagnostics(std::span<const std::vector<double>> columns, double level,
                                             double tolerance = 0.1) {
  if (columns.size() < 2) throw Error(Errc::invalid_params, "need at least two columns");
  std::size_t n = columns[0].size();
  for (const auto& c : columns) n = std::min(n, c.size());
  if (n == 0) throw Error(Errc::invalid_params, "empty column");
  const std::size_t d = columns.size();
  std::vector<std::vector<char>> above(d, std::vector<char>(n));
  std::vector<double> marg(d, 0.0);
  DominanceReport r;
  for (std::size_t j = 0; j < d; ++j) {
    const std::span<const double> col(columns[j].data(), n);
    const double u = stats::quantile(col, level);
    for (std::size_t i = 0; i < n; ++i) {
      above[j][i] = col[i] > u;
      marg[j] += above[j][i];
    }
    r.maxima.push_back(*std::max_element(col.begin(), col.end()));
  }
  r.ratios.assign(d, std::vector<double>(d, 1.0));
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b) {
      double joint = 0.0;
      for (std::size_t i = 0; i < n; ++i) joint += above[a][i] && above[b][i];
      const double den = std::min(marg[a], marg[b]);
      const double ratio = den > 0 ? joint / den : 0.0;
      r.ratios[a][b] = r.ratios[b][a] = ratio;
      r.max_ratio = std::max(r.max_ratio, ratio);
      lo = std::min(lo, ratio);
    }
  r.spread = r.max_ratio - lo;
  r.weak_dependence = r.max_ratio <= tolerance;
  r.by_maximum.resize(d);
  for (std::size_t j = 0; j < d; ++j) r.by_maximum[j] = j;
  std::stable_sort(r.by_maximum.begin(), r.by_maximum.end(),
                   [&](std::size_t a, std::size_t b) { return r.maxima[a] > r.maxima[b]; });
  r.a4_candidate = r.by_maximum.front();
  return r;
}

/// Estimated indices of one community (a "column").
struct CommunityIndices {
  double k_hat = 0.0;
  double k_lo = 0.0;  // bootstrap CI; equal to k_hat when unknown
  double k_hi = 0.0;
  std::optional<double> theta;
  bool stationary = true;
  double sample_max = 0.0;
};

enum class Basis : std::uint8_t { single_dominating, several_independent, several_dependent };

inline const char* basis_name(Basis b) {
  switch (b) {
    case Basis::single_dominating: return "Prop1(i)";
    case Basis::several_independent: return "Prop1(ii)";
    case Basis::several_dependent: return "T3";
  }
  return "?";
}

struct TheoryPrediction {
  std::size_t class_index = 0;
  double k_pred = 0.0;
  std::optional<double> theta_pr;   // nullopt means undefined
  std::optional<double> theta_mlm;
  std::vector<std::uint32_t> dominating;
  Basis basis = Basis::single_dominating;
};

struct PredictOptions {
  // Pairwise A2-surrogate ratios between communities; empty means unchecked,
  // in which case several dominating communities leave the PageRank theta undefined.
  std::vector<std::vector<double>> dependence;
  double dependence_tolerance = 0.1;
};

inline bool overlaps(const CommunityIndices& a, const CommunityIndices& b) {
  const double alo = std::min(a.k_lo, a.k_hat), ahi = std::max(a.k_hi, a.k_hat);
  const double blo = std::min(b.k_lo, b.k_hat), bhi = std::max(b.k_hi, b.k_hat);
  return alo <= bhi && blo <= ahi;
}

/// Tail and extremal indices of each class from those of its linked
/// communities. The minimum tail index wins; communities whose CIs overlap
/// the minimum's share it. One dominating community passes its theta on.
/// With several, the MLM takes the theta of the one with the largest sample
/// maximum, and PageRank does the same only if the dominating communities
/// are pairwise weakly dependent. A non-stationary dominating community
/// leaves theta undefined.
inline std::vector<TheoryPrediction> predict_indices(std::span<const CommunityIndices> communities,
                                                     std::span<const std::vector<std::uint32_t>> classes,
                                                     const PredictOptions& opt = {}) {
  std::vector<TheoryPrediction> out;
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    const auto& links = classes[ci];
    if (links.empty()) throw Error(Errc::no_linked_community, "class " + std::to_string(ci) + " links to no community");
    for (auto c : links)
      if (c >= communities.size()) throw Error(Errc::no_linked_community, "class links to unknown community " + std::to_string(c));
    std::uint32_t argmin = links.front();
    for (auto c : links)
      if (communities[c].k_hat < communities[argmin].k_hat) argmin = c;
    TheoryPrediction p;
    p.class_index = ci;
    p.k_pred = communities[argmin].k_hat;
    for (auto c : links)
      if (c == argmin || overlaps(communities[c], communities[argmin])) p.dominating.push_back(c);
    std::sort(p.dominating.begin(), p.dominating.end());
    p.dominating.erase(std::unique(p.dominating.begin(), p.dominating.end()), p.dominating.end());

    bool stationary = true;
    for (auto c : p.dominating) stationary = stationary && communities[c].stationary;
    if (p.dominating.size() == 1) {
      p.basis = Basis::single_dominating;
      if (stationary) p.theta_pr = p.theta_mlm = communities[argmin].theta;
    } else {
      std::uint32_t top = p.dominating.front();
      for (auto c : p.dominating)
        if (communities[c].sample_max > communities[top].sample_max) top = c;
      bool independent = !opt.dependence.empty();
      for (std::size_t a = 0; independent && a < p.dominating.size(); ++a)
        for (std::size_t b = a + 1; b < p.dominating.size(); ++b) {
          const auto i = p.dominating[a], j = p.dominating[b];
          if (i >= opt.dependence.size() || j >= opt.dependence[i].size() ||
              !(opt.dependence[i][j] <= opt.dependence_tolerance)) {
            independent = false;
            break;
          }
        }
      p.basis = independent ? Basis::several_independent : Basis::several_dependent;
      if (stationary) {
        p.theta_mlm = communities[top].theta;
        if (independent) p.theta_pr = communities[top].theta;
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline nlohmann::json to_json(const TheoryPrediction& p) {
  const auto theta = [](const std::optional<double>& t) -> nlohmann::json {
    if (t) return *t;
    return "undefined";
  };
  return nlohmann::json{{"class", p.class_index},
                        {"k_pred", p.k_pred},
                        {"theta_pred", theta(p.theta_pr)},
                        {"theta_pred_mlm", theta(p.theta_mlm)},
                        {"dominating_set", p.dominating},
                        {"basis", basis_name(p.basis)}};
}

}  // namespace evonet
