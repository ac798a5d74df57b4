#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace evonet {

enum class Errc {
  self_loop,
  unknown_node,
  parse_error,
  degenerate_spec,
  stub_match_failure,
  invalid_params,
  degenerate_graph,
  empty_graph,
  insufficient_exceedances,
  non_positive_data,
  ties_at_cutoff,
  too_few_exceedances,
  zero_denominator,
  all_gaps_zero,
  no_exceedances,
  single_exceedance,
  empty_gap_set,
  length_mismatch,
  invalid_ordering,
  no_linked_community,
  io_error,
};

inline std::string_view errc_name(Errc e) noexcept {
  switch (e) {
    case Errc::self_loop: return "SelfLoop";
    case Errc::unknown_node: return "UnknownNode";
    case Errc::parse_error: return "ParseError";
    case Errc::degenerate_spec: return "DegenerateSpec";
    case Errc::stub_match_failure: return "StubMatchFailure";
    case Errc::invalid_params: return "InvalidParams";
    case Errc::degenerate_graph: return "DegenerateGraph";
    case Errc::empty_graph: return "EmptyGraph";
    case Errc::insufficient_exceedances: return "InsufficientExceedances";
    case Errc::non_positive_data: return "NonPositiveData";
    case Errc::ties_at_cutoff: return "TiesAtCutoff";
    case Errc::too_few_exceedances: return "TooFewExceedances";
    case Errc::zero_denominator: return "ZeroDenominator";
    case Errc::all_gaps_zero: return "AllGapsZero";
    case Errc::no_exceedances: return "NoExceedances";
    case Errc::single_exceedance: return "SingleExceedance";
    case Errc::empty_gap_set: return "SingleGapSetEmpty";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::invalid_ordering: return "InvalidOrdering";
    case Errc::no_linked_community: return "NoLinkedCommunity";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

/// Every library failure is reported through this exception; `code()` tells
/// callers which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// ---------------------------------------------------------------------------
// Random numbers.
//
// std::*_distribution output is implementation-defined, so every variate the
// library draws goes through these helpers on top of mt19937_64, whose output
// sequence is fixed by the standard. Results are therefore bit-reproducible
// for a given seed on any conforming toolchain.

using Rng = std::mt19937_64;

/// splitmix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Uniform on [0, 1).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0, 1].
inline double uniform_open0(Rng& rng) { return 1.0 - uniform01(rng); }

/// Uniform integer on [0, n). Lemire's nearly-divisionless method.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw Error(Errc::invalid_params, "uniform_index with n = 0");
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Pareto with unit scale: P(X > x) = x^{-alpha}, x >= 1.
inline double pareto(Rng& rng, double alpha) {
  return std::pow(uniform_open0(rng), -1.0 / alpha);
}

/// Unit Frechet: P(X <= x) = exp(-1/x).
inline double unit_frechet(Rng& rng) {
  double u = uniform01(rng);
  while (u == 0.0) u = uniform01(rng);
  return -1.0 / std::log(u);
}

inline double exponential(Rng& rng, double rate = 1.0) {
  return -std::log(uniform_open0(rng)) / rate;
}

inline double standard_normal(Rng& rng) {
  // Box-Muller; one of the pair is discarded to keep the helper stateless.
  const double u1 = uniform_open0(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <class It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace evonet
