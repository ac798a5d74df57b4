#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "evonet/core.hpp"

namespace evonet::evt {

/// ARMAX process X_t = max((1 - theta) X_{t-1}, theta Z_t), X_0 = Z_0, with
/// iid unit Frechet Z. Its marginal is unit Frechet and its extremal index
/// is exactly theta.
inline std::vector<double> armax_series(std::size_t n, double theta, std::uint64_t rng_seed) {
  if (!(theta > 0.0 && theta <= 1.0)) throw Error(Errc::invalid_params, "ARMAX theta must lie in (0,1]");
  Rng rng(derive_seed(rng_seed, 7));
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double z = unit_frechet(rng);
    x[t] = t == 0 ? z : std::max((1.0 - theta) * x[t - 1], theta * z);
  }
  return x;
}

}  // namespace evonet::evt
