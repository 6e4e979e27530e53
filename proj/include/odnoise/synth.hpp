#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "odnoise/error.hpp"
#include "odnoise/od_core.hpp"
#include "odnoise/rng.hpp"

namespace odnoise {

/// Reference matrix with i.i.d. uniform (0, 1] entries rescaled to sum to one.
inline ShareMatrix generate_uniform(std::size_t n_stops, std::uint64_t seed) {
  if (n_stops < 2) fail(ErrorCode::invalid_argument, "n_stops must be >= 2, got " + std::to_string(n_stops));
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> cells(n_stops * n_stops);
  for (double& v : cells) {
    do {
      v = unit(rng);
    } while (v == 0.0);
  }
  const double sum = detail::stable_sum(cells);
  for (double& v : cells) v /= sum;
  return ShareMatrix(n_stops, std::move(cells));
}

}  // namespace odnoise
