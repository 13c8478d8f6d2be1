#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace sdc::detail {

// Top 53 bits of the engine output, scaled to [0, 1). Unlike
// std::uniform_real_distribution this mapping is pinned by the standard's
// definition of mt19937_64, so the same seed gives the same stream everywhere.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Inverse-CDF walk over one matrix row. Categories with probability zero are
// never returned: the cumulative sum does not move across them, so the strict
// comparison cannot fire there. If rounding makes the row total fall a hair
// short of the draw, the last positive category takes the overflow.
inline std::size_t sample_row(std::span<const double> probs, double draw) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t v = 0; v < probs.size(); ++v) {
    if (probs[v] > 0.0) last_positive = v;
    cumulative += probs[v];
    if (draw < cumulative) return v;
  }
  return last_positive;
}

}  // namespace sdc::detail
