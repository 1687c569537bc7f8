#pragma once

#include <cmath>
#include <cstdint>

// Closed-form predictors for the cascade's expected behaviour, used by the
// CLI to print expected-vs-observed tables and by the tests as reference
// values. All are expectations; callers that compare against measurements
// should wrap them in sampling-noise bands.

namespace bbmph::analysis {

/// Expected fraction of a level's keys that land in a collision-free slot.
inline double placed_fraction(double gamma) {
  return std::exp(-1.0 / gamma);
}

/// Expected |F_d| / N: each level keeps a (1 - e^{-1/gamma}) fraction of
/// its keys unplaced.
inline double predict_level_fraction(double gamma, std::uint32_t d) {
  return std::pow(1.0 - std::exp(-1.0 / gamma), static_cast<double>(d));
}

/// Expected structure size in bits per key: gamma * e^{1/gamma} for the
/// arrays themselves, times the rank-checkpoint overhead 1 + 64/interval.
inline double predict_bits_per_key(double gamma, std::uint32_t rank_interval) {
  return (1.0 + 64.0 / static_cast<double>(rank_interval)) * gamma *
         std::exp(1.0 / gamma);
}

/// Peak construction memory over final structure size. Construction of
/// level d holds the frozen arrays below it plus a 2-bit working array, so
/// memory either climbs towards the final size (small gamma) or starts at
/// its maximum 2 e^{-1/gamma} with level 0 (gamma above 1/ln 2).
inline double predict_peak_memory_ratio(double gamma) {
  return std::max(1.0, 2.0 * std::exp(-1.0 / gamma));
}

/// Peak simultaneous spill, as a fraction of the input key volume: the
/// disk-spill strategy holds F_1 and F_2 together while building level 1.
inline double predict_peak_spill_ratio(double gamma) {
  const double q = 1.0 - std::exp(-1.0 / gamma);
  return q + q * q;
}

/// Expected mean of (level + 1) over all keys, e^{1/gamma}; equivalently
/// the expected number of hash evaluations per query.
inline double predict_mean_level(double gamma) {
  return std::exp(1.0 / gamma);
}

}  // namespace bbmph::analysis
