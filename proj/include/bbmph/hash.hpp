#pragma once

#include <bit>
#include <cassert>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string_view>

namespace bbmph {

// Mixing constants. They participate in the serialized-structure contract
// (changing them changes every built structure), so they are frozen here and
// documented in docs/FORMAT.md.
inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;
inline constexpr std::uint64_t kMixMul1 = 0xbf58476d1ce4e5b9ULL;
inline constexpr std::uint64_t kMixMul2 = 0x94d049bb133111ebULL;

/// 64-bit xorshift-multiply finalizer (Stafford variant 13, as used by
/// splitmix64). Bijective on 2^64.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * kMixMul1;
  z = (z ^ (z >> 27)) * kMixMul2;
  return z ^ (z >> 31);
}

/// Seed of the level-d hash function, derived from the master seed by the
/// same finalizer. Distinct levels get distinct, well-separated seeds.
constexpr std::uint64_t level_seed(std::uint64_t master,
                                   std::uint32_t level) noexcept {
  return mix64(master + (std::uint64_t{level} + 1) * kGoldenGamma);
}

namespace detail {

// Endian-agnostic little-endian load; folds to a plain 64-bit load on
// little-endian targets.
inline std::uint64_t load_le64(const unsigned char* p) noexcept {
  if constexpr (std::endian::native == std::endian::little) {
    std::uint64_t w;
    std::memcpy(&w, p, sizeof w);
    return w;
  } else {
    std::uint64_t w = 0;
    for (int i = 7; i >= 0; --i) {
      w = (w << 8) | p[i];
    }
    return w;
  }
}

}  // namespace detail

/// Hash of an arbitrary byte sequence under `seed`. The length is folded in
/// first, then the stream 8 bytes at a time (little-endian words), each
/// through the finalizer. Every input byte influences the output.
inline std::uint64_t hash_bytes(const void* data, std::size_t len,
                                std::uint64_t seed) noexcept {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = mix64(seed ^ (std::uint64_t{len} * kGoldenGamma));
  std::size_t n = len;
  while (n >= 8) {
    h = mix64(h ^ detail::load_le64(p));
    p += 8;
    n -= 8;
  }
  if (n > 0) {
    std::uint64_t tail = 0;
    for (std::size_t i = 0; i < n; ++i) {
      tail |= std::uint64_t{p[i]} << (8 * i);
    }
    h = mix64(h ^ tail);
  }
  return h;
}

inline std::uint64_t hash_bytes(std::string_view key,
                                std::uint64_t seed) noexcept {
  return hash_bytes(key.data(), key.size(), seed);
}

/// Hash of a 64-bit integer key; identical by construction to hashing its
/// 8-byte little-endian encoding, so integer and byte-string keys share one
/// contract.
constexpr std::uint64_t hash_u64(std::uint64_t key,
                                 std::uint64_t seed) noexcept {
  return mix64(mix64(seed ^ (8 * kGoldenGamma)) ^ key);
}

/// h_level(key) under the given master seed.
inline std::uint64_t hash_level(std::string_view key, std::uint32_t level,
                                std::uint64_t master) noexcept {
  return hash_bytes(key, level_seed(master, level));
}

constexpr std::uint64_t hash_level(std::uint64_t key, std::uint32_t level,
                                   std::uint64_t master) noexcept {
  return hash_u64(key, level_seed(master, level));
}

/// Slot of `key` in a level array of `array_size` bits.
template <typename Key>
std::uint64_t position(const Key& key, std::uint32_t level,
                       std::uint64_t master, std::uint64_t array_size) {
  if (array_size == 0) {
    throw std::invalid_argument("position: array_size must be positive");
  }
  return hash_level(key, level, master) % array_size;
}

// Overload pair used by the hot loops, which cache the per-level seed
// instead of rederiving it per key.
constexpr std::uint64_t key_hash(std::uint64_t key,
                                 std::uint64_t seed) noexcept {
  return hash_u64(key, seed);
}
inline std::uint64_t key_hash(std::string_view key,
                              std::uint64_t seed) noexcept {
  return hash_bytes(key, seed);
}

}  // namespace bbmph
