#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bbmph/errors.hpp"
#include "bbmph/hash.hpp"
#include "bbmph/keys.hpp"

// Deterministic synthetic key streams for benchmarks and tests. Keys are
// derived from a counter through bijective mixing, so they are distinct by
// construction and can be regenerated on the fly at any scale without
// storing them.

namespace bbmph {

// Odd step for the counter walk; distinct from the hashing constants so the
// generated keys share no structure with the level hash functions.
inline constexpr std::uint64_t kKeyStreamStep = 0xd1342543de82ef95ULL;

/// i-th key of the stream identified by `seed`. The counter walk
/// seed + (i+1)*step is injective mod 2^64 and mix64 is a bijection, so a
/// stream never repeats a key.
constexpr std::uint64_t synthetic_key(std::uint64_t seed,
                                      std::uint64_t i) noexcept {
  return mix64(seed + (i + 1) * kKeyStreamStep);
}

/// Rewindable stream of `n` distinct pseudo-random 64-bit keys.
class IntKeySource final : public KeySource<std::uint64_t> {
 public:
  IntKeySource(std::uint64_t n, std::uint64_t seed) : n_(n), seed_(seed) {}

  std::uint64_t count() const override { return n_; }

  std::unique_ptr<KeyStream<std::uint64_t>> open() const override {
    return std::make_unique<Stream>(n_, seed_);
  }

 private:
  class Stream final : public KeyStream<std::uint64_t> {
   public:
    Stream(std::uint64_t n, std::uint64_t seed) : n_(n), seed_(seed) {}

    std::size_t read(std::span<std::uint64_t> out) override {
      std::size_t filled = 0;
      while (filled < out.size() && next_ < n_) {
        out[filled++] = synthetic_key(seed_, next_++);
      }
      return filled;
    }

   private:
    std::uint64_t n_;
    std::uint64_t seed_;
    std::uint64_t next_ = 0;
  };

  std::uint64_t n_;
  std::uint64_t seed_;
};

/// Materializes the first n keys of a stream into a vector.
inline std::vector<std::uint64_t> generate_keys(std::uint64_t n,
                                                std::uint64_t seed) {
  std::vector<std::uint64_t> keys;
  keys.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) keys.push_back(synthetic_key(seed, i));
  return keys;
}

namespace detail {

inline constexpr std::size_t kAlphabetSize = 62;

// [A-Za-z0-9] permuted by a seed-driven Fisher-Yates so generated words do
// not expose the underlying counter encoding.
inline std::array<char, kAlphabetSize> shuffled_alphabet(std::uint64_t seed) {
  std::array<char, kAlphabetSize> alpha{};
  std::size_t k = 0;
  for (char c = 'A'; c <= 'Z'; ++c) alpha[k++] = c;
  for (char c = 'a'; c <= 'z'; ++c) alpha[k++] = c;
  for (char c = '0'; c <= '9'; ++c) alpha[k++] = c;
  std::uint64_t state = seed;
  for (std::size_t i = kAlphabetSize - 1; i > 0; --i) {
    state = mix64(state + kGoldenGamma);
    std::swap(alpha[i], alpha[state % (i + 1)]);
  }
  return alpha;
}

// 62^11 > 2^64, so 11 alphabet digits encode any u64 injectively.
inline constexpr std::size_t kDigitsForU64 = 11;

}  // namespace detail

/// Rewindable stream of `n` distinct ASCII strings of exactly `len` bytes.
///
/// Distinctness is structural: each string embeds a bijective base-62
/// encoding of a distinct 64-bit value (or of the index itself for short
/// strings), written through the seed-permuted alphabet; remaining bytes
/// are pseudo-random filler.
class StringKeySource final : public KeySource<std::string> {
 public:
  StringKeySource(std::uint64_t n, std::size_t len, std::uint64_t seed)
      : n_(n), len_(len), seed_(seed),
        alphabet_(detail::shuffled_alphabet(seed)) {
    if (len_ == 0) {
      throw ConfigError("string length must be >= 1");
    }
    if (len_ < detail::kDigitsForU64) {
      // Capacity check: need kAlphabetSize^len >= n. len <= 10 here, so
      // the power fits in 64 bits.
      std::uint64_t capacity = 1;
      for (std::size_t i = 0; i < len_; ++i) {
        capacity *= detail::kAlphabetSize;
      }
      if (n_ > capacity) {
        throw ConfigError(
            "cannot generate " + std::to_string(n_) +
            " distinct strings of length " + std::to_string(len_));
      }
    }
  }

  std::uint64_t count() const override { return n_; }

  std::unique_ptr<KeyStream<std::string>> open() const override {
    return std::make_unique<Stream>(*this);
  }

 private:
  class Stream final : public KeyStream<std::string> {
   public:
    explicit Stream(const StringKeySource& src) : src_(&src) {}

    std::size_t read(std::span<std::string> out) override {
      std::size_t filled = 0;
      while (filled < out.size() && next_ < src_->n_) {
        out[filled++] = src_->make_string(next_++);
      }
      return filled;
    }

   private:
    const StringKeySource* src_;
    std::uint64_t next_ = 0;
  };

  std::string make_string(std::uint64_t i) const {
    std::string s(len_, '\0');
    const std::size_t digits = std::min(len_, detail::kDigitsForU64);
    std::uint64_t v =
        len_ >= detail::kDigitsForU64 ? synthetic_key(seed_, i) : i;
    for (std::size_t j = 0; j < digits; ++j) {
      s[j] = alphabet_[v % detail::kAlphabetSize];
      v /= detail::kAlphabetSize;
    }
    std::uint64_t filler = mix64(synthetic_key(seed_, i) ^ kKeyStreamStep);
    for (std::size_t j = digits; j < len_; ++j) {
      filler = mix64(filler + kGoldenGamma);
      s[j] = alphabet_[filler % detail::kAlphabetSize];
    }
    return s;
  }

  std::uint64_t n_;
  std::size_t len_;
  std::uint64_t seed_;
  std::array<char, detail::kAlphabetSize> alphabet_;
};

/// Materializes the first n strings of a corpus into a vector.
inline std::vector<std::string> generate_strings(std::uint64_t n,
                                                 std::size_t len,
                                                 std::uint64_t seed) {
  StringKeySource src(n, len, seed);
  std::vector<std::string> keys(n);
  auto stream = src.open();
  std::size_t got = stream->read(keys);
  keys.resize(got);
  return keys;
}

}  // namespace bbmph
