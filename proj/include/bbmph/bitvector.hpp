#pragma once

#include <atomic>
#include <bit>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bbmph {

/// Immutable bit array with rank checkpoints sampled every `interval`
/// positions. checkpoints[j] holds the number of set bits in positions
/// [0, j*interval), so rank queries touch at most one checkpoint plus the
/// words of a single sample interval.
///
/// Word layout is fixed by the serialization format: 64-bit words, bit i
/// lives in word i/64 at bit offset i%64.
class RankedBits {
 public:
  RankedBits() = default;

  /// Assembles from parts; `words` and `checkpoints` must already satisfy
  /// the layout above (freeze() and the codec both construct through here).
  RankedBits(std::uint64_t bit_count, std::vector<std::uint64_t> words,
             std::vector<std::uint64_t> checkpoints, std::uint32_t interval)
      : bit_count_(bit_count),
        interval_(interval),
        words_(std::move(words)),
        checkpoints_(std::move(checkpoints)) {
    weight_ = 0;
    for (std::uint64_t w : words_) weight_ += std::popcount(w);
  }

  std::uint64_t size() const noexcept { return bit_count_; }
  std::uint32_t interval() const noexcept { return interval_; }

  /// Number of set bits.
  std::uint64_t weight() const noexcept { return weight_; }

  bool get(std::uint64_t i) const noexcept {
    return (words_[i >> 6] >> (i & 63)) & 1;
  }

  /// Number of set bits in positions [0, y] inclusive; the first set bit of
  /// the array has rank 1.
  std::uint64_t rank1_inclusive(std::uint64_t y) const {
    if (y >= bit_count_) {
      throw std::out_of_range("rank1_inclusive: index out of range");
    }
    const std::uint64_t start = (y / interval_) * interval_;
    std::uint64_t r = checkpoints_[y / interval_];
    std::uint64_t w = start >> 6;
    const std::uint64_t w_last = y >> 6;
    // First word of the interval may begin mid-word when the interval is
    // not a multiple of 64.
    std::uint64_t first = words_[w] & ~((std::uint64_t{1} << (start & 63)) - 1);
    while (w < w_last) {
      r += std::popcount(first);
      first = words_[++w];
    }
    const std::uint64_t keep = 63 - (y & 63);
    r += std::popcount((first << keep) >> keep);
    return r;
  }

  const std::vector<std::uint64_t>& words() const noexcept { return words_; }
  const std::vector<std::uint64_t>& checkpoints() const noexcept {
    return checkpoints_;
  }

  static std::uint64_t word_count(std::uint64_t bit_count) noexcept {
    return (bit_count + 63) / 64;
  }
  static std::uint64_t checkpoint_count(std::uint64_t bit_count,
                                        std::uint32_t interval) noexcept {
    return (bit_count + interval - 1) / interval;
  }

 private:
  std::uint64_t bit_count_ = 0;
  std::uint32_t interval_ = 512;
  std::uint64_t weight_ = 0;
  std::vector<std::uint64_t> words_;
  std::vector<std::uint64_t> checkpoints_;
};

/// The level-build working state: a 2-bit cell per position encoding
/// (placed, collided). Cells move EMPTY -> PLACED -> COLLIDED and stay
/// there, so the final state depends only on how many insertions hit the
/// position, never on their interleaving:
///
///   0 insertions -> EMPTY, 1 -> PLACED, >= 2 -> COLLIDED.
///
/// The (placed=1, collided=1) encoding is unreachable. Both logical bits of
/// a cell live in the same machine word and are updated by one
/// compare-exchange, which is what makes concurrent record() calls from any
/// number of workers yield byte-identical frozen arrays.
class AtomicBitPair {
 public:
  static constexpr std::uint64_t kEmpty = 0b00;
  static constexpr std::uint64_t kPlaced = 0b01;
  static constexpr std::uint64_t kCollided = 0b10;

  explicit AtomicBitPair(std::uint64_t bit_count)
      : bit_count_(bit_count), words_((bit_count + 31) / 32) {
    words_ = std::max<std::uint64_t>(words_, 1);
    cells_ = std::make_unique<std::atomic<std::uint64_t>[]>(words_);
    for (std::uint64_t i = 0; i < words_; ++i) {
      cells_[i].store(0, std::memory_order_relaxed);
    }
  }

  std::uint64_t size() const noexcept { return bit_count_; }

  /// Registers one key hashing to position i. Safe for concurrent callers.
  void record(std::uint64_t i) {
    if (i >= bit_count_) {
      throw std::out_of_range("record: position out of range");
    }
    std::atomic<std::uint64_t>& word = cells_[i >> 5];
    const unsigned shift = (i & 31) * 2;
    std::uint64_t cur = word.load(std::memory_order_relaxed);
    for (;;) {
      const std::uint64_t state = (cur >> shift) & 3;
      if (state == kCollided) {
        return;  // third or later key at i: no-op
      }
      const std::uint64_t next = (state == kEmpty) ? kPlaced : kCollided;
      const std::uint64_t desired =
          (cur & ~(std::uint64_t{3} << shift)) | (next << shift);
      if (word.compare_exchange_weak(cur, desired, std::memory_order_relaxed,
                                     std::memory_order_relaxed)) {
        return;
      }
    }
  }

  /// Current state of position i (test/diagnostic helper; not synchronized
  /// with concurrent record calls).
  std::uint64_t state(std::uint64_t i) const {
    if (i >= bit_count_) {
      throw std::out_of_range("state: position out of range");
    }
    const std::uint64_t w = cells_[i >> 5].load(std::memory_order_relaxed);
    return (w >> ((i & 31) * 2)) & 3;
  }

  /// Discards the collision bits and produces the immutable placed-bit
  /// array with its rank checkpoints. Requires that no record() call is in
  /// flight.
  RankedBits freeze(std::uint32_t interval) const {
    const std::uint64_t n_words = RankedBits::word_count(bit_count_);
    std::vector<std::uint64_t> bits(n_words, 0);
    for (std::uint64_t w = 0; w < n_words; ++w) {
      const std::uint64_t lo =
          cells_[2 * w].load(std::memory_order_relaxed);
      const std::uint64_t hi =
          (2 * w + 1 < words_)
              ? cells_[2 * w + 1].load(std::memory_order_relaxed)
              : 0;
      // Placed cells have the low bit of their 2-bit lane set; gather those
      // lane bits into a contiguous word.
      bits[w] = compress_even_bits(lo) | (compress_even_bits(hi) << 32);
    }

    const std::uint64_t n_cp =
        RankedBits::checkpoint_count(bit_count_, interval);
    std::vector<std::uint64_t> checkpoints(n_cp, 0);
    std::uint64_t running = 0;
    std::uint64_t next_cp = 0;
    for (std::uint64_t pos = 0; pos < bit_count_; pos += 64) {
      while (next_cp < n_cp &&
             std::uint64_t{next_cp} * interval < pos + 64 &&
             std::uint64_t{next_cp} * interval >= pos) {
        // Checkpoint falls inside this word: count the bits below it.
        const std::uint64_t boundary = std::uint64_t{next_cp} * interval;
        const unsigned off = boundary & 63;
        const std::uint64_t below =
            off == 0 ? 0
                     : std::popcount(bits[pos >> 6] &
                                     ((std::uint64_t{1} << off) - 1));
        checkpoints[next_cp] = running + below;
        ++next_cp;
      }
      running += std::popcount(bits[pos >> 6]);
    }

    return RankedBits(bit_count_, std::move(bits), std::move(checkpoints),
                      interval);
  }

 private:
  // Extracts the 32 even-position bits of x into the low half (Morton
  // decode step).
  static std::uint64_t compress_even_bits(std::uint64_t x) noexcept {
    x &= 0x5555555555555555ULL;
    x = (x | (x >> 1)) & 0x3333333333333333ULL;
    x = (x | (x >> 2)) & 0x0f0f0f0f0f0f0f0fULL;
    x = (x | (x >> 4)) & 0x00ff00ff00ff00ffULL;
    x = (x | (x >> 8)) & 0x0000ffff0000ffffULL;
    x = (x | (x >> 16)) & 0x00000000ffffffffULL;
    return x;
  }

  std::uint64_t bit_count_;
  std::uint64_t words_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> cells_;
};

}  // namespace bbmph
