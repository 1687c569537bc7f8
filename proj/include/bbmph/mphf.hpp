#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "bbmph/bitvector.hpp"
#include "bbmph/errors.hpp"
#include "bbmph/hash.hpp"
#include "bbmph/keys.hpp"
#include "bbmph/parallel.hpp"
#include "bbmph/spill.hpp"

namespace bbmph {

struct BuildConfig {
  /// Oversizing factor: each level array has ceil(gamma * |F_d|) bits.
  /// Larger values trade structure size for fewer collisions, so faster
  /// builds and queries.
  double gamma = 2.0;
  unsigned workers = 1;
  /// Maximum number of cascade levels; keys still unplaced after the last
  /// level land in the fallback table.
  std::uint32_t max_levels = 25;
  std::uint32_t rank_interval = 512;
  Strategy strategy = Strategy::kDiskSpill;
  /// Under disk-spill, level sets expected to hold at most this fraction of
  /// the input stay in memory.
  double spill_to_memory_threshold = 0.02;
  std::uint64_t seed = 0;
  /// Directory for spill files; empty means the system temp directory.
  std::filesystem::path temp_dir;
};

struct LevelReport {
  std::uint64_t key_count = 0;   // |F_d|
  std::uint64_t array_bits = 0;  // |A_d|
  std::uint64_t placed = 0;      // weight(A_d)
  double record_seconds = 0;
  double filter_seconds = 0;
};

struct BuildReport {
  std::vector<LevelReport> levels;
  std::uint64_t fallback_count = 0;
  /// max over d of (sum_{i<d} |A_i| + 2 |A_d|): the frozen arrays plus the
  /// 2-bit working pair of the level under construction.
  std::uint64_t peak_bits_in_memory = 0;
  std::uint64_t peak_spill_bytes = 0;
  double fallback_seconds = 0;
  double total_seconds = 0;

  std::vector<std::uint64_t> level_sizes() const {
    std::vector<std::uint64_t> out;
    out.reserve(levels.size());
    for (const auto& l : levels) out.push_back(l.key_count);
    return out;
  }
};

namespace detail {

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

}  // namespace detail

/// The queryable structure: the frozen level arrays, their cumulative
/// weights, and the fallback table for keys unplaced after the last level.
/// Integer and byte-string keys share one contract (a 64-bit key hashes as
/// its 8-byte little-endian encoding), so a single structure answers both
/// query forms. Immutable after construction; any number of concurrent
/// readers is fine.
class Mphf {
 public:
  using FallbackEntry = std::pair<std::string, std::uint64_t>;

  Mphf() = default;

  Mphf(double gamma, std::uint64_t seed, std::uint32_t rank_interval,
       std::uint64_t n, std::vector<RankedBits> levels,
       std::vector<FallbackEntry> fallback_entries)
      : gamma_(gamma), seed_(seed), rank_interval_(rank_interval), n_(n),
        levels_(std::move(levels)),
        fallback_entries_(std::move(fallback_entries)) {
    cumulative_.reserve(levels_.size() + 1);
    cumulative_.push_back(0);
    for (const RankedBits& a : levels_) {
      cumulative_.push_back(cumulative_.back() + a.weight());
    }
    level_seeds_.reserve(levels_.size());
    for (std::uint32_t d = 0; d < levels_.size(); ++d) {
      level_seeds_.push_back(level_seed(seed_, d));
    }
    fallback_.reserve(fallback_entries_.size());
    for (const auto& [key, index] : fallback_entries_) {
      fallback_.emplace(key, index);
    }
  }

  std::uint64_t key_count() const noexcept { return n_; }
  double gamma() const noexcept { return gamma_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint32_t rank_interval() const noexcept { return rank_interval_; }
  std::uint32_t level_count() const noexcept {
    return static_cast<std::uint32_t>(levels_.size());
  }
  const std::vector<RankedBits>& levels() const noexcept { return levels_; }
  const std::vector<FallbackEntry>& fallback_entries() const noexcept {
    return fallback_entries_;
  }

  /// Index of a key that was in the build set, in [0, n). For any other key
  /// the result is unspecified: typically an arbitrary in-range value,
  /// occasionally NotInFallbackError. No membership check is performed.
  std::uint64_t index_of(std::uint64_t key) const { return query(key); }
  std::uint64_t index_of(std::string_view key) const { return query(key); }

  /// Level at which a key is placed, or nullopt for fallback-table keys
  /// (and for non-member keys that miss every level).
  std::optional<std::uint32_t> level_of(std::uint64_t key) const {
    return find_level(key);
  }
  std::optional<std::uint32_t> level_of(std::string_view key) const {
    return find_level(key);
  }

  /// Index assigned to the set bit at `pos` of level `level`: the weights
  /// of all earlier levels plus the bit's inclusive rank, zero-based.
  std::uint64_t index_at(std::uint32_t level, std::uint64_t pos) const {
    return cumulative_[level] + levels_[level].rank1_inclusive(pos) - 1;
  }

  /// weight(A_0) + ... + weight(A_{d-1}).
  std::uint64_t cumulative_weight(std::uint32_t d) const {
    return cumulative_[d];
  }

  /// Raw bit-array size, sum of |A_d|.
  std::uint64_t total_level_bits() const noexcept {
    std::uint64_t s = 0;
    for (const RankedBits& a : levels_) s += a.size();
    return s;
  }

  /// Structure payload in bits: word-rounded level arrays plus their rank
  /// checkpoints. Excludes the fallback table and codec framing.
  std::uint64_t total_bits() const noexcept {
    std::uint64_t s = 0;
    for (const RankedBits& a : levels_) {
      s += 64 * (a.words().size() + a.checkpoints().size());
    }
    return s;
  }

  double bits_per_key() const noexcept {
    return n_ == 0 ? 0.0 : static_cast<double>(total_bits()) /
                               static_cast<double>(n_);
  }

 private:
  template <class K>
  std::uint64_t query(const K& key) const {
    for (std::uint32_t d = 0; d < levels_.size(); ++d) {
      const RankedBits& a = levels_[d];
      const std::uint64_t h = key_hash(key, level_seeds_[d]) % a.size();
      if (a.get(h)) {
        return cumulative_[d] + a.rank1_inclusive(h) - 1;
      }
    }
    const auto it = find_fallback(key);
    if (it == fallback_.end()) {
      throw NotInFallbackError(
          "query: key misses every level and is not in the fallback table "
          "(not a member of the build set?)");
    }
    return it->second;
  }

  template <class K>
  std::optional<std::uint32_t> find_level(const K& key) const {
    for (std::uint32_t d = 0; d < levels_.size(); ++d) {
      const RankedBits& a = levels_[d];
      if (a.get(key_hash(key, level_seeds_[d]) % a.size())) return d;
    }
    return std::nullopt;
  }

  using FallbackMap =
      std::unordered_map<std::string, std::uint64_t, detail::StringHash,
                         std::equal_to<>>;

  FallbackMap::const_iterator find_fallback(std::string_view key) const {
    return fallback_.find(key);
  }
  FallbackMap::const_iterator find_fallback(std::uint64_t key) const {
    char buf[8];
    for (int i = 0; i < 8; ++i) {
      buf[i] = static_cast<char>((key >> (8 * i)) & 0xff);
    }
    return fallback_.find(std::string_view(buf, 8));
  }

  double gamma_ = 2.0;
  std::uint64_t seed_ = 0;
  std::uint32_t rank_interval_ = 512;
  std::uint64_t n_ = 0;
  std::vector<RankedBits> levels_;
  std::vector<std::uint64_t> cumulative_;
  std::vector<std::uint64_t> level_seeds_;
  std::vector<FallbackEntry> fallback_entries_;
  FallbackMap fallback_;
};

namespace detail {

constexpr std::size_t kBatchKeys = 8192;

// Below this population, two placement-free levels are plausible bad luck
// rather than proof of duplicates, so stagnation detection stays quiet and
// true duplicates surface at fallback insertion instead.
constexpr std::uint64_t kStagnationMinKeys = 64;

inline std::uint64_t level_array_bits(double gamma, std::uint64_t count) {
  const double sized = std::ceil(gamma * static_cast<double>(count));
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(sized));
}

inline double seconds_since(
    std::chrono::steady_clock::time_point start) noexcept {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// One pass over `buf`: hash every key into `pair`, optionally teeing the
// keys into `tee` (used to capture F_0 from single-pass sources).
template <class Key>
void record_pass(const LevelBuffer<Key>& buf, AtomicBitPair& pair,
                 std::uint64_t lseed, unsigned workers, LevelSink<Key>* tee) {
  auto stream = buf.open();
  const std::uint64_t size = pair.size();
  auto produce = [&](std::vector<Key>& batch) {
    batch.resize(kBatchKeys);
    batch.resize(stream->read(batch));
    return !batch.empty();
  };
  auto process = [&pair, lseed, size](std::vector<Key>& batch) {
    for (const Key& k : batch) {
      pair.record(key_hash(k, lseed) % size);
    }
    return std::move(batch);
  };
  auto consume = [tee](std::vector<Key>&& batch) {
    if (tee) tee->append(batch);
  };
  run_ordered_batches<std::vector<Key>, std::vector<Key>>(workers, produce,
                                                          process, consume);
}

// One pass over `buf` delivering the keys NOT placed by `a` (in input
// order) to `emit`.
template <class Key, class Emit>
void filter_pass(const LevelBuffer<Key>& buf, const RankedBits& a,
                 std::uint64_t lseed, unsigned workers, Emit&& emit) {
  auto stream = buf.open();
  const std::uint64_t size = a.size();
  auto produce = [&](std::vector<Key>& batch) {
    batch.resize(kBatchKeys);
    batch.resize(stream->read(batch));
    return !batch.empty();
  };
  auto process = [&a, lseed, size](std::vector<Key>& batch) {
    std::vector<Key> survivors;
    for (Key& k : batch) {
      if (!a.get(key_hash(k, lseed) % size)) {
        survivors.push_back(std::move(k));
      }
    }
    return survivors;
  };
  auto consume = [&emit](std::vector<Key>&& survivors) {
    emit(std::move(survivors));
  };
  run_ordered_batches<std::vector<Key>, std::vector<Key>>(workers, produce,
                                                          process, consume);
}

}  // namespace detail

/// Builds an Mphf over the keys of `source`.
///
/// Every level hashes the still-unplaced keys into a fresh 2-bit array,
/// keeps the collision-free slots, and passes the rest on; keys surviving
/// all cfg.max_levels levels go to the fallback table. The key stream is
/// partitioned into batches across cfg.workers threads sharing one
/// AtomicBitPair; results are byte-identical for any worker count and any
/// strategy.
///
/// Throws EmptyInputError for an empty source, DuplicateKeysError when the
/// key stream contains a key twice, ConfigError for invalid parameters and
/// IoError on spill-file failures.
template <class Key>
std::pair<Mphf, BuildReport> build(const KeySource<Key>& source,
                                   const BuildConfig& cfg) {
  if (!(cfg.gamma >= 1.0)) {
    throw ConfigError("gamma must be >= 1");
  }
  if (cfg.workers == 0) {
    throw ConfigError("workers must be >= 1");
  }
  if (cfg.max_levels == 0) {
    throw ConfigError("max_levels must be >= 1");
  }
  if (cfg.rank_interval == 0) {
    throw ConfigError("rank_interval must be >= 1");
  }
  if (!(cfg.spill_to_memory_threshold >= 0.0 &&
        cfg.spill_to_memory_threshold <= 1.0)) {
    throw ConfigError("spill_to_memory_threshold must be in [0, 1]");
  }
  if (cfg.strategy == Strategy::kRescanInput && !source.rewindable()) {
    throw ConfigError(
        "rescan-input strategy requires a rewindable key source");
  }

  const std::uint64_t n = source.count();
  if (n == 0) {
    throw EmptyInputError("key source is empty");
  }

  const auto t_build = std::chrono::steady_clock::now();

  SpillPlan plan;
  plan.strategy = cfg.strategy;
  plan.temp_dir = cfg.temp_dir.empty() ? std::filesystem::temp_directory_path()
                                       : cfg.temp_dir;
  plan.build_id = detail::make_build_id();
  plan.memory_threshold_keys = static_cast<std::uint64_t>(
      cfg.spill_to_memory_threshold * static_cast<double>(n));

  SpillTracker tracker;
  BuildReport report;
  std::vector<RankedBits> levels;
  std::vector<Mphf::FallbackEntry> fallback_entries;

  detail::SourceBuffer<Key> source_buffer(source);
  const LevelBuffer<Key>* current = &source_buffer;
  std::unique_ptr<LevelBuffer<Key>> owned;  // keeps F_d alive while in use
  std::uint64_t current_count = n;
  std::uint64_t frozen_bits = 0;
  std::uint64_t placed_total = 0;
  unsigned zero_streak = 0;

  const bool tee_level0 =
      !source.rewindable() && cfg.strategy != Strategy::kRescanInput;

  for (std::uint32_t d = 0;; ++d) {
    const std::uint64_t array_bits =
        detail::level_array_bits(cfg.gamma, current_count);
    AtomicBitPair pair(array_bits);
    report.peak_bits_in_memory =
        std::max(report.peak_bits_in_memory, frozen_bits + 2 * array_bits);

    const std::uint64_t lseed = level_seed(cfg.seed, d);

    const auto t_record = std::chrono::steady_clock::now();
    if (d == 0 && tee_level0) {
      auto tee = make_level_sink<Key>(plan, 0, n, tracker);
      detail::record_pass(*current, pair, lseed, cfg.workers, tee.get());
      owned = tee->seal();
      current = owned.get();
    } else {
      detail::record_pass(*current, pair, lseed, cfg.workers,
                          static_cast<LevelSink<Key>*>(nullptr));
    }
    const double record_seconds = detail::seconds_since(t_record);

    levels.push_back(pair.freeze(cfg.rank_interval));
    const RankedBits& frozen = levels.back();
    const std::uint64_t placed = frozen.weight();
    const std::uint64_t remaining = current_count - placed;
    placed_total += placed;
    frozen_bits += array_bits;

    report.levels.push_back(
        {current_count, array_bits, placed, record_seconds, 0.0});

    if (remaining == 0) {
      break;
    }

    if (placed == 0 && current_count >= detail::kStagnationMinKeys) {
      if (++zero_streak >= 2) {
        throw DuplicateKeysError(
            "build stagnated: two consecutive levels placed no keys, which "
            "only duplicate keys can cause at this population");
      }
    } else {
      zero_streak = 0;
    }

    const auto t_filter = std::chrono::steady_clock::now();
    if (d + 1 < cfg.max_levels) {
      std::unique_ptr<LevelBuffer<Key>> next;
      if (cfg.strategy == Strategy::kRescanInput) {
        next = std::make_unique<detail::RescanBuffer<Key>>(
            source, &levels, d + 1, cfg.seed, remaining);
      } else {
        auto sink = make_level_sink<Key>(plan, d + 1, remaining, tracker);
        detail::filter_pass(*current, frozen, lseed, cfg.workers,
                            [&](std::vector<Key>&& survivors) {
                              sink->append(survivors);
                            });
        next = sink->seal();
      }
      owned = std::move(next);  // drops F_d (deletes its spill file)
      current = owned.get();
      current_count = remaining;
      report.levels.back().filter_seconds = detail::seconds_since(t_filter);
    } else {
      // Cascade exhausted: the survivors of the final level take the tail
      // of the output range, in input order.
      const std::uint64_t base = n - remaining;
      std::unordered_set<std::string> seen;
      seen.reserve(remaining);
      fallback_entries.reserve(remaining);
      auto insert = [&](std::vector<Key>&& survivors) {
        for (const Key& k : survivors) {
          std::string bytes{KeyOps<Key>::to_bytes(k)};
          if (!seen.insert(bytes).second) {
            throw DuplicateKeysError(
                "fallback table saw the same key twice; the input contains "
                "duplicate keys");
          }
          fallback_entries.emplace_back(
              std::move(bytes), base + fallback_entries.size());
        }
      };
      if (cfg.strategy == Strategy::kRescanInput) {
        const detail::RescanBuffer<Key> tail(source, &levels, d + 1, cfg.seed,
                                             remaining);
        detail::filter_pass(tail, frozen, lseed, 1, insert);
      } else {
        detail::filter_pass(*current, frozen, lseed, cfg.workers, insert);
      }
      report.fallback_seconds = detail::seconds_since(t_filter);
      break;
    }
  }

  owned.reset();
  report.fallback_count = fallback_entries.size();
  report.peak_spill_bytes = tracker.peak_bytes();
  report.total_seconds = detail::seconds_since(t_build);

  if (placed_total + fallback_entries.size() != n) {
    throw std::logic_error("build invariant violated: placed + fallback != n");
  }

  Mphf mphf(cfg.gamma, cfg.seed, cfg.rank_interval, n, std::move(levels),
            std::move(fallback_entries));
  return {std::move(mphf), std::move(report)};
}

/// Convenience overload over an in-memory key vector.
template <class Key>
std::pair<Mphf, BuildReport> build(const std::vector<Key>& keys,
                                   const BuildConfig& cfg) {
  VectorSource<Key> source(keys);
  return build(source, cfg);
}

}  // namespace bbmph
