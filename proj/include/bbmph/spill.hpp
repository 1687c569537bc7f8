#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bbmph/bitvector.hpp"
#include "bbmph/errors.hpp"
#include "bbmph/keys.hpp"

namespace bbmph {

/// How the unplaced-key sets F_1, F_2, ... are kept between levels.
enum class Strategy {
  kDiskSpill,    // write F_{d+1} to a temp file, re-read it next level
  kRescanInput,  // re-read the original source each level and filter
  kInMemory,     // keep every F_d in RAM
};

inline const char* strategy_name(Strategy s) noexcept {
  switch (s) {
    case Strategy::kDiskSpill: return "disk-spill";
    case Strategy::kRescanInput: return "rescan-input";
    case Strategy::kInMemory: return "in-memory";
  }
  return "?";
}

/// Accounts live temp-file bytes across a build. Sinks report growth as
/// they flush and removal when their file is deleted; the high-water mark
/// is the build's peak disk usage. Accessed only from the build thread.
class SpillTracker {
 public:
  void add(std::uint64_t bytes) noexcept {
    live_ += bytes;
    peak_ = std::max(peak_, live_);
  }
  void remove(std::uint64_t bytes) noexcept { live_ -= bytes; }

  std::uint64_t live_bytes() const noexcept { return live_; }
  std::uint64_t peak_bytes() const noexcept { return peak_; }

 private:
  std::uint64_t live_ = 0;
  std::uint64_t peak_ = 0;
};

/// A sealed key set for one level. Iteration order is the append order;
/// the build relies on it for deterministic output.
template <class Key>
class LevelBuffer {
 public:
  virtual ~LevelBuffer() = default;
  virtual std::uint64_t count() const = 0;
  virtual std::unique_ptr<KeyStream<Key>> open() const = 0;
  virtual std::uint64_t disk_bytes() const { return 0; }
};

/// Append end of a level buffer under construction. Not thread-safe; the
/// build appends from a single consumer.
template <class Key>
class LevelSink {
 public:
  virtual ~LevelSink() = default;
  virtual void append(std::span<const Key> keys) = 0;
  virtual std::unique_ptr<LevelBuffer<Key>> seal() = 0;
};

namespace detail {

template <class Key>
class MemoryBuffer final : public LevelBuffer<Key> {
 public:
  explicit MemoryBuffer(std::vector<Key> keys) : keys_(std::move(keys)) {}

  std::uint64_t count() const override { return keys_.size(); }
  std::unique_ptr<KeyStream<Key>> open() const override {
    return std::make_unique<VectorStream<Key>>(keys_);
  }

 private:
  std::vector<Key> keys_;
};

template <class Key>
class MemorySink final : public LevelSink<Key> {
 public:
  void append(std::span<const Key> keys) override {
    keys_.insert(keys_.end(), keys.begin(), keys.end());
  }
  std::unique_ptr<LevelBuffer<Key>> seal() override {
    return std::make_unique<MemoryBuffer<Key>>(std::move(keys_));
  }

 private:
  std::vector<Key> keys_;
};

/// Buffered reader over a spill file of raw little-endian records.
template <class Key>
class SpillStream final : public KeyStream<Key> {
 public:
  explicit SpillStream(const std::filesystem::path& path)
      : in_(path, std::ios::binary) {
    if (!in_) {
      throw IoError("cannot open spill file", path.string());
    }
  }

  std::size_t read(std::span<Key> out) override {
    std::size_t n = 0;
    while (n < out.size()) {
      if (KeyOps<Key>::spill_read(buf_, pos_, out[n])) {
        ++n;
      } else if (!refill()) {
        break;
      }
    }
    return n;
  }

 private:
  bool refill() {
    if (eof_) return false;
    buf_.erase(0, pos_);
    pos_ = 0;
    const std::size_t old = buf_.size();
    buf_.resize(old + kChunk);
    in_.read(buf_.data() + old, static_cast<std::streamsize>(kChunk));
    const auto got = static_cast<std::size_t>(in_.gcount());
    buf_.resize(old + got);
    if (got == 0) {
      eof_ = true;
      return false;
    }
    return true;
  }

  static constexpr std::size_t kChunk = std::size_t{1} << 20;
  std::ifstream in_;
  std::string buf_;
  std::size_t pos_ = 0;
  bool eof_ = false;
};

template <class Key>
class DiskBuffer final : public LevelBuffer<Key> {
 public:
  DiskBuffer(std::filesystem::path path, std::uint64_t count,
             std::uint64_t bytes, SpillTracker* tracker)
      : path_(std::move(path)), count_(count), bytes_(bytes),
        tracker_(tracker) {}

  ~DiskBuffer() override {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
    if (tracker_) tracker_->remove(bytes_);
  }

  DiskBuffer(const DiskBuffer&) = delete;
  DiskBuffer& operator=(const DiskBuffer&) = delete;

  std::uint64_t count() const override { return count_; }
  std::unique_ptr<KeyStream<Key>> open() const override {
    return std::make_unique<SpillStream<Key>>(path_);
  }
  std::uint64_t disk_bytes() const override { return bytes_; }

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::uint64_t count_;
  std::uint64_t bytes_;
  SpillTracker* tracker_;
};

template <class Key>
class DiskSink final : public LevelSink<Key> {
 public:
  DiskSink(std::filesystem::path path, SpillTracker* tracker)
      : path_(std::move(path)), tracker_(tracker) {
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_) {
      throw IoError("cannot create spill file", path_.string());
    }
  }

  ~DiskSink() override {
    // Sealed sinks hand the file to a DiskBuffer; an unsealed sink being
    // destroyed is an abandoned build, so clean up.
    if (!sealed_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(path_, ec);
      if (tracker_) tracker_->remove(bytes_);
    }
  }

  void append(std::span<const Key> keys) override {
    for (const Key& k : keys) {
      KeyOps<Key>::spill_write(buf_, k);
    }
    count_ += keys.size();
    if (buf_.size() >= kFlush) flush();
  }

  std::unique_ptr<LevelBuffer<Key>> seal() override {
    flush();
    out_.close();
    if (out_.fail()) {
      throw IoError("cannot write spill file", path_.string());
    }
    sealed_ = true;
    return std::make_unique<DiskBuffer<Key>>(path_, count_, bytes_, tracker_);
  }

 private:
  void flush() {
    if (buf_.empty()) return;
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out_) {
      throw IoError("cannot write spill file", path_.string());
    }
    if (tracker_) tracker_->add(buf_.size());
    bytes_ += buf_.size();
    buf_.clear();
  }

  static constexpr std::size_t kFlush = std::size_t{1} << 20;
  std::filesystem::path path_;
  std::ofstream out_;
  std::string buf_;
  std::uint64_t count_ = 0;
  std::uint64_t bytes_ = 0;
  bool sealed_ = false;
  SpillTracker* tracker_;
};

/// Wraps a KeySource as the level-0 buffer.
template <class Key>
class SourceBuffer final : public LevelBuffer<Key> {
 public:
  explicit SourceBuffer(const KeySource<Key>& source) : source_(&source) {}

  std::uint64_t count() const override { return source_->count(); }
  std::unique_ptr<KeyStream<Key>> open() const override {
    return source_->open();
  }

 private:
  const KeySource<Key>* source_;
};

/// Filters a pass over the original source down to the keys still unplaced
/// after `level_count` finished levels.
template <class Key>
class RescanStream final : public KeyStream<Key> {
 public:
  RescanStream(std::unique_ptr<KeyStream<Key>> inner,
               const std::vector<RankedBits>* levels,
               std::uint32_t level_count, std::uint64_t master)
      : inner_(std::move(inner)), levels_(levels), level_count_(level_count),
        master_(master) {}

  std::size_t read(std::span<Key> out) override {
    std::size_t n = 0;
    while (n < out.size()) {
      if (pos_ == filled_) {
        scratch_.resize(out.size());
        filled_ = inner_->read(scratch_);
        pos_ = 0;
        if (filled_ == 0) break;
      }
      while (pos_ < filled_ && n < out.size()) {
        Key& k = scratch_[pos_++];
        if (!placed(k)) out[n++] = std::move(k);
      }
    }
    return n;
  }

 private:
  bool placed(const Key& k) const {
    for (std::uint32_t d = 0; d < level_count_; ++d) {
      const RankedBits& a = (*levels_)[d];
      if (a.get(KeyOps<Key>::hash(k, d, master_) % a.size())) return true;
    }
    return false;
  }

  std::unique_ptr<KeyStream<Key>> inner_;
  const std::vector<RankedBits>* levels_;
  std::uint32_t level_count_;
  std::uint64_t master_;
  std::vector<Key> scratch_;
  std::size_t pos_ = 0;
  std::size_t filled_ = 0;
};

template <class Key>
class RescanBuffer final : public LevelBuffer<Key> {
 public:
  RescanBuffer(const KeySource<Key>& source,
               const std::vector<RankedBits>* levels,
               std::uint32_t level_count, std::uint64_t master,
               std::uint64_t count)
      : source_(&source), levels_(levels), level_count_(level_count),
        master_(master), count_(count) {}

  std::uint64_t count() const override { return count_; }
  std::unique_ptr<KeyStream<Key>> open() const override {
    return std::make_unique<RescanStream<Key>>(source_->open(), levels_,
                                               level_count_, master_);
  }

 private:
  const KeySource<Key>* source_;
  const std::vector<RankedBits>* levels_;
  std::uint32_t level_count_;
  std::uint64_t master_;
  std::uint64_t count_;
};

inline std::string make_build_id() {
  static std::atomic<std::uint64_t> counter{0};
  const auto seq = counter.fetch_add(1, std::memory_order_relaxed);
  return std::to_string(
             static_cast<std::uint64_t>(::getpid())) +
         "_" + std::to_string(seq);
}

}  // namespace detail

/// Spill decisions the sink factory needs, resolved once per build.
struct SpillPlan {
  Strategy strategy = Strategy::kDiskSpill;
  std::filesystem::path temp_dir;
  std::string build_id;
  // Levels expected to hold at most this many keys stay in memory even
  // under the disk-spill strategy.
  std::uint64_t memory_threshold_keys = 0;
};

/// Creates the sink that will collect F_{level}. Disk-backed only under the
/// disk-spill strategy when the expected population exceeds the in-memory
/// threshold. Never used for the rescan-input strategy, whose level sets
/// are virtual (see RescanBuffer).
template <class Key>
std::unique_ptr<LevelSink<Key>> make_level_sink(const SpillPlan& plan,
                                                std::uint32_t level,
                                                std::uint64_t expected_count,
                                                SpillTracker& tracker) {
  if (plan.strategy == Strategy::kDiskSpill &&
      expected_count > plan.memory_threshold_keys) {
    auto path = plan.temp_dir /
                ("bbmph." + plan.build_id + ".F" + std::to_string(level));
    return std::make_unique<detail::DiskSink<Key>>(std::move(path), &tracker);
  }
  return std::make_unique<detail::MemorySink<Key>>();
}

}  // namespace bbmph
