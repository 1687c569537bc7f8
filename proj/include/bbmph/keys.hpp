#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bbmph/errors.hpp"
#include "bbmph/hash.hpp"

namespace bbmph {

/// One sequential pass over a key set.
template <class Key>
class KeyStream {
 public:
  virtual ~KeyStream() = default;

  /// Fills `out` with up to out.size() keys; returns the number written,
  /// 0 at end of stream.
  virtual std::size_t read(std::span<Key> out) = 0;
};

/// A static key set that can hand out sequential passes. Every pass yields
/// the same keys in the same order. Sources that cannot replay themselves
/// (rewindable() == false) support a single open(); the builder copies them
/// on first read and the rescan-input strategy rejects them.
template <class Key>
class KeySource {
 public:
  virtual ~KeySource() = default;

  virtual std::uint64_t count() const = 0;
  virtual bool rewindable() const { return true; }
  virtual std::unique_ptr<KeyStream<Key>> open() const = 0;
};

namespace detail {

template <class Key>
class VectorStream final : public KeyStream<Key> {
 public:
  explicit VectorStream(const std::vector<Key>& keys) : keys_(&keys) {}

  std::size_t read(std::span<Key> out) override {
    std::size_t n = 0;
    while (n < out.size() && pos_ < keys_->size()) {
      out[n++] = (*keys_)[pos_++];
    }
    return n;
  }

 private:
  const std::vector<Key>* keys_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// In-memory key set. Keeps a reference; the vector must outlive the source.
template <class Key>
class VectorSource final : public KeySource<Key> {
 public:
  explicit VectorSource(const std::vector<Key>& keys) : keys_(&keys) {}

  std::uint64_t count() const override { return keys_->size(); }
  std::unique_ptr<KeyStream<Key>> open() const override {
    return std::make_unique<detail::VectorStream<Key>>(*keys_);
  }

 private:
  const std::vector<Key>* keys_;
};

/// Byte-string keys from a text file, one key per line, bytes verbatim.
/// The trailing newline terminates a key and is not part of it; a final
/// unterminated line still counts as a key.
class LineFileSource final : public KeySource<std::string> {
 public:
  explicit LineFileSource(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) {
      throw IoError("cannot open input file", path_);
    }
    std::string line;
    while (std::getline(in, line)) ++count_;
  }

  std::uint64_t count() const override { return count_; }

  std::unique_ptr<KeyStream<std::string>> open() const override {
    return std::make_unique<Stream>(path_);
  }

  const std::string& path() const noexcept { return path_; }

 private:
  class Stream final : public KeyStream<std::string> {
   public:
    explicit Stream(const std::string& path) : in_(path, std::ios::binary) {
      if (!in_) {
        throw IoError("cannot open input file", path);
      }
    }

    std::size_t read(std::span<std::string> out) override {
      std::size_t n = 0;
      std::string line;
      while (n < out.size() && std::getline(in_, line)) {
        out[n++] = line;
      }
      return n;
    }

   private:
    std::ifstream in_;
  };

  std::string path_;
  std::uint64_t count_ = 0;
};

/// Per-key-type glue used by the build pipeline: hashing plus the spill and
/// fallback encodings. Integer keys encode as their 8-byte little-endian
/// image, matching the hash contract; byte-string keys carry a 4-byte
/// little-endian length prefix in spill files.
template <class Key>
struct KeyOps;

template <>
struct KeyOps<std::uint64_t> {
  static std::uint64_t hash(std::uint64_t key, std::uint32_t level,
                            std::uint64_t master) noexcept {
    return hash_level(key, level, master);
  }

  static std::string to_bytes(std::uint64_t key) {
    std::string s(8, '\0');
    for (int i = 0; i < 8; ++i) {
      s[static_cast<std::size_t>(i)] =
          static_cast<char>((key >> (8 * i)) & 0xff);
    }
    return s;
  }

  static constexpr std::uint64_t spill_bytes(std::uint64_t) noexcept {
    return 8;
  }

  static void spill_write(std::string& out, std::uint64_t key) {
    char buf[8];
    for (int i = 0; i < 8; ++i) {
      buf[i] = static_cast<char>((key >> (8 * i)) & 0xff);
    }
    out.append(buf, 8);
  }

  /// Reads one record from `data` at `pos`; advances pos. Returns false if
  /// no full record remains.
  static bool spill_read(std::string_view data, std::size_t& pos,
                         std::uint64_t& key) {
    if (data.size() - pos < 8) return false;
    std::uint64_t k = 0;
    for (int i = 0; i < 8; ++i) {
      k |= std::uint64_t{static_cast<unsigned char>(data[pos + i])} << (8 * i);
    }
    pos += 8;
    key = k;
    return true;
  }
};

template <>
struct KeyOps<std::string> {
  static std::uint64_t hash(const std::string& key, std::uint32_t level,
                            std::uint64_t master) noexcept {
    return hash_level(std::string_view{key}, level, master);
  }

  static const std::string& to_bytes(const std::string& key) { return key; }

  static std::uint64_t spill_bytes(const std::string& key) noexcept {
    return 4 + key.size();
  }

  static void spill_write(std::string& out, const std::string& key) {
    const auto len = static_cast<std::uint32_t>(key.size());
    char buf[4];
    for (int i = 0; i < 4; ++i) {
      buf[i] = static_cast<char>((len >> (8 * i)) & 0xff);
    }
    out.append(buf, 4);
    out.append(key);
  }

  static bool spill_read(std::string_view data, std::size_t& pos,
                         std::string& key) {
    if (data.size() - pos < 4) return false;
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) {
      len |= std::uint32_t{static_cast<unsigned char>(data[pos + i])}
             << (8 * i);
    }
    if (data.size() - pos - 4 < len) return false;
    key.assign(data.substr(pos + 4, len));
    pos += 4 + len;
    return true;
  }
};

}  // namespace bbmph
