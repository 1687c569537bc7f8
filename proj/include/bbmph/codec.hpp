#pragma once

#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bbmph/errors.hpp"
#include "bbmph/mphf.hpp"

// Binary serialization of Mphf. The byte-exact layout is documented in
// docs/FORMAT.md; everything is little-endian with no padding, independent
// of the host, so images are portable and round-trips are byte-identical.

namespace bbmph::codec {

inline constexpr char kMagic[8] = {'B', 'B', 'M', 'P', 'H', '0', '0', '1'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 8 + 4 + 8 + 8 + 8 + 4 + 4;

namespace detail {

class Writer {
 public:
  explicit Writer(std::string& out) : out_(out) {}

  void u32(std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.append(buf, 4);
  }

  void u64(std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.append(buf, 8);
  }

  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }

  void bytes(std::string_view s) { out_.append(s); }

 private:
  std::string& out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::size_t offset() const noexcept { return pos_; }

  std::uint32_t u32() {
    need(4, "u32 field");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= std::uint32_t{byte(pos_ + static_cast<std::size_t>(i))} << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8, "u64 field");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= std::uint64_t{byte(pos_ + static_cast<std::size_t>(i))} << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  std::string_view bytes(std::uint64_t len, const char* what) {
    need(len, what);
    std::string_view s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }

  /// Fails (TruncatedError) unless `len` more bytes are available. Used
  /// before allocations so a corrupt length can never trigger one.
  void need(std::uint64_t len, const char* what) const {
    if (len > data_.size() - pos_) {
      throw TruncatedError(std::string("image truncated reading ") + what,
                           pos_);
    }
  }

  /// Overflow-safe variant of need() for `count` records of `per` bytes.
  void need_count(std::uint64_t count, std::uint64_t per,
                  const char* what) const {
    if (count > (data_.size() - pos_) / per) {
      throw TruncatedError(std::string("image truncated reading ") + what,
                           pos_);
    }
  }

 private:
  unsigned char byte(std::size_t i) const {
    return static_cast<unsigned char>(data_[i]);
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Serializes a finalized Mphf. Deterministic: equal structures give equal
/// bytes on every platform.
inline std::string encode(const Mphf& m) {
  std::string out;
  out.reserve(kHeaderBytes + m.total_bits() / 8 + 64);
  detail::Writer w(out);

  w.bytes(std::string_view(kMagic, 8));
  w.u32(kVersion);
  w.u64(m.key_count());
  w.f64(m.gamma());
  w.u64(m.seed());
  w.u32(m.rank_interval());
  w.u32(m.level_count());

  for (const RankedBits& a : m.levels()) {
    w.u64(a.size());
    for (std::uint64_t word : a.words()) w.u64(word);
    for (std::uint64_t cp : a.checkpoints()) w.u64(cp);
  }

  w.u64(m.fallback_entries().size());
  for (const auto& [key, index] : m.fallback_entries()) {
    w.u32(static_cast<std::uint32_t>(key.size()));
    w.bytes(key);
    w.u64(index);
  }

  return out;
}

/// Parses a serialized image. Throws FormatError on bad magic,
/// VersionError on an unsupported version and TruncatedError (with the
/// failing offset) when the image ends before its declared payload.
inline Mphf decode(std::string_view image) {
  detail::Reader r(image);

  const std::string_view magic = r.bytes(8, "magic");
  if (std::memcmp(magic.data(), kMagic, 8) != 0) {
    throw FormatError("bad magic: not a bbmph image");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw VersionError("unsupported image version " + std::to_string(version));
  }

  const std::uint64_t n = r.u64();
  const double gamma = r.f64();
  const std::uint64_t seed = r.u64();
  const std::uint32_t interval = r.u32();
  if (interval == 0) {
    throw FormatError("rank_interval must be positive");
  }
  const std::uint32_t level_count = r.u32();

  std::vector<RankedBits> levels;
  levels.reserve(level_count);
  for (std::uint32_t d = 0; d < level_count; ++d) {
    const std::uint64_t bit_count = r.u64();
    // Computed without the rounding additions so absurd bit counts cannot
    // overflow past the bounds checks.
    const std::uint64_t n_words = bit_count / 64 + (bit_count % 64 != 0);
    const std::uint64_t n_cp =
        bit_count / interval + (bit_count % interval != 0);
    r.need_count(n_words, 8, "level words");
    std::vector<std::uint64_t> words(n_words);
    for (auto& word : words) word = r.u64();
    r.need_count(n_cp, 8, "level checkpoints");
    std::vector<std::uint64_t> checkpoints(n_cp);
    for (auto& cp : checkpoints) cp = r.u64();
    levels.emplace_back(bit_count, std::move(words), std::move(checkpoints),
                        interval);
  }

  const std::uint64_t fallback_count = r.u64();
  std::vector<Mphf::FallbackEntry> fallback;
  // 12 bytes = length prefix + index, the smallest possible entry; bounds
  // the reserve so a corrupt count cannot balloon memory.
  r.need_count(fallback_count, 12, "fallback table");
  fallback.reserve(fallback_count);
  for (std::uint64_t i = 0; i < fallback_count; ++i) {
    const std::uint32_t len = r.u32();
    const std::string_view key = r.bytes(len, "fallback key");
    const std::uint64_t index = r.u64();
    fallback.emplace_back(std::string(key), index);
  }

  return Mphf(gamma, seed, interval, n, std::move(levels),
              std::move(fallback));
}

/// Writes the encoded image to `path` atomically: the file appears complete
/// or not at all.
inline void save(const Mphf& m, const std::filesystem::path& path) {
  const std::string image = encode(m);
  const std::filesystem::path tmp =
      path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot create output file", tmp.string());
    }
    out.write(image.data(), static_cast<std::streamsize>(image.size()));
    out.close();
    if (out.fail()) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("cannot write output file", tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output file into place", path.string());
  }
}

/// Reads and decodes an image file.
inline Mphf load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open image file", path.string());
  }
  std::string image((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw IoError("cannot read image file", path.string());
  }
  return decode(image);
}

}  // namespace bbmph::codec
