#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "bbmph/codec.hpp"
#include "bbmph/keygen.hpp"
#include "bbmph/mphf.hpp"
#include "bbmph/spill.hpp"

using namespace bbmph;
namespace fs = std::filesystem;

namespace {

// Counts how many passes the build opens over the source.
template <class Key>
class CountingSource final : public KeySource<Key> {
 public:
  explicit CountingSource(const KeySource<Key>& inner) : inner_(&inner) {}

  std::uint64_t count() const override { return inner_->count(); }
  std::unique_ptr<KeyStream<Key>> open() const override {
    ++opens_;
    return inner_->open();
  }

  int opens() const noexcept { return opens_; }

 private:
  const KeySource<Key>* inner_;
  mutable int opens_ = 0;
};

// A source that refuses to be replayed, like a pipe.
template <class Key>
class OnePassSource final : public KeySource<Key> {
 public:
  explicit OnePassSource(const KeySource<Key>& inner) : inner_(&inner) {}

  std::uint64_t count() const override { return inner_->count(); }
  bool rewindable() const override { return false; }
  std::unique_ptr<KeyStream<Key>> open() const override {
    if (opened_) {
      throw std::logic_error("one-pass source opened twice");
    }
    opened_ = true;
    return inner_->open();
  }

 private:
  const KeySource<Key>* inner_;
  mutable bool opened_ = false;
};

struct TempDir {
  TempDir() {
    path = fs::temp_directory_path() /
           ("bbmph_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }

  std::size_t spill_files() const {
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.path().filename().string().starts_with("bbmph.")) ++n;
    }
    return n;
  }

  static inline int counter = 0;
  fs::path path;
};

}  // namespace

TEST_CASE("sink selection follows strategy and threshold") {
  TempDir tmp;
  SpillTracker tracker;
  SpillPlan plan;
  plan.temp_dir = tmp.path;
  plan.build_id = "t1";
  plan.memory_threshold_keys = 100;

  SUBCASE("in-memory strategy always buffers in memory") {
    plan.strategy = Strategy::kInMemory;
    auto sink = make_level_sink<std::uint64_t>(plan, 1, 1000000, tracker);
    const std::vector<std::uint64_t> keys{1, 2, 3};
    sink->append(keys);
    auto buf = sink->seal();
    CHECK(buf->count() == 3);
    CHECK(buf->disk_bytes() == 0);
    CHECK(tmp.spill_files() == 0);
  }

  SUBCASE("disk-spill strategy uses a named temp file above the threshold") {
    plan.strategy = Strategy::kDiskSpill;
    auto sink = make_level_sink<std::uint64_t>(plan, 2, 101, tracker);
    std::vector<std::uint64_t> keys(500);
    for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = i * i;
    sink->append(keys);
    auto buf = sink->seal();
    CHECK(buf->count() == 500);
    CHECK(buf->disk_bytes() == 500 * 8);
    CHECK(fs::exists(tmp.path / "bbmph.t1.F2"));
    CHECK(tracker.live_bytes() == 500 * 8);

    // Two full passes read back the exact sequence.
    for (int pass = 0; pass < 2; ++pass) {
      auto stream = buf->open();
      std::vector<std::uint64_t> got(600);
      got.resize(stream->read(got));
      CHECK(got == keys);
    }

    buf.reset();
    CHECK(tmp.spill_files() == 0);
    CHECK(tracker.live_bytes() == 0);
  }

  SUBCASE("small levels stay in memory even under disk-spill") {
    plan.strategy = Strategy::kDiskSpill;
    auto sink = make_level_sink<std::uint64_t>(plan, 3, 100, tracker);
    const std::vector<std::uint64_t> keys{4, 5, 6};
    sink->append(keys);
    auto buf = sink->seal();
    CHECK(buf->disk_bytes() == 0);
    CHECK(tmp.spill_files() == 0);
  }
}

TEST_CASE("string spill records round-trip with length prefixes") {
  TempDir tmp;
  SpillTracker tracker;
  SpillPlan plan;
  plan.strategy = Strategy::kDiskSpill;
  plan.temp_dir = tmp.path;
  plan.build_id = "t2";
  plan.memory_threshold_keys = 0;

  std::vector<std::string> keys = generate_strings(2000, 18, 5);
  keys.push_back("");                      // empty key is a valid record
  keys.push_back(std::string("\0\n\xff", 3));  // arbitrary bytes survive

  auto sink = make_level_sink<std::string>(plan, 1, keys.size(), tracker);
  sink->append(keys);
  auto buf = sink->seal();

  std::uint64_t expected_bytes = 0;
  for (const auto& k : keys) expected_bytes += 4 + k.size();
  CHECK(buf->disk_bytes() == expected_bytes);

  auto stream = buf->open();
  std::vector<std::string> got(keys.size() + 8);
  got.resize(stream->read(got));
  CHECK(got == keys);
}

TEST_CASE("all strategies and worker counts build identical structures") {
  TempDir tmp;
  const auto keys = generate_keys(30000, 77);
  VectorSource<std::uint64_t> source(keys);

  std::string reference;
  for (Strategy strategy : {Strategy::kDiskSpill, Strategy::kRescanInput,
                            Strategy::kInMemory}) {
    for (unsigned workers : {1u, 8u}) {
      BuildConfig cfg;
      cfg.gamma = 1.0;
      cfg.seed = 13;
      cfg.strategy = strategy;
      cfg.workers = workers;
      cfg.temp_dir = tmp.path;
      auto [m, report] = build(source, cfg);
      const std::string image = codec::encode(m);
      if (reference.empty()) {
        reference = image;
      } else {
        INFO(strategy_name(strategy), " x", workers);
        CHECK(image == reference);
      }
    }
  }
  CHECK(tmp.spill_files() == 0);
}

TEST_CASE("peak spill bytes equal the two largest neighbouring levels") {
  TempDir tmp;
  const auto keys = generate_keys(100000, 83);
  VectorSource<std::uint64_t> source(keys);

  BuildConfig cfg;
  cfg.gamma = 2.0;
  cfg.seed = 3;
  cfg.strategy = Strategy::kDiskSpill;
  cfg.temp_dir = tmp.path;
  auto [m, report] = build(source, cfg);

  // F_1 and F_2 are both on disk while level 1 filters; that is the peak.
  REQUIRE(report.levels.size() >= 3);
  const std::uint64_t expect =
      8 * (report.levels[1].key_count + report.levels[2].key_count);
  CHECK(report.peak_spill_bytes == expect);

  const double ratio = static_cast<double>(report.peak_spill_bytes) /
                       (8.0 * static_cast<double>(keys.size()));
  CHECK(ratio > 0.52);
  CHECK(ratio < 0.58);
  CHECK(tmp.spill_files() == 0);
}

TEST_CASE("a generous memory threshold suppresses all spilling") {
  TempDir tmp;
  const auto keys = generate_keys(50000, 89);
  VectorSource<std::uint64_t> source(keys);

  BuildConfig cfg;
  cfg.gamma = 2.0;
  cfg.strategy = Strategy::kDiskSpill;
  cfg.spill_to_memory_threshold = 0.5;  // F_1 ~ 0.39 n already fits
  cfg.temp_dir = tmp.path;
  auto [m, report] = build(source, cfg);
  CHECK(report.peak_spill_bytes == 0);
  CHECK(tmp.spill_files() == 0);
}

TEST_CASE("rescan-input never spills and passes the source last+1 times") {
  const auto keys = generate_keys(30000, 97);
  VectorSource<std::uint64_t> inner(keys);
  CountingSource<std::uint64_t> source(inner);

  BuildConfig cfg;
  cfg.gamma = 2.0;
  cfg.seed = 4;
  cfg.strategy = Strategy::kRescanInput;
  auto [m, report] = build(source, cfg);

  CHECK(report.fallback_count == 0);  // gamma 2 drains well before D
  CHECK(report.peak_spill_bytes == 0);
  CHECK(source.opens() == static_cast<int>(m.level_count()));
}

TEST_CASE("in-memory strategy reports zero spill") {
  const auto keys = generate_keys(20000, 101);
  BuildConfig cfg;
  cfg.strategy = Strategy::kInMemory;
  auto [m, report] = build(keys, cfg);
  CHECK(report.peak_spill_bytes == 0);
}

TEST_CASE("non-rewindable sources") {
  TempDir tmp;
  const auto keys = generate_keys(20000, 103);
  VectorSource<std::uint64_t> inner(keys);

  BuildConfig cfg;
  cfg.seed = 21;
  cfg.temp_dir = tmp.path;

  SUBCASE("rescan-input rejects them") {
    OnePassSource<std::uint64_t> once(inner);
    cfg.strategy = Strategy::kRescanInput;
    CHECK_THROWS_AS(build(once, cfg), ConfigError);
  }

  SUBCASE("spill strategies copy the stream and still match") {
    cfg.strategy = Strategy::kInMemory;
    auto [reference, ref_report] = build(inner, cfg);

    for (Strategy strategy : {Strategy::kDiskSpill, Strategy::kInMemory}) {
      OnePassSource<std::uint64_t> once(inner);
      cfg.strategy = strategy;
      auto [m, report] = build(once, cfg);
      CHECK(codec::encode(m) == codec::encode(reference));
    }
    CHECK(tmp.spill_files() == 0);
  }
}

TEST_CASE("spill files are cleaned up when a build fails") {
  TempDir tmp;
  auto keys = generate_keys(30000, 107);
  keys.push_back(keys[7]);  // duplicate

  BuildConfig cfg;
  cfg.gamma = 1.0;
  cfg.strategy = Strategy::kDiskSpill;
  cfg.temp_dir = tmp.path;
  CHECK_THROWS_AS(build(keys, cfg), DuplicateKeysError);
  CHECK(tmp.spill_files() == 0);
}

TEST_CASE("line file source") {
  TempDir tmp;
  const fs::path file = tmp.path / "keys.txt";
  {
    std::ofstream out(file, std::ios::binary);
    out << "alpha\n\nbeta with spaces\nlast";  // empty line, no final newline
  }
  LineFileSource source(file.string());
  CHECK(source.count() == 4);

  for (int pass = 0; pass < 2; ++pass) {
    auto stream = source.open();
    std::vector<std::string> got(10);
    got.resize(stream->read(got));
    REQUIRE(got.size() == 4);
    CHECK(got[0] == "alpha");
    CHECK(got[1] == "");
    CHECK(got[2] == "beta with spaces");
    CHECK(got[3] == "last");
  }

  CHECK_THROWS_AS(LineFileSource((tmp.path / "missing.txt").string()),
                  IoError);
}
