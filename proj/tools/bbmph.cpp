// bbmph: build and benchmark minimal perfect hash functions over synthetic
// or file-based key sets, reporting observed statistics next to the
// closed-form expectations.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bbmph/analysis.hpp"
#include "bbmph/bbmph.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDuplicates = 4;

struct Options {
  std::optional<std::uint64_t> keys;
  std::string input;
  std::string strings_spec;  // "N,LEN"
  double gamma = 2.0;
  unsigned threads = 1;
  std::uint32_t max_levels = 25;
  std::uint32_t rank_interval = 512;
  std::uint64_t seed = 1;
  bool bench = false;
  bool nodisk = false;
  bool in_memory = false;
  bool onthefly = false;
  std::string output;
  std::string temp_dir;
};

std::pair<std::uint64_t, std::size_t> parse_strings_spec(
    const std::string& spec) {
  const auto comma = spec.find(',');
  if (comma == std::string::npos) {
    throw bbmph::ConfigError("--strings expects N,LEN");
  }
  try {
    const std::uint64_t n = std::stoull(spec.substr(0, comma));
    const std::size_t len = std::stoull(spec.substr(comma + 1));
    return {n, len};
  } catch (const std::exception&) {
    throw bbmph::ConfigError("--strings expects N,LEN");
  }
}

struct RunStats {
  std::uint64_t n = 0;
  const char* key_kind = "";
  std::uint64_t input_bytes = 0;
  bbmph::Mphf mphf;
  bbmph::BuildReport report;
  double query_ns_mean = -1;
  std::uint64_t query_checksum = 0;
};

template <class Key>
void run_bench(RunStats& stats, const bbmph::KeySource<Key>& source,
               std::uint64_t seed) {
  std::vector<Key> keys(source.count());
  auto stream = source.open();
  keys.resize(stream->read(keys));
  std::shuffle(keys.begin(), keys.end(), std::mt19937_64(seed ^ 0xbe9c));

  std::uint64_t checksum = 0;
  const auto start = std::chrono::steady_clock::now();
  for (const Key& k : keys) {
    checksum ^= stats.mphf.index_of(k);
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  stats.query_ns_mean = 1e9 * elapsed / static_cast<double>(keys.size());
  stats.query_checksum = checksum;
}

template <class Key>
RunStats run_build(const bbmph::KeySource<Key>& source,
                   const bbmph::BuildConfig& cfg, const Options& opt) {
  RunStats stats;
  stats.n = source.count();

  auto [mphf, report] = bbmph::build(source, cfg);
  stats.mphf = std::move(mphf);
  stats.report = std::move(report);

  {
    auto stream = source.open();
    std::vector<Key> batch(8192);
    std::size_t got;
    while ((got = stream->read(batch)) > 0) {
      for (std::size_t i = 0; i < got; ++i) {
        stats.input_bytes += bbmph::KeyOps<Key>::spill_bytes(batch[i]);
      }
    }
  }

  if (opt.bench) {
    run_bench(stats, source, opt.seed);
  }
  return stats;
}

void print_report(const RunStats& stats, const bbmph::BuildConfig& cfg,
                  const Options& opt) {
  const auto& m = stats.mphf;
  const auto& r = stats.report;

  std::uint64_t reached_sum = 0;  // sum of |F_d| = sum over keys of level+1
  for (const auto& level : r.levels) reached_sum += level.key_count;
  reached_sum += r.fallback_count;  // fallback keys also probe past level D
  const double mean_level =
      static_cast<double>(reached_sum) / static_cast<double>(stats.n);

  const double level0_fraction =
      static_cast<double>(r.levels.front().placed) /
      static_cast<double>(stats.n);
  const double peak_ratio = static_cast<double>(r.peak_bits_in_memory) /
                            static_cast<double>(m.total_level_bits());
  const double spill_ratio = stats.input_bytes == 0
                                 ? 0.0
                                 : static_cast<double>(r.peak_spill_bytes) /
                                       static_cast<double>(stats.input_bytes);
  const double predicted_spill =
      cfg.strategy == bbmph::Strategy::kDiskSpill
          ? bbmph::analysis::predict_peak_spill_ratio(cfg.gamma)
          : 0.0;

  std::printf("bbmph: %llu %s keys, gamma=%.3g, %u thread(s), %s\n",
              static_cast<unsigned long long>(stats.n), stats.key_kind,
              cfg.gamma, cfg.workers, bbmph::strategy_name(cfg.strategy));
  std::printf("  levels built: %u, fallback keys: %llu\n", m.level_count(),
              static_cast<unsigned long long>(r.fallback_count));
  std::printf("  %-28s %12s %12s\n", "", "observed", "expected");
  std::printf("  %-28s %12.4f %12.4f\n", "bits/key", m.bits_per_key(),
              bbmph::analysis::predict_bits_per_key(cfg.gamma,
                                                    cfg.rank_interval));
  std::printf("  %-28s %12.4f %12.4f\n", "level-0 placed fraction",
              level0_fraction, bbmph::analysis::placed_fraction(cfg.gamma));
  std::printf("  %-28s %12.4f %12.4f\n", "mean level (1-based)", mean_level,
              bbmph::analysis::predict_mean_level(cfg.gamma));
  std::printf("  %-28s %12.4f %12.4f\n", "peak memory / final size",
              peak_ratio,
              bbmph::analysis::predict_peak_memory_ratio(cfg.gamma));
  std::printf("  %-28s %12.4f %12.4f\n", "peak spill / input bytes",
              spill_ratio, predicted_spill);
  std::printf("  construction: %.3f s\n", r.total_seconds);
  if (stats.query_ns_mean >= 0) {
    std::printf("  mean query: %.1f ns\n", stats.query_ns_mean);
  }
  std::printf("\n");

  // Machine-readable block; tests parse these lines.
  std::printf("status=ok\n");
  std::printf("n=%llu\n", static_cast<unsigned long long>(stats.n));
  std::printf("key_kind=%s\n", stats.key_kind);
  std::printf("gamma=%.17g\n", cfg.gamma);
  std::printf("threads=%u\n", cfg.workers);
  std::printf("strategy=%s\n", bbmph::strategy_name(cfg.strategy));
  std::printf("onthefly=%d\n", opt.onthefly ? 1 : 0);
  std::printf("seed=%llu\n", static_cast<unsigned long long>(cfg.seed));
  std::printf("rank_interval=%u\n", cfg.rank_interval);
  std::printf("max_levels=%u\n", cfg.max_levels);
  std::printf("levels=%u\n", m.level_count());
  std::printf("fallback_count=%llu\n",
              static_cast<unsigned long long>(r.fallback_count));
  std::printf("total_bits=%llu\n",
              static_cast<unsigned long long>(m.total_bits()));
  std::printf("bits_per_key=%.6f\n", m.bits_per_key());
  std::printf("predicted_bits_per_key=%.6f\n",
              bbmph::analysis::predict_bits_per_key(cfg.gamma,
                                                    cfg.rank_interval));
  std::printf("level0_fraction=%.6f\n", level0_fraction);
  std::printf("predicted_level0_fraction=%.6f\n",
              bbmph::analysis::placed_fraction(cfg.gamma));
  std::printf("mean_level=%.6f\n", mean_level);
  std::printf("predicted_mean_level=%.6f\n",
              bbmph::analysis::predict_mean_level(cfg.gamma));
  std::printf("peak_bits_in_memory=%llu\n",
              static_cast<unsigned long long>(r.peak_bits_in_memory));
  std::printf("peak_memory_ratio=%.6f\n", peak_ratio);
  std::printf("predicted_peak_memory_ratio=%.6f\n",
              bbmph::analysis::predict_peak_memory_ratio(cfg.gamma));
  std::printf("input_bytes=%llu\n",
              static_cast<unsigned long long>(stats.input_bytes));
  std::printf("peak_spill_bytes=%llu\n",
              static_cast<unsigned long long>(r.peak_spill_bytes));
  std::printf("spill_ratio=%.6f\n", spill_ratio);
  std::printf("predicted_spill_ratio=%.6f\n", predicted_spill);
  std::printf("construct_seconds=%.6f\n", r.total_seconds);
  if (stats.query_ns_mean >= 0) {
    std::printf("query_ns_mean=%.2f\n", stats.query_ns_mean);
    std::printf("query_checksum=%llu\n",
                static_cast<unsigned long long>(stats.query_checksum));
  }
}

int run(const Options& opt) {
  int origins = 0;
  origins += opt.keys.has_value();
  origins += !opt.input.empty();
  origins += !opt.strings_spec.empty();
  if (origins != 1) {
    throw bbmph::ConfigError(
        "exactly one of --keys, --input, --strings must be given");
  }
  if (opt.nodisk && opt.in_memory) {
    throw bbmph::ConfigError("--nodisk and --in-memory are exclusive");
  }
  if (opt.keys && *opt.keys == 0) {
    throw bbmph::ConfigError("--keys must be positive");
  }

  bbmph::BuildConfig cfg;
  cfg.gamma = opt.gamma;
  cfg.workers = opt.threads;
  cfg.max_levels = opt.max_levels;
  cfg.rank_interval = opt.rank_interval;
  cfg.seed = opt.seed;
  cfg.strategy = opt.nodisk      ? bbmph::Strategy::kRescanInput
                 : opt.in_memory ? bbmph::Strategy::kInMemory
                                 : bbmph::Strategy::kDiskSpill;
  if (!opt.temp_dir.empty()) {
    cfg.temp_dir = opt.temp_dir;
  }

  RunStats stats;
  if (opt.keys) {
    if (opt.onthefly) {
      // Regenerate the stream on every pass instead of holding the keys.
      bbmph::IntKeySource source(*opt.keys, opt.seed);
      stats = run_build(source, cfg, opt);
    } else {
      const std::vector<std::uint64_t> keys =
          bbmph::generate_keys(*opt.keys, opt.seed);
      bbmph::VectorSource<std::uint64_t> source(keys);
      stats = run_build(source, cfg, opt);
    }
    stats.key_kind = "int64";
  } else if (!opt.strings_spec.empty()) {
    const auto [n, len] = parse_strings_spec(opt.strings_spec);
    bbmph::StringKeySource source(n, len, opt.seed);
    stats = run_build(source, cfg, opt);
    stats.key_kind = "string";
  } else {
    bbmph::LineFileSource source(opt.input);
    stats = run_build(source, cfg, opt);
    stats.key_kind = "string";
  }

  print_report(stats, cfg, opt);

  if (!opt.output.empty()) {
    bbmph::codec::save(stats.mphf, opt.output);
    std::printf("output_file=%s\n", opt.output.c_str());
    std::printf("output_bytes=%llu\n",
                static_cast<unsigned long long>(
                    std::filesystem::file_size(opt.output)));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "bbmph - minimal perfect hash functions via cascading bit arrays"};

  Options opt;
  app.add_option("--keys", opt.keys,
                 "build over N synthetic distinct 64-bit keys");
  app.add_option("--input", opt.input,
                 "build over byte-string keys from FILE (one per line)");
  app.add_option("--strings", opt.strings_spec,
                 "build over N,LEN synthetic distinct strings");
  app.add_option("--gamma", opt.gamma, "bit array oversizing factor (>= 1)")
      ->capture_default_str();
  app.add_option("--threads", opt.threads, "worker threads")
      ->capture_default_str();
  app.add_option("--max-levels", opt.max_levels, "maximum cascade depth")
      ->capture_default_str();
  app.add_option("--rank-interval", opt.rank_interval,
                 "rank checkpoint sampling interval")
      ->capture_default_str();
  app.add_option("--seed", opt.seed, "master seed")->capture_default_str();
  app.add_flag("--bench", opt.bench, "benchmark queries over all keys");
  app.add_flag("--nodisk", opt.nodisk,
               "rescan the input each level instead of spilling to disk");
  app.add_flag("--in-memory", opt.in_memory, "keep all level sets in RAM");
  app.add_flag("--onthefly", opt.onthefly,
               "regenerate synthetic keys per pass instead of storing them");
  app.add_option("--output", opt.output, "write the encoded structure here");
  app.add_option("--temp-dir", opt.temp_dir, "directory for spill files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    return run(opt);
  } catch (const bbmph::ConfigError& e) {
    std::fprintf(stderr, "bbmph: %s\n", e.what());
    return kExitConfig;
  } catch (const bbmph::EmptyInputError& e) {
    std::fprintf(stderr, "bbmph: %s\n", e.what());
    return kExitConfig;
  } catch (const bbmph::IoError& e) {
    std::fprintf(stderr, "bbmph: %s\n", e.what());
    return kExitIo;
  } catch (const bbmph::DuplicateKeysError& e) {
    std::fprintf(stderr, "bbmph: %s\n", e.what());
    return kExitDuplicates;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bbmph: %s\n", e.what());
    return 1;
  }
}
