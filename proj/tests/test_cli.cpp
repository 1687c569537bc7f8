#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "bbmph/codec.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;

  std::map<std::string, std::string> values() const {
    std::map<std::string, std::string> kv;
    std::size_t start = 0;
    while (start < out.size()) {
      std::size_t end = out.find('\n', start);
      if (end == std::string::npos) end = out.size();
      const std::string line = out.substr(start, end - start);
      const std::size_t eq = line.find('=');
      if (eq != std::string::npos && eq > 0 &&
          line.find(' ') > eq) {  // machine lines carry no spaces before '='
        kv[line.substr(0, eq)] = line.substr(eq + 1);
      }
      start = end + 1;
    }
    return kv;
  }
};

RunResult run_cli(const std::string& args) {
  const std::string cmd =
      std::string("\"") + BBMPH_CLI_PATH + "\" " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) {
    r.out.append(buf, got);
  }
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct TempDir {
  TempDir() {
    path = fs::temp_directory_path() /
           ("bbmph_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
  fs::path path;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("bench run reports sane observed-vs-expected statistics") {
  const auto r = run_cli("--keys 20000 --in-memory --bench --seed 5");
  REQUIRE(r.exit_code == 0);
  const auto kv = r.values();
  CHECK(kv.at("status") == "ok");
  CHECK(kv.at("n") == "20000");
  CHECK(kv.at("key_kind") == "int64");
  CHECK(kv.at("strategy") == "in-memory");
  CHECK(std::stoi(kv.at("levels")) > 0);

  const double bits = std::stod(kv.at("bits_per_key"));
  CHECK(bits > 3.5);
  CHECK(bits < 4.0);

  const double level0 = std::stod(kv.at("level0_fraction"));
  CHECK(level0 > 0.58);
  CHECK(level0 < 0.63);

  CHECK(std::stod(kv.at("query_ns_mean")) > 0.0);
  CHECK(kv.count("query_checksum") == 1);
}

TEST_CASE("thread count changes nothing but timings") {
  TempDir tmp;
  const fs::path f1 = tmp.path / "t1.mphf";
  const fs::path f8 = tmp.path / "t8.mphf";

  const auto r1 = run_cli("--keys 30000 --seed 9 --threads 1 --temp-dir " +
                          tmp.path.string() + " --output " + f1.string());
  const auto r8 = run_cli("--keys 30000 --seed 9 --threads 8 --temp-dir " +
                          tmp.path.string() + " --output " + f8.string());
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r8.exit_code == 0);
  CHECK(read_file(f1) == read_file(f8));
  CHECK(r1.values().at("bits_per_key") == r8.values().at("bits_per_key"));

  const bbmph::Mphf m = bbmph::codec::load(f1);
  CHECK(m.key_count() == 30000);
}

TEST_CASE("onthefly streaming builds the same structure") {
  TempDir tmp;
  const fs::path a = tmp.path / "a.mphf";
  const fs::path b = tmp.path / "b.mphf";
  REQUIRE(run_cli("--keys 20000 --seed 3 --in-memory --output " + a.string())
              .exit_code == 0);
  REQUIRE(run_cli("--keys 20000 --seed 3 --in-memory --onthefly --output " +
                  b.string())
              .exit_code == 0);
  CHECK(read_file(a) == read_file(b));
}

TEST_CASE("nodisk reports zero disk usage") {
  const auto r = run_cli("--keys 20000 --seed 7 --nodisk");
  REQUIRE(r.exit_code == 0);
  const auto kv = r.values();
  CHECK(kv.at("strategy") == "rescan-input");
  CHECK(kv.at("peak_spill_bytes") == "0");
  CHECK(kv.at("spill_ratio") == "0.000000");
}

TEST_CASE("string corpora build") {
  const auto r = run_cli("--strings 5000,18 --in-memory --seed 2");
  REQUIRE(r.exit_code == 0);
  const auto kv = r.values();
  CHECK(kv.at("key_kind") == "string");
  CHECK(kv.at("n") == "5000");
}

TEST_CASE("string keys from a file, including duplicates") {
  TempDir tmp;
  const fs::path good = tmp.path / "good.txt";
  {
    std::ofstream out(good);
    for (int i = 0; i < 1000; ++i) out << "key-" << i << "\n";
  }
  const auto ok = run_cli("--input " + good.string() + " --in-memory");
  REQUIRE(ok.exit_code == 0);
  CHECK(ok.values().at("n") == "1000");
  CHECK(ok.values().at("key_kind") == "string");

  const fs::path dup = tmp.path / "dup.txt";
  {
    std::ofstream out(dup);
    for (int i = 0; i < 500; ++i) out << "key-" << (i % 250) << "\n";
  }
  CHECK(run_cli("--input " + dup.string() + " --in-memory").exit_code == 4);
}

TEST_CASE("config errors exit with code 2") {
  CHECK(run_cli("").exit_code == 2);                      // no key origin
  CHECK(run_cli("--keys 0").exit_code == 2);              // empty input
  CHECK(run_cli("--keys 5 --strings 5,8").exit_code == 2);
  CHECK(run_cli("--keys 100 --nodisk --in-memory").exit_code == 2);
  CHECK(run_cli("--keys 100 --gamma 0.5").exit_code == 2);
  CHECK(run_cli("--strings 10000,2").exit_code == 2);     // infeasible corpus
  CHECK(run_cli("--bogus-flag").exit_code == 2);
}

TEST_CASE("io errors exit with code 3") {
  CHECK(run_cli("--input /nonexistent/keys.txt").exit_code == 3);
  CHECK(run_cli("--keys 10000 --temp-dir /nonexistent/dir").exit_code == 3);
}
