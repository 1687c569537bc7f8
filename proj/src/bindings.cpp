#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bbmph/analysis.hpp"
#include "bbmph/bbmph.hpp"

namespace py = pybind11;

namespace {

bbmph::BuildConfig make_config(double gamma, unsigned threads,
                               std::uint32_t max_levels,
                               std::uint32_t rank_interval, std::uint64_t seed,
                               const std::string& strategy,
                               const std::string& temp_dir) {
  bbmph::BuildConfig cfg;
  cfg.gamma = gamma;
  cfg.workers = threads;
  cfg.max_levels = max_levels;
  cfg.rank_interval = rank_interval;
  cfg.seed = seed;
  if (strategy == "disk-spill") {
    cfg.strategy = bbmph::Strategy::kDiskSpill;
  } else if (strategy == "rescan-input") {
    cfg.strategy = bbmph::Strategy::kRescanInput;
  } else if (strategy == "in-memory") {
    cfg.strategy = bbmph::Strategy::kInMemory;
  } else {
    throw bbmph::ConfigError("unknown strategy: " + strategy);
  }
  if (!temp_dir.empty()) {
    cfg.temp_dir = temp_dir;
  }
  return cfg;
}

template <class Key>
py::tuple build_and_wrap(const std::vector<Key>& keys,
                         const bbmph::BuildConfig& cfg) {
  auto [m, report] = bbmph::build(keys, cfg);
  return py::make_tuple(std::move(m), std::move(report));
}

}  // namespace

PYBIND11_MODULE(_bbmph, m) {
  m.doc() = "Minimal perfect hashing via cascading collision bit arrays";

  py::register_exception<bbmph::ConfigError>(m, "ConfigError",
                                             PyExc_ValueError);
  py::register_exception<bbmph::DuplicateKeysError>(m, "DuplicateKeysError",
                                                    PyExc_ValueError);
  py::register_exception<bbmph::EmptyInputError>(m, "EmptyInputError",
                                                 PyExc_ValueError);
  py::register_exception<bbmph::NotInFallbackError>(m, "NotInFallbackError",
                                                    PyExc_KeyError);
  py::register_exception<bbmph::FormatError>(m, "FormatError",
                                             PyExc_ValueError);
  py::register_exception<bbmph::VersionError>(m, "VersionError",
                                              PyExc_ValueError);
  py::register_exception<bbmph::TruncatedError>(m, "TruncatedError",
                                                PyExc_ValueError);

  py::class_<bbmph::LevelReport>(m, "LevelReport")
      .def_readonly("key_count", &bbmph::LevelReport::key_count)
      .def_readonly("array_bits", &bbmph::LevelReport::array_bits)
      .def_readonly("placed", &bbmph::LevelReport::placed)
      .def_readonly("record_seconds", &bbmph::LevelReport::record_seconds)
      .def_readonly("filter_seconds", &bbmph::LevelReport::filter_seconds)
      .def("__repr__", [](const bbmph::LevelReport& r) {
        return "LevelReport(keys=" + std::to_string(r.key_count) +
               ", placed=" + std::to_string(r.placed) + ")";
      });

  py::class_<bbmph::BuildReport>(m, "BuildReport")
      .def_readonly("levels", &bbmph::BuildReport::levels)
      .def_readonly("fallback_count", &bbmph::BuildReport::fallback_count)
      .def_readonly("peak_bits_in_memory",
                    &bbmph::BuildReport::peak_bits_in_memory)
      .def_readonly("peak_spill_bytes", &bbmph::BuildReport::peak_spill_bytes)
      .def_readonly("total_seconds", &bbmph::BuildReport::total_seconds)
      .def_property_readonly("level_sizes", &bbmph::BuildReport::level_sizes)
      .def("__repr__", [](const bbmph::BuildReport& r) {
        return "BuildReport(levels=" + std::to_string(r.levels.size()) +
               ", fallback=" + std::to_string(r.fallback_count) + ")";
      });

  py::class_<bbmph::Mphf>(m, "Mphf")
      .def_property_readonly("n", &bbmph::Mphf::key_count)
      .def_property_readonly("gamma", &bbmph::Mphf::gamma)
      .def_property_readonly("seed", &bbmph::Mphf::seed)
      .def_property_readonly("rank_interval", &bbmph::Mphf::rank_interval)
      .def_property_readonly("level_count", &bbmph::Mphf::level_count)
      .def_property_readonly("bits_per_key", &bbmph::Mphf::bits_per_key)
      .def_property_readonly("fallback_count",
                             [](const bbmph::Mphf& self) {
                               return self.fallback_entries().size();
                             })
      .def(
          "query",
          [](const bbmph::Mphf& self, std::uint64_t key) {
            return self.index_of(key);
          },
          py::arg("key"),
          "Index in [0, n) of a 64-bit key from the build set")
      .def(
          "query",
          [](const bbmph::Mphf& self, const py::bytes& key) {
            return self.index_of(std::string_view(std::string(key)));
          },
          py::arg("key"),
          "Index in [0, n) of a byte-string key from the build set")
      .def(
          "query_level",
          [](const bbmph::Mphf& self, std::uint64_t key) {
            return self.level_of(key);
          },
          py::arg("key"))
      .def(
          "query_level",
          [](const bbmph::Mphf& self, const py::bytes& key) {
            return self.level_of(std::string_view(std::string(key)));
          },
          py::arg("key"))
      .def("encode",
           [](const bbmph::Mphf& self) {
             return py::bytes(bbmph::codec::encode(self));
           })
      .def("save",
           [](const bbmph::Mphf& self, const std::filesystem::path& path) {
             bbmph::codec::save(self, path);
           },
           py::arg("path"))
      .def("__len__", &bbmph::Mphf::key_count)
      .def("__repr__", [](const bbmph::Mphf& self) {
        return "Mphf(n=" + std::to_string(self.key_count()) +
               ", levels=" + std::to_string(self.level_count()) + ")";
      });

  m.def(
      "build_int_keys",
      [](const std::vector<std::uint64_t>& keys, double gamma,
         unsigned threads, std::uint32_t max_levels,
         std::uint32_t rank_interval, std::uint64_t seed,
         const std::string& strategy, const std::string& temp_dir) {
        return build_and_wrap(
            keys, make_config(gamma, threads, max_levels, rank_interval, seed,
                              strategy, temp_dir));
      },
      py::arg("keys"), py::arg("gamma") = 2.0, py::arg("threads") = 1,
      py::arg("max_levels") = 25, py::arg("rank_interval") = 512,
      py::arg("seed") = 1, py::arg("strategy") = "in-memory",
      py::arg("temp_dir") = "",
      "Build an Mphf over distinct 64-bit integer keys; returns "
      "(Mphf, BuildReport)");

  m.def(
      "build_string_keys",
      [](const std::vector<std::string>& keys, double gamma, unsigned threads,
         std::uint32_t max_levels, std::uint32_t rank_interval,
         std::uint64_t seed, const std::string& strategy,
         const std::string& temp_dir) {
        return build_and_wrap(
            keys, make_config(gamma, threads, max_levels, rank_interval, seed,
                              strategy, temp_dir));
      },
      py::arg("keys"), py::arg("gamma") = 2.0, py::arg("threads") = 1,
      py::arg("max_levels") = 25, py::arg("rank_interval") = 512,
      py::arg("seed") = 1, py::arg("strategy") = "in-memory",
      py::arg("temp_dir") = "",
      "Build an Mphf over distinct byte-string keys; returns "
      "(Mphf, BuildReport)");

  m.def(
      "decode",
      [](const py::bytes& image) {
        return bbmph::codec::decode(std::string_view(std::string(image)));
      },
      py::arg("image"), "Decode a serialized Mphf image");

  m.def(
      "load",
      [](const std::filesystem::path& path) { return bbmph::codec::load(path); },
      py::arg("path"), "Load a serialized Mphf from a file");

  m.def("generate_keys", &bbmph::generate_keys, py::arg("n"), py::arg("seed"),
        "Deterministic stream of n distinct 64-bit keys");
  m.def(
      "generate_strings",
      [](std::uint64_t n, std::size_t len, std::uint64_t seed) {
        std::vector<std::string> keys = bbmph::generate_strings(n, len, seed);
        py::list out;
        for (const auto& k : keys) out.append(py::bytes(k));
        return out;
      },
      py::arg("n"), py::arg("len"), py::arg("seed"),
      "Deterministic corpus of n distinct byte strings of length len");

  m.def("predict_bits_per_key", &bbmph::analysis::predict_bits_per_key,
        py::arg("gamma"), py::arg("rank_interval") = 512);
  m.def("predict_peak_memory_ratio", &bbmph::analysis::predict_peak_memory_ratio,
        py::arg("gamma"));
  m.def("predict_level_fraction", &bbmph::analysis::predict_level_fraction,
        py::arg("gamma"), py::arg("d"));
  m.def("predict_peak_spill_ratio", &bbmph::analysis::predict_peak_spill_ratio,
        py::arg("gamma"));
  m.def("predict_mean_level", &bbmph::analysis::predict_mean_level,
        py::arg("gamma"));
}
