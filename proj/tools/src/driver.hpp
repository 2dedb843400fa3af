#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace mtbem::driver {

struct RunOptions {
  std::filesystem::path out_root = "out";
  int threads = 1;
  std::uint64_t seed = 0;
};

struct RunSummary {
  std::filesystem::path directory;
  nlohmann::json report;
  // False when a configured threshold was exceeded.
  bool thresholds_met = true;
};

// FNV-1a of the canonical (sorted, compact) JSON text.
std::string config_hash(const nlohmann::json& doc);

// out_root/<name>/<UTC timestamp>/, with out_root/<name>/latest pointing at it.
std::filesystem::path make_run_directory(const std::filesystem::path& out_root, const std::string& name);

// Assembles, solves and writes every requested output. Throws SolverError,
// MeshError or QuadratureError on failure.
RunSummary run(const SceneConfig& config, const nlohmann::json& document, const RunOptions& options);

// One run per value in subdirectories, aggregated sweep.csv plus
// condition.csv / timing.csv when requested. Failed values are recorded and
// the sweep continues.
RunSummary sweep(const SceneConfig& config, const nlohmann::json& document, const SweepSpec& spec,
                 const RunOptions& options);

// Writes <out>/<formulation>.mtx for every configured formulation.
std::vector<std::filesystem::path> export_matrices(const SceneConfig& config, const std::filesystem::path& out,
                                                   const RunOptions& options);

}  // namespace mtbem::driver
