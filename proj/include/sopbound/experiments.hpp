#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sopbound/config.hpp"
#include "sopbound/policy.hpp"
#include "sopbound/volume.hpp"

namespace sopbound::experiments {

inline constexpr const char* kToolVersion = "0.1.0";

/// One output file held in memory before it is written.
struct OutputFile {
  std::string name;
  std::string content;
};

struct ManifestEntry {
  std::string name;
  std::string sha256;
};

struct RunManifest {
  std::string kind;
  std::uint64_t seed = 0;
  std::string version;
  std::string config_sha256;  // of config.resolved.ini
  std::vector<ManifestEntry> outputs;
};

std::string sha256_hex(const std::string& bytes);

/// Shortest text that parses back to the same double; nan and inf are
/// spelled out.
std::string format_number(double value);

/// Runs the experiment named by the config without touching the disk.
std::vector<OutputFile> run_experiment(const config::ResolvedConfig& cfg);

/// Runs the experiment and writes its outputs, config.resolved.ini and
/// manifest.json into cfg.out(). Throws Error when the directory cannot be
/// created or written.
RunManifest run(const config::ResolvedConfig& cfg);

std::string manifest_json(const RunManifest& manifest);
RunManifest read_manifest(const std::string& dir);

/// Recomputes every checksum listed in dir/manifest.json. Returns the names
/// whose contents no longer match; empty when the directory is intact.
std::vector<std::string> verify_manifest(const std::string& dir);

/// iteration,avg_reward,q_error,avg_policy with one row per trace row.
std::string emit_training_trace(const policy::TrainingTrace& trace);
policy::TrainingTrace parse_training_trace(std::istream& in);

/// complexity.csv and accuracy.csv: iteration, expected_volume,
/// sop_volume_proxy, ratio (sop proxy over expected volume). Complexity is
/// the cumulative number of objective evaluations; accuracy is the objective
/// relative to its initial value. Searches that stopped early are padded
/// with their final step. Throws NumericalError on a zero denominator.
std::vector<OutputFile> emit_complexity_accuracy(const volume::GreedyResult& expected_volume,
                                                 const volume::GreedyResult& sop_proxy,
                                                 const std::vector<long>& iterations);

}  // namespace sopbound::experiments
