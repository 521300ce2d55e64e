#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anderson/io.hpp"

namespace anderson::harness {

using io::json;

inline constexpr const char* version_tag = "anderson-1.0.0";

/// Flat key/value configuration. Keys are dotted paths ("disorder.lambda").
/// Text form: one `key = value` per line, `#` comments, optional `[section]`
/// headers that prefix the following keys. Lists are comma separated.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
  void erase(const std::string& key) { entries_.erase(key); }
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  /// Canonical text (sorted keys), parseable by parse().
  std::string text() const;

 private:
  std::map<std::string, std::string> entries_;
};

/// Validated top-level blocks. Diagnostic parameters stay in `values` and are
/// checked by the diagnostic before any work starts.
struct ExperimentConfig {
  Config values;
  std::string diagnostic;
  std::uint64_t master_seed = 0;
  std::size_t n_samples = 100;
  unsigned workers = 1;
  std::filesystem::path output = "out";
  io::Format format = io::Format::csv;

  static ExperimentConfig from(const Config& config);
};

std::vector<std::string> available_diagnostics();

/// Stream key of the diagnostic's ensemble: hash(master seed, fnv1a(name)).
std::uint64_t diagnostic_seed(std::uint64_t master_seed, const std::string& diagnostic);

struct OutputFile {
  std::string name;
  std::string path;  ///< relative to the output directory
};

struct RunManifest {
  ExperimentConfig config;
  std::vector<OutputFile> outputs;
  json headline = json::object();  ///< small scalar summary of the run
  double wall_clock_seconds = 0.0;
  bool complete = false;
  std::string error;

  json to_json() const;
  static RunManifest from_json(const json& doc);
};

/// Validates, executes the diagnostic over the ensemble, writes its outputs
/// and manifest.json into config.output. A failure after validation leaves a
/// manifest marked incomplete and rethrows.
RunManifest run(const ExperimentConfig& config);

struct SweepResult {
  std::vector<RunManifest> runs;
  io::Table summary;
  std::filesystem::path summary_path;
};

/// One sub-run per value in <output>/sweep_<i>, master seed hash(master, i).
/// The path must name a scalar parameter read by the diagnostic.
SweepResult sweep(const ExperimentConfig& config, const std::string& path,
                  const std::vector<std::string>& values);

struct ReplayReport {
  RunManifest manifest;
  std::vector<std::string> mismatched;  ///< output names whose bytes differ
  bool identical() const { return mismatched.empty(); }
};

/// Re-runs the configuration echoed in a manifest into `output` and compares
/// every output file byte for byte with the originals next to the manifest.
ReplayReport replay(const std::filesystem::path& manifest_path, const std::filesystem::path& output,
                    std::optional<unsigned> workers = std::nullopt);

}  // namespace anderson::harness
