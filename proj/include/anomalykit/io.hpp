/// @file io.hpp
/// @brief Self-describing artifacts: measurement JSON, field CSV, and a
/// writer that records every file it emits.
#pragma once

#include "anomalykit/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace anomalykit {

/// Shortest decimal form that round-trips (%.17g).
std::string format_double(double x);

Json measurements_to_json(const MeasurementSet& m, const std::string& hash);
/// Inverse of measurements_to_json; throws ConfigError on malformed input.
MeasurementSet measurements_from_json(const Json& j);
MeasurementSet load_measurements(const std::filesystem::path& path);

/// Writes artifacts under one directory, stamping each with the format
/// version and config hash, and keeps the list for the manifest.
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, std::string hash);

  const std::filesystem::path& dir() const { return dir_; }
  const std::string& hash() const { return hash_; }

  /// Adds "format_version" and "config_hash" at the top level.
  void json(const std::string& name, Json body);
  /// The first line is "# format_version=<v> config_hash=<hash>".
  void csv(const std::string& name, const std::string& header, const std::vector<std::vector<std::string>>& rows);
  /// Snapshot of every field: x,y,field,value.
  void field_csv(const std::string& name, const Grid& g, const State& s);

  struct Entry {
    std::string path;
    std::uintmax_t bytes = 0;
  };
  const std::vector<Entry>& files() const { return files_; }

 private:
  void write(const std::string& name, const std::string& text);

  std::filesystem::path dir_;
  std::string hash_;
  std::vector<Entry> files_;
};

}  // namespace anomalykit
