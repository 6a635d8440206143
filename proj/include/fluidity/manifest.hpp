#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"

namespace fluidity {

// Provenance of one command run. Timestamps live only here so the primary
// outputs stay byte-identical across reruns.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::string> input_hashes;  // path -> sha256
  std::uint64_t seed = 0;
  std::string tool_version;
  std::string started_at;
  std::string finished_at;

  nlohmann::json to_json() const;
};

// ISO 8601 UTC, second precision.
std::string utc_timestamp();

// `<output>.manifest.json`, next to the output it describes.
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& output);

}  // namespace fluidity
