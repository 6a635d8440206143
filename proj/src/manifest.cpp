#include "fluidity/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "fluidity/error.hpp"

namespace fluidity {

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},
          {"config", config},
          {"input_hashes", input_hashes},
          {"seed", seed},
          {"tool_version", tool_version},
          {"started_at", started_at},
          {"finished_at", finished_at}};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  return std::filesystem::path(output.string() + ".manifest.json");
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& output) {
  const auto path = manifest_path_for(output);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << manifest.to_json().dump(2) << '\n';
}

}  // namespace fluidity
