#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace moeplan {

inline constexpr const char* kVersion = "0.1.0";

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 1469598103934665603ull;
  for (const unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream contents;
  contents << in.rdbuf();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(contents.str())));
  return buf;
}

struct ManifestInput {
  std::string name;
  std::string path;
  std::string digest;  // fnv1a-64 of the file contents
};

// Provenance block embedded in every report: identical manifests (timestamp
// aside) imply identical outputs.
struct RunManifest {
  std::string command;
  std::vector<ManifestInput> inputs;
  std::string version = kVersion;
  std::string timestamp;  // ISO 8601 UTC
};

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline RunManifest make_manifest(
    std::string command,
    const std::vector<std::pair<std::string, std::string>>& inputs) {
  RunManifest manifest;
  manifest.command = std::move(command);
  manifest.timestamp = utc_timestamp();
  for (const auto& [name, path] : inputs) {
    manifest.inputs.push_back({name, path, file_digest(path)});
  }
  return manifest;
}

}  // namespace moeplan
