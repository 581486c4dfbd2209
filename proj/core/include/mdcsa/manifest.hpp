#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mdcsa {

/// Provenance record written next to every command's outputs. Manifests
/// chain: each lists the manifests of the artifacts it consumed.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // path -> content hash
  std::vector<std::string> outputs;            // paths, relative to the manifest
  std::vector<std::string> input_manifests;
  double duration_s = 0.0;
};

/// FNV-1a over the file bytes, rendered as 16 hex digits.
std::string file_content_hash(const std::string& path);

void save_manifest(const RunManifest& manifest, const std::string& path);
RunManifest load_manifest(const std::string& path);

}  // namespace mdcsa
