#include "mdcsa/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "mdcsa/random.hpp"

using json = nlohmann::json;

namespace mdcsa {

std::string file_content_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash missing file " + path);
  std::uint64_t h = 14695981039346656037ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void save_manifest(const RunManifest& manifest, const std::string& path) {
  json j;
  j["format"] = "mdcsa-manifest v1";
  j["command"] = manifest.command;
  j["config"] = manifest.config_path;
  j["seed"] = manifest.seed;
  j["inputs"] = manifest.inputs;
  j["outputs"] = manifest.outputs;
  j["input_manifests"] = manifest.input_manifests;
  j["duration_s"] = manifest.duration_s;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing manifest " + path);
  json j = json::parse(in);
  if (j.value("format", "") != "mdcsa-manifest v1") {
    throw std::runtime_error(path + ": not a manifest file");
  }
  RunManifest m;
  m.command = j.value("command", "");
  m.config_path = j.value("config", "");
  m.seed = j.value("seed", std::uint64_t{0});
  m.inputs = j.value("inputs", std::map<std::string, std::string>{});
  m.outputs = j.value("outputs", std::vector<std::string>{});
  m.input_manifests = j.value("input_manifests", std::vector<std::string>{});
  m.duration_s = j.value("duration_s", 0.0);
  return m;
}

}  // namespace mdcsa
