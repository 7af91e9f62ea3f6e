#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgr/errors.hpp"
#include "kgr/hash.hpp"
#include "kgr/version.hpp"

namespace kgr {

// Provenance record emitted once per run. Input files are identified by
// content hash so a rerun can prove it saw the same bytes; outputs are listed
// relative to the run directory. Deliberately free of timestamps — manifests
// from identical runs must be byte-identical.
struct RunManifest {
  std::string version = kVersionTag;
  std::string command;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;        // flat key = value snapshot
  std::map<std::string, std::string> input_hashes;  // role -> fnv1a-64 hex of file bytes
  std::vector<std::string> outputs;                 // run-dir-relative paths
  std::string checkpoint;                           // written or consumed checkpoint, if any

  void add_input(const std::string& role, const std::string& path) {
    input_hashes[role] = hex64(hash_file(path));
  }

  std::string to_json() const {
    nlohmann::ordered_json j;
    j["version"] = version;
    j["command"] = command;
    j["seed"] = seed;
    j["config"] = config;
    j["inputs"] = input_hashes;
    j["outputs"] = outputs;
    if (!checkpoint.empty()) j["checkpoint"] = checkpoint;
    return j.dump(2) + "\n";
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write manifest " + path);
    out << to_json();
  }
};

}  // namespace kgr
