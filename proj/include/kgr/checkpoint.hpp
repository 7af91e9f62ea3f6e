#pragma once

#include <fstream>
#include <string>

#include "kgr/io.hpp"
#include "kgr/policy.hpp"

namespace kgr {

// Single-file checkpoint, little-endian throughout:
//   magic "KGRCKPT1" | u32 format version | u32 d,h,mlp,layers |
//   u64 entity count | u64 relation count | u64 vocabulary fingerprint |
//   u64 parameter version | per tensor: name, u64 rows, u64 cols,
//   rows*cols f64 in row-major order.
inline constexpr char kCheckpointMagic[8] = {'K', 'G', 'R', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointFormat = 1;

inline void save_checkpoint(const PolicyNetwork& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_u32(os, kCheckpointFormat);
  write_u32(os, static_cast<std::uint32_t>(net.config().embed_dim));
  write_u32(os, static_cast<std::uint32_t>(net.config().hidden_size));
  write_u32(os, static_cast<std::uint32_t>(net.config().mlp_size));
  write_u32(os, static_cast<std::uint32_t>(net.config().encoder_layers));
  write_u64(os, net.entity_count());
  write_u64(os, net.relation_count());
  write_u64(os, net.vocab_fingerprint());
  write_u64(os, net.version());
  net.params().for_each_tensor([&](const std::string& name, const MatrixXd& m) {
    write_string(os, name);
    write_u64(os, static_cast<std::uint64_t>(m.rows()));
    write_u64(os, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(os, m(r, c));
    }
  });
  if (!os) throw DataError("failed writing checkpoint: " + path);
}

// Loads and validates against the live vocabulary; a fingerprint mismatch is
// a hard error so a model can never run against the wrong graph.
inline PolicyNetwork load_checkpoint(const std::string& path, std::uint64_t expected_fingerprint) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::string_view(magic, 8) != std::string_view(kCheckpointMagic, 8)) {
    throw CheckpointError("bad checkpoint magic in " + path);
  }
  if (read_u32(is) != kCheckpointFormat) throw CheckpointError("unsupported checkpoint format");
  PolicyConfig cfg;
  cfg.embed_dim = static_cast<int>(read_u32(is));
  cfg.hidden_size = static_cast<int>(read_u32(is));
  cfg.mlp_size = static_cast<int>(read_u32(is));
  cfg.encoder_layers = static_cast<int>(read_u32(is));
  const std::uint64_t entities = read_u64(is);
  const std::uint64_t relations = read_u64(is);
  const std::uint64_t fingerprint = read_u64(is);
  const std::uint64_t version = read_u64(is);
  if (fingerprint != expected_fingerprint) {
    throw VocabularyMismatch("checkpoint vocabulary fingerprint " + hex64(fingerprint) +
                             " does not match the loaded graph (" +
                             hex64(expected_fingerprint) + ")");
  }
  PolicyNetwork net = PolicyNetwork::init(cfg, entities, relations, fingerprint, /*seed=*/0);
  while (net.version() < version) net.bump_version();
  net.params().for_each_tensor([&](const std::string& name, MatrixXd& m) {
    const std::string stored = read_string(is);
    if (stored != name) {
      throw CheckpointError("checkpoint tensor order mismatch: expected " + name + ", got " +
                            stored);
    }
    const auto rows = static_cast<Eigen::Index>(read_u64(is));
    const auto cols = static_cast<Eigen::Index>(read_u64(is));
    if (rows != m.rows() || cols != m.cols()) {
      throw CheckpointError("checkpoint tensor " + name + " has unexpected shape");
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = read_f64(is);
    }
  });
  return net;
}

}  // namespace kgr
