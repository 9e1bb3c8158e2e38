#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "odepth/network.hpp"

namespace odepth {

/// Training state stored alongside the weights.
struct CheckpointMeta {
  std::string stage = "fresh";  ///< "fresh", "pretrain", "finetune"
  int iterations_done = 0;
  std::uint64_t seed = 0;
  double bin_d_min = 0.0;  ///< binning used by a classification head (0 = none)
  double bin_d_max = 0.0;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

/// Layout: "ODCK", u32 version, u64 manifest length, JSON manifest (network
/// config, config hash, tensor table, meta), then float64 little-endian
/// payloads in manifest order. Parameters, their momentum buffers and the
/// normalisation statistics are all stored, so a resumed run continues
/// bit-exactly.
void save_checkpoint(Network& net, const CheckpointMeta& meta, const std::filesystem::path& path);

struct LoadedCheckpoint {
  Network net;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace odepth
