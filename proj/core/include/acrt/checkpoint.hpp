#pragma once

// Self-describing JSON checkpoints. Tensors are stored row-major with 17
// significant digits, so a save/load round trip is value-exact.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "acrt/netcore.hpp"
#include "acrt/train.hpp"

namespace acrt {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  NetworkParams params;
  std::optional<ModelConfig> model_config;
  std::optional<TrainConfig> train_config;
  std::uint64_t seed = 0;
  double split_fraction = 0.0;
  std::string origin;  // "train", "construct", ...
};

std::string checkpoint_to_string(const Checkpoint& ckpt);
/// Throws std::runtime_error on malformed input or an unknown version.
Checkpoint checkpoint_from_string(const std::string& text);

/// Writes through a temporary file and a rename.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// %.17g without locale dependence. Throws on non-finite values.
std::string format_double(double x);

}  // namespace acrt
