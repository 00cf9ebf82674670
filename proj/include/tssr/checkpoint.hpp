#pragma once

// Self-describing checkpoint container:
//
//   "TSSRCKPT" | u32 format version | u64 header bytes | JSON header | f64 data
//
// The JSON header echoes the model configuration and lists every tensor with
// its shape and byte offset into the data block. Values are stored as raw
// little-endian IEEE doubles, so a save/load round trip is bit-exact.

#include "tssr/autodiff.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tssr {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix value;
};

struct Checkpoint {
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  void store(const ParameterSet& params);
  /// Copies every tensor whose name matches a parameter; all parameters must be present.
  void load_into(ParameterSet& params) const;
  [[nodiscard]] bool contains(std::string_view name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tssr
