#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "platewaste/nets.hpp"
#include "platewaste/optim.hpp"

namespace platewaste {

// Binary layout (little-endian):
//   8 bytes  magic "PWCKPT\0\0"
//   u32      format version
//   u64      header length L
//   L bytes  JSON header: config, init_seed, tensors, optimizer scalars, metadata
//   f64[P]   parameters, then f64[P] m and f64[P] v when the optimizer is saved
struct Checkpoint {
  ModelConfig config;
  std::uint64_t init_seed = 0;
  std::vector<double> params;
  std::optional<OptimState> optim;
  nlohmann::json metadata = nlohmann::json::object();
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const OptimState* optim = nullptr,
                     const nlohmann::json& metadata = nlohmann::json::object());
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// MissingFile, FormatError on a bad magic/version/truncation, ShapeMismatch
// when the stored tensors disagree with the rebuilt architecture.
Checkpoint load_checkpoint(const std::filesystem::path& path);

Model model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace platewaste
