#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "embedalign/models.hpp"

namespace embedalign {

// Checkpoint container: `LAMD` magic, u32 format version, u32 metadata
// length, JSON metadata, then every parameter tensor (weight then bias per
// layer, row-major) as little-endian float32. Round-trips byte-identically.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct LoadedCheckpoint {
    Model model;
    nlohmann::json metadata;
};

// extra_meta is merged into the written metadata (training hyperparameters,
// epoch, val loss, seed...).
void save_checkpoint(const Model& model, const std::string& path,
                     const nlohmann::json& extra_meta = nlohmann::json::object());

LoadedCheckpoint load_checkpoint(const std::string& path);

// Payload bytes implied by an architecture's dim list.
std::size_t checkpoint_payload_bytes(Arch arch, std::size_t dim, std::size_t classes);

}  // namespace embedalign
