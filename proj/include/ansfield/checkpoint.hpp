#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "ansfield/denoiser.hpp"

namespace ansfield {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    DenoiserConfig config;
    DenoiserParams params;
    /// Free-form provenance (training config, hash, step count).
    nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const DenoiserConfig& config);
DenoiserConfig denoiser_config_from_json(const nlohmann::json& j);

/// Writes `<stem>.bin` (arrays) and `<stem>.json` (manifest).
void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& ckpt);
/// Reads both files back; shapes are validated against the config. Throws FormatError / ShapeMismatch.
Checkpoint load_checkpoint(const std::filesystem::path& stem);

std::filesystem::path checkpoint_bin(const std::filesystem::path& stem);
std::filesystem::path checkpoint_manifest(const std::filesystem::path& stem);

}  // namespace ansfield
