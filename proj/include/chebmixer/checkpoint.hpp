#pragma once

#include <filesystem>
#include <optional>

#include "chebmixer/model.hpp"

namespace chebmixer {

/// Binary container: magic "CMX1", u32 little-endian header length, UTF-8
/// key = value header (model config plus an ordered tensor manifest), then
/// raw little-endian 64-bit floats in manifest order. Round-trips are
/// bitwise exact.
void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::filesystem::path& path);

struct Checkpoint {
    ModelParams params;
    ModelConfig cfg;
};

/// Validates magic, version and shape consistency against the embedded
/// config. When `expected` is given, every tensor shape implied by it must
/// match the stored manifest; the first offender is named in the error.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<ModelConfig>& expected = std::nullopt);

}  // namespace chebmixer
