#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "chebmixer/training.hpp"

namespace chebmixer {

/// Thrown for unknown keys or malformed values; maps to exit code 2 in the
/// CLI.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Flat key = value configuration with documented defaults. File values are
/// applied first, command-line overrides second.
struct RunConfig {
    TrainConfig train;
    bool record_timing = true;  // timing = wall | none

    /// Applies one key/value pair; unknown keys raise ConfigError naming the
    /// key.
    void set(const std::string& key, const std::string& value);

    /// Parses a flat key = value file with '#' comments.
    void load_file(const std::filesystem::path& path);

    /// Effective configuration as ordered key/value text pairs (echoed into
    /// result.json and printed by the CLI).
    std::map<std::string, std::string> echo() const;
};

}  // namespace chebmixer
