#pragma once

#include <cstdint>
#include <string>

#include "simarr/system_config.hpp"

namespace simarr {

struct LoadedConfig {
    /// Validated and normalized (unit speeds; original speeds retained).
    SystemConfig config;
    /// Input document re-serialized with sorted keys.
    std::string canonical_json;
    /// FNV-1a of canonical_json; stable under key reordering.
    std::uint64_t hash = 0;
};

/// Parses and validates a JSON config document. Schema errors are collected
/// and reported together (ValidationError, or ParseError for bad syntax);
/// model-level rejections use OrderingViolated, UnstableSystem or Degenerate.
LoadedConfig load_config_text(const std::string& text);
LoadedConfig load_config(const std::string& path);

SystemConfig parse_config(const std::string& path);

/// Human-readable description of the accepted schema.
const char* config_schema_help();

std::uint64_t fnv1a(const std::string& bytes);

}  // namespace simarr
