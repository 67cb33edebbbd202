#pragma once

#include <string>

#include "fpm/optics.hpp"

namespace fpm::presets {

/// Built-in optical presets. Masks are explicit per-LED data:
///   table1: 32px field, 7x7 grid minus the 4 corner LEDs (45 active)
///   table2: 512px field, 9x9 grid minus 3 LEDs per corner (69 active)
///   table3: 4px field, 3x3 grid, all 9 active
bool is_builtin(const std::string& name);
optics::OpticalConfig builtin(const std::string& name);

/// Resolve a --preset argument: a builtin name or a path to a JSON file.
optics::OpticalConfig resolve(const std::string& name_or_path);

optics::OpticalConfig load_json(const std::string& path);
void save_json(const optics::OpticalConfig& cfg, const std::string& path);

/// Canonical JSON text for a config (also what save_json writes).
std::string to_json(const optics::OpticalConfig& cfg);

}  // namespace fpm::presets
