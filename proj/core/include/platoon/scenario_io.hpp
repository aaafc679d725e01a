#pragma once

#include "platoon/simulator.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace platoon {

/// Parse a scenario document (INI-style sections). Unknown sections or keys
/// are rejected; omitted keys take their documented defaults. Throws
/// ConfigError with file/line diagnostics.
Scenario parse_scenario(std::string_view text, const std::string& origin = "<string>");

Scenario load_scenario(const std::filesystem::path& path);

/// Canonical fully-resolved document: every key explicit, doubles in
/// shortest round-trip form. parse_scenario(serialize_scenario(s)) yields an
/// identical scenario.
std::string serialize_scenario(const Scenario& scenario);

}  // namespace platoon
