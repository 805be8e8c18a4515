#ifndef HPE_CONFIG_HPP
#define HPE_CONFIG_HPP

#include <filesystem>
#include <string_view>

#include "json.hpp"

namespace hpe::config {

/// Parses the TOML subset used by the bundled configs into a JSON object:
/// [tables], dotted keys, strings, integers (with '_' separators), floats,
/// booleans, arrays (may span lines) and inline tables. Dates and
/// multi-line strings are not supported. Throws ValidationError with a
/// line number on malformed input.
nlohmann::json parse_toml(std::string_view text);

/// Loads a .toml or .json file (chosen by extension) as JSON.
nlohmann::json load_file(const std::filesystem::path& path);

}  // namespace hpe::config

#endif
