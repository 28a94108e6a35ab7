#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace nplab::config {

// Loads a JSON config; a top-level "include" (path or list of paths, relative
// to the including file) is merged first, with the including document taking
// precedence key-by-key.
nlohmann::json load(const std::string& path);

// Rejects keys outside `allowed`; throws listing the offending field path.
void require_known_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                        const std::string& where);

// Fetch with schema errors carrying the field path.
double get_number(const nlohmann::json& j, const std::string& key, double fallback);
std::string get_string(const nlohmann::json& j, const std::string& key, const std::string& fallback);

} // namespace nplab::config
