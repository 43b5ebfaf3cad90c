#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace acre {

// Configs reject unknown keys at every level so typos fail loudly instead of
// silently running defaults.
inline void require_allowed_keys(const nlohmann::json& j,
                                 const std::vector<std::string>& allowed,
                                 const std::string& where) {
  if (!j.is_object()) {
    throw std::invalid_argument(where + ": expected a JSON object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw std::invalid_argument(where + ": unknown key \"" + it.key() + "\"");
    }
  }
}

template <class T>
T json_get(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace acre
