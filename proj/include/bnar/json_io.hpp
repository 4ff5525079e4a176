#pragma once

// JSON conversions for configuration types (nlohmann ADL hooks).

#include <json.hpp>
#include <string>

#include "bnar/error.hpp"
#include "bnar/full_model.hpp"

namespace bnar {

void to_json(nlohmann::json& j, const GridConfig& g);
void from_json(const nlohmann::json& j, GridConfig& g);
void to_json(nlohmann::json& j, const ForceConfig& f);
void from_json(const nlohmann::json& j, ForceConfig& f);
void to_json(nlohmann::json& j, const IntegratorConfig& c);
void from_json(const nlohmann::json& j, IntegratorConfig& c);

/// Complex numbers as [re, im] pairs.
nlohmann::json complex_array(std::span<const cplx> v);
ModeVector parse_complex_array(const nlohmann::json& j);

/// Reads `key` from `j`, throwing ConfigError naming the key when it is
/// missing or has the wrong type.
template <typename T>
T required(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T optional(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return required<T>(j, key);
}

}  // namespace bnar
