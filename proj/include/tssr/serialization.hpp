#pragma once

// JSON forms of the configuration types. Parsing is strict: unknown keys and
// wrongly typed values raise ErrorKind::Config naming the offending path.
// Missing keys keep their defaults.

#include "tssr/discriminator.hpp"
#include "tssr/errors.hpp"
#include "tssr/generator.hpp"
#include "tssr/timeseries.hpp"

#include <json.hpp>

#include <initializer_list>
#include <string>
#include <string_view>
#include <type_traits>

namespace tssr {

/// Throws when j is not an object or holds a key outside allowed.
void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, const std::string& where);

nlohmann::json to_json(const ResamplingTask& task);
nlohmann::json to_json(const GeneratorConfig& cfg);
nlohmann::json to_json(const DiscriminatorConfig& cfg);
nlohmann::json to_json(const Normalization& norm);

void from_json(const nlohmann::json& j, ResamplingTask& task, const std::string& where = "task");
void from_json(const nlohmann::json& j, GeneratorConfig& cfg, const std::string& where = "generator");
void from_json(const nlohmann::json& j, DiscriminatorConfig& cfg, const std::string& where = "discriminator");
void from_json(const nlohmann::json& j, Normalization& norm, const std::string& where = "normalization");

/// Reads j[key] into out when present, converting type errors into Config errors.
template <typename T>
void read_key(const nlohmann::json& j, std::string_view key, T& out, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>)
    require(it->is_number_integer(), ErrorKind::Config, where + "." + std::string(key) + ": expected an integer");
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, where + "." + std::string(key) + ": " + e.what());
  }
}

}  // namespace tssr
