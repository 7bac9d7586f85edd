#pragma once

#include <nlohmann/json.hpp>

#include <set>
#include <string>
#include <type_traits>
#include <utility>

#include "cycloroute/core/errors.hpp"

namespace cycloroute {

/// Reads declared keys from a JSON object; finish() rejects any key that was
/// never declared. Errors are ConfigError and name the offending field.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw Error(ErrorCode::ConfigError, where_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (v.is_number_integer() && v.get<long long>() < 0) {
        throw Error(ErrorCode::ConfigError, field(key) + ": must be nonnegative");
      }
    }
    try {
      out = v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigError, field(key) + ": " + e.what());
    }
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw Error(ErrorCode::ConfigError, "unknown key " + where_ + "." + k);
    }
  }

  std::string field(const std::string& key) const { return where_ + "." + key; }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace cycloroute
