#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeflow/errors.hpp"

namespace edgeflow {

using Json = nlohmann::json;

// Parses a JSON document, translating nlohmann's byte offset into a
// line/column pair for SyntaxError.
inline Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t byte = e.byte;
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SyntaxError(e.what(), line, col);
  }
}

namespace jsonio {

inline void expect_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw FieldError(path, "expected an object");
}

inline void expect_array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw FieldError(path, "expected an array");
}

// Strict mode: every key must be consumed by the parser.
inline void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed,
                                const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw FieldError(path + "." + it.key(), "unknown key");
  }
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FieldError(path + "." + key, "missing required field");
  return *it;
}

inline std::string get_string(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_string()) throw FieldError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

inline double get_number(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number()) throw FieldError(path + "." + key, "expected a number");
  return v.get<double>();
}

inline std::uint64_t get_uint(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number_unsigned())
    throw FieldError(path + "." + key, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

inline bool get_bool(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_boolean()) throw FieldError(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

}  // namespace jsonio
}  // namespace edgeflow
