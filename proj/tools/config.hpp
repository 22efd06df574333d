#pragma once

// Typed access to config values with JSON-path locations in error messages.

#include <cstdint>
#include <string>
#include <vector>

#include "cli.hpp"

namespace dapce::cli {

inline std::string child(const std::string& where, const std::string& key) { return where + "." + key; }

[[noreturn]] inline void config_type_error(const std::string& where, const char* expected) {
  fail(ErrorKind::Config, where + ": expected " + expected);
}

inline const Json* find(const Json& object, const std::string& key) {
  const auto it = object.find(key);
  return it == object.end() || it->is_null() ? nullptr : &*it;
}

inline const Json& object_at(const Json& object, const std::string& key, const std::string& where) {
  static const Json empty = Json::object();
  const Json* v = find(object, key);
  if (!v) return empty;
  if (!v->is_object()) config_type_error(child(where, key), "an object");
  return *v;
}

inline double as_double(const Json& v, const std::string& where) {
  if (!v.is_number()) config_type_error(where, "a number");
  return v.get<double>();
}

inline std::int64_t as_int(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) {
    // Allow integral floats such as 1e5.
    if (v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<std::int64_t>(v.get<double>()))) {
      return static_cast<std::int64_t>(v.get<double>());
    }
    config_type_error(where, "an integer");
  }
  return v.get<std::int64_t>();
}

inline std::string as_string(const Json& v, const std::string& where) {
  if (!v.is_string()) config_type_error(where, "a string");
  return v.get<std::string>();
}

inline double get_double(const Json& o, const std::string& key, const std::string& where, double fallback) {
  const Json* v = find(o, key);
  return v ? as_double(*v, child(where, key)) : fallback;
}

inline std::int64_t get_int(const Json& o, const std::string& key, const std::string& where, std::int64_t fallback,
                            std::int64_t min = INT64_MIN) {
  const Json* v = find(o, key);
  if (!v) return fallback;
  const std::int64_t r = as_int(*v, child(where, key));
  if (r < min) fail(ErrorKind::Config, child(where, key) + ": must be at least " + std::to_string(min));
  return r;
}

inline std::string get_string(const Json& o, const std::string& key, const std::string& where,
                              const std::string& fallback) {
  const Json* v = find(o, key);
  return v ? as_string(*v, child(where, key)) : fallback;
}

inline bool get_bool(const Json& o, const std::string& key, const std::string& where, bool fallback) {
  const Json* v = find(o, key);
  if (!v) return fallback;
  if (!v->is_boolean()) config_type_error(child(where, key), "true or false");
  return v->get<bool>();
}

inline std::vector<int> get_int_list(const Json& o, const std::string& key, const std::string& where,
                                     const std::vector<int>& fallback) {
  const Json* v = find(o, key);
  if (!v) return fallback;
  if (!v->is_array()) config_type_error(child(where, key), "an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    out.push_back(static_cast<int>(as_int((*v)[i], child(where, key) + "[" + std::to_string(i) + "]")));
  }
  return out;
}

/// Re-raises library Config errors with the location of the offending value.
template <class F>
auto at_location(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Config && e.kind() != ErrorKind::InvalidInput) throw;
    fail(ErrorKind::Config, where + ": " + e.what());
  }
}

}  // namespace dapce::cli
