#pragma once

// Shared JSON conversions for the on-disk record formats.

#include <json.hpp>

#include "actforge/errors.hpp"
#include "actforge/textenv.hpp"

namespace actforge::jsonio {

using nlohmann::json;

json context_to_json(const textenv::Context& c);
/// Throws DataError on missing or mistyped fields.
textenv::Context context_from_json(const json& j);

/// Reads a JSONL file, parsing each non-empty line; parse failures raise
/// ParseError with the 1-based line number.
struct JsonLine {
  std::size_t line;
  json value;
};
std::vector<JsonLine> read_jsonl(const std::string& path);

/// Compact one-line dump with stable key order.
std::string dump_line(const json& j);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

template <typename T>
T get_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw actforge::DataError(std::string("missing field '") + key + "'");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw actforge::DataError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace actforge::jsonio
