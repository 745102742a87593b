#pragma once

// JSON Lines input: one object per line, blank lines ignored.

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "comve/errors.hpp"
#include "comve/util.hpp"

namespace comve::jsonl {

using json = nlohmann::json;

inline void for_each_record(
    const std::filesystem::path& path,
    const std::function<void(std::size_t line, const json&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw validation_error("cannot open file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  const std::string origin = path.filename().string();
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw validation_error(origin + ":" + std::to_string(line_no) +
                             ": invalid JSON: " + e.what());
    }
    if (!rec.is_object())
      throw validation_error(origin + ":" + std::to_string(line_no) +
                             ": expected a JSON object");
    fn(line_no, rec);
  }
}

// Fetches a mandatory field, with the line number in the error message.
template <typename T>
T field(const json& rec, const char* key, const std::string& origin,
        std::size_t line) {
  if (!rec.contains(key))
    throw validation_error(origin + ":" + std::to_string(line) +
                           ": missing field '" + key + "'");
  try {
    return rec.at(key).get<T>();
  } catch (const json::exception&) {
    throw validation_error(origin + ":" + std::to_string(line) +
                           ": field '" + key + "' has the wrong type");
  }
}

}  // namespace comve::jsonl
