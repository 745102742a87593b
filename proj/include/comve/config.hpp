#pragma once

// Flat key-value run configuration shared by the CLI subcommands.
//
// Format: one `key = value` per line, '#' starts a comment, blank lines
// ignored. Relative paths resolve against the config file's directory.
// Command-line flags override config values.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "comve/analysis.hpp"
#include "comve/ensemble.hpp"
#include "comve/errors.hpp"
#include "comve/util.hpp"

namespace comve {

namespace detail {

// every key the config file may contain; single-path keys are checked for
// existence at validation time
inline const std::set<std::string>& config_path_keys() {
  static const std::set<std::string> keys = {
      "data", "answers", "preds",  "probs_dir", "losses", "statements",
      "refs", "scores",  "human",  "leaderboard"};
  return keys;
}

inline const std::set<std::string>& config_other_keys() {
  static const std::set<std::string> keys = {
      "systems",     "objective",  "top_ks", "format",     "task",
      "forward_cmd", "backward_cmd", "batch_size", "workers", "max_size",
      "output_dir"};
  return keys;
}

}  // namespace detail

struct RunConfig {
  std::filesystem::path base_dir;
  std::map<std::string, std::string> values;  // resolved values

  bool has(const std::string& key) const { return values.contains(key); }

  std::optional<std::string> get(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
  }
};

inline RunConfig validate_config(const std::filesystem::path& config_path) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in)
    throw validation_error("cannot open config file: " + config_path.string());

  RunConfig config;
  config.base_dir = std::filesystem::absolute(config_path).parent_path();

  const std::string origin = config_path.filename().string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    const std::string trimmed = util::trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw validation_error(where + ": expected 'key = value'");
    const std::string key = util::trim(trimmed.substr(0, eq));
    const std::string value = util::trim(trimmed.substr(eq + 1));
    if (key.empty())
      throw validation_error(where + ": missing key");
    if (!detail::config_path_keys().contains(key) &&
        !detail::config_other_keys().contains(key))
      throw validation_error(where + ": unknown key '" + key + "'");
    if (config.values.contains(key))
      throw validation_error(where + ": duplicate key '" + key + "'");
    config.values.emplace(key, value);
  }

  // resolve and check paths
  const auto resolve = [&](const std::string& value) {
    std::filesystem::path p(value);
    return p.is_absolute() ? p : config.base_dir / p;
  };
  for (auto& [key, value] : config.values) {
    if (detail::config_path_keys().contains(key)) {
      const auto p = resolve(value);
      if (!std::filesystem::exists(p))
        throw validation_error("config key '" + key + "': path does not exist: " +
                               p.string());
      value = p.string();
    } else if (key == "systems") {
      std::vector<std::string> resolved;
      for (const auto& part : util::split(value, ',')) {
        const std::string item = util::trim(part);
        if (item.empty()) continue;
        const auto p = resolve(item);
        if (!std::filesystem::exists(p))
          throw validation_error("config key 'systems': path does not exist: " +
                                 p.string());
        resolved.push_back(p.string());
      }
      value = util::join(resolved, ",");
    } else if (key == "output_dir") {
      value = resolve(value).string();  // outputs are created, not checked
    } else if (key == "objective") {
      try {
        objective_from_string(value);
      } catch (const validation_error& e) {
        throw validation_error("config key 'objective': " +
                               std::string(e.what()));
      }
    } else if (key == "format") {
      try {
        report_format_from_string(value);
      } catch (const validation_error& e) {
        throw validation_error("config key 'format': " +
                               std::string(e.what()));
      }
    } else if (key == "task") {
      if (value != "pairs" && value != "choices")
        throw validation_error(
            "config key 'task': unknown value '" + value +
            "' (allowed: pairs, choices)");
    } else if (key == "batch_size" || key == "workers" || key == "max_size") {
      const long n = util::parse_long(value, "config key '" + key + "'");
      if (n < 0)
        throw validation_error("config key '" + key + "' must be >= 0");
    } else if (key == "top_ks") {
      for (const auto& part : util::split(value, ','))
        util::parse_long(part, "config key 'top_ks'");
    }
  }
  return config;
}

}  // namespace comve
