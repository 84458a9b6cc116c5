#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "iwv/errors.hpp"
#include "iwv/io.hpp"
#include "iwv/strings.hpp"

namespace iwv {

// Flat "key = value" config file. '#' starts a comment, blank lines are
// skipped, later assignments override earlier ones.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text) {
    KeyValueConfig cfg;
    std::size_t line_no = 0;
    for (std::string_view line : split(text, '\n')) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
      }
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (key.empty()) {
        throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
      }
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::filesystem::path& path) {
    return parse(read_file_auto(path));
  }

  bool has(std::string_view key) const { return values_.find(key) != values_.end(); }

  std::string get_string(std::string_view key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key: " + std::string(key));
    return it->second;
  }

  std::string get_string(std::string_view key, std::string fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? std::move(fallback) : it->second;
  }

  long long get_int(std::string_view key) const { return to_int(key, get_string(key)); }
  long long get_int(std::string_view key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("config key " + std::string(key) + ": not an unsigned integer: " + v);
    }
    return out;
  }

  double get_double(std::string_view key) const { return to_double(key, get_string(key)); }
  double get_double(std::string_view key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  bool get_bool(std::string_view key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = ascii_lower(get_string(key));
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("config key " + std::string(key) + ": not a boolean: " + v);
  }

  // Comma-separated list, each element trimmed; empty elements dropped.
  std::vector<std::string> get_list(std::string_view key) const {
    const std::string value = get_string(key);  // keep alive for the views below
    std::vector<std::string> out;
    for (auto part : split(value, ',')) {
      const auto t = trim(part);
      if (!t.empty()) out.emplace_back(t);
    }
    return out;
  }

 private:
  static long long to_int(std::string_view key, const std::string& v) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("config key " + std::string(key) + ": not an integer: " + v);
    }
    return out;
  }

  static double to_double(std::string_view key, const std::string& v) {
    double out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("config key " + std::string(key) + ": not a number: " + v);
    }
    return out;
  }

  std::unordered_map<std::string, std::string, StringHash, std::equal_to<>> values_;
};

}  // namespace iwv
