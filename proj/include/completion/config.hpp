// config.hpp — flat key = value configuration files. Lines are either
// blank, a '#' comment, or `key = value`. Keys may not repeat; keys that
// the consumer never reads are reported as unknown, so configuration is
// explicit-only. No environment variable is ever consulted.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "completion/common.hpp"

namespace completion {

class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  long long get_int(const std::string& key, long long fallback);
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  // Comma-separated list of doubles.
  std::vector<double> get_doubles(const std::string& key);
  std::vector<std::string> get_strings(const std::string& key);

  // Throws ConfigError if any key was never read.
  void finish() const;

 private:
  std::string raw(const std::string& key);
  std::string origin_;
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> accessed_;
};

}  // namespace completion
