#include "completion/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace completion {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

ConfigFile ConfigFile::parse(const std::string& text,
                             const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string::npos) pos = text.size();
    ++line_no;
    std::string line = text.substr(start, pos - start);
    start = pos + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') {
      if (start > text.size()) break;
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + " line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value =
        trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + " line " + std::to_string(line_no) +
                        ": empty key");
    if (!cfg.values_.emplace(key, value).second)
      throw ConfigError(origin + ": duplicate key '" + key + "'");
    if (start > text.size()) break;
  }
  return cfg;
}

bool ConfigFile::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string ConfigFile::raw(const std::string& key) {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError(origin_ + ": missing required key '" + key + "'");
  accessed_[key] = true;
  return it->second;
}

std::string ConfigFile::get_string(const std::string& key) {
  return raw(key);
}

std::string ConfigFile::get_string(const std::string& key,
                                   const std::string& fallback) {
  if (!has(key)) return fallback;
  return raw(key);
}

double ConfigFile::get_double(const std::string& key, double fallback) {
  if (!has(key)) return fallback;
  try {
    return parse_double(raw(key), origin_ + " key '" + key + "'");
  } catch (const LoadError& e) {
    throw ConfigError(e.what());
  }
}

long long ConfigFile::get_int(const std::string& key, long long fallback) {
  if (!has(key)) return fallback;
  try {
    return parse_int(raw(key), origin_ + " key '" + key + "'");
  } catch (const LoadError& e) {
    throw ConfigError(e.what());
  }
}

std::uint64_t ConfigFile::get_uint(const std::string& key,
                                   std::uint64_t fallback) {
  const long long v = get_int(key, static_cast<long long>(fallback));
  if (v < 0)
    throw ConfigError(origin_ + ": key '" + key + "' must be >= 0");
  return static_cast<std::uint64_t>(v);
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(origin_ + ": key '" + key +
                    "' must be 'true' or 'false', got '" + v + "'");
}

std::vector<double> ConfigFile::get_doubles(const std::string& key) {
  const std::string v = raw(key);
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    std::size_t pos = v.find(',', start);
    if (pos == std::string::npos) pos = v.size();
    try {
      out.push_back(parse_double(trim(std::string_view(v).substr(
                                     start, pos - start)),
                                 origin_ + " key '" + key + "'"));
    } catch (const LoadError& e) {
      throw ConfigError(e.what());
    }
    start = pos + 1;
    if (pos == v.size()) break;
  }
  return out;
}

std::vector<std::string> ConfigFile::get_strings(const std::string& key) {
  const std::string v = raw(key);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    std::size_t pos = v.find(',', start);
    if (pos == std::string::npos) pos = v.size();
    const std::string item = trim(std::string_view(v).substr(start, pos - start));
    if (!item.empty()) out.push_back(item);
    start = pos + 1;
    if (pos == v.size()) break;
  }
  return out;
}

void ConfigFile::finish() const {
  for (const auto& [key, value] : values_) {
    if (!accessed_.count(key))
      throw ConfigError(origin_ + ": unknown key '" + key + "'");
  }
}

}  // namespace completion
