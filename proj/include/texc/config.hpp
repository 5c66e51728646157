#pragma once

// Flat key-value run configuration: `key = value` lines, '#' comments.

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace texc {

class Config {
public:
  Config() = default;

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = strip(line);
      if (s.empty() || s[0] == '#') continue;
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
      cfg.values_[strip(s.substr(0, eq))] = strip(s.substr(eq + 1));
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  /// Applies a "key=value" override string (CLI --set).
  void apply_override(const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::runtime_error("override must be key=value: " + kv);
    set(strip(kv.substr(0, eq)), strip(kv.substr(eq + 1)));
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error("missing config key: " + key);
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : std::stod(it->second);
  }

  long long get_int(const std::string& key, long long fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : std::stoll(it->second);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return it->second == "1" || it->second == "true" || it->second == "yes";
  }

  /// Canonical one-line-per-key text form, used as the checkpoint echo.
  std::string serialize() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    return out.str();
  }

  const std::map<std::string, std::string>& values() const { return values_; }

private:
  static std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  std::map<std::string, std::string> values_;
};

/// Fixture root resolution order: explicit config value, then the
/// TEXC_FIXTURE_ROOT environment variable, then the provided default.
inline std::string fixture_root(const Config& cfg, const std::string& fallback = "fixtures") {
  if (cfg.has("fixture_root")) return cfg.require_string("fixture_root");
  if (const char* env = std::getenv("TEXC_FIXTURE_ROOT")) return env;
  return fallback;
}

}  // namespace texc
