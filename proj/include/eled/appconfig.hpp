#pragma once

#include <map>
#include <string>

namespace eled {

/*
 * Flat dotted-key text configuration: one "key.path = value" per line, '#'
 * starts a comment. CLI flags override file values. The canonical form
 * (sorted key=value lines) backs a stable config hash that every command
 * prints.
 */
class AppConfig {
public:
  AppConfig() = default;
  static AppConfig from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  std::string canonical() const;
  std::string hash() const;

private:
  std::map<std::string, std::string> values_;
};

}  // namespace eled
