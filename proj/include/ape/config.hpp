#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ape {

// Flat `key = value` text. Blank lines and lines starting with '#' are
// skipped. Every key must be read before check_all_used(), so a misspelt key
// is reported instead of silently ignored.
class ConfigFile {
 public:
  ConfigFile() = default;

  // Throws ConfigError on a malformed line or a duplicate key.
  static ConfigFile parse(std::istream& in, std::string_view source = "config");
  static ConfigFile parse_text(std::string_view text);
  static ConfigFile load(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, std::string value);

  // Typed getters mark the key as used. Throw ConfigError on a value that
  // does not parse as the requested type.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma separated, surrounding blanks trimmed.
  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;

  // Throws ConfigError naming the first key that was never read.
  void check_all_used() const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

std::string_view trim(std::string_view text);

}  // namespace ape
