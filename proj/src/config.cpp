#include "ape/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "ape/error.hpp"

namespace ape {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw ConfigError("bad value for " + key + ": '" + text + "'");
  }
  return v;
}

}  // namespace

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

ConfigFile ConfigFile::parse(std::istream& in, std::string_view source) {
  ConfigFile cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const std::string key(trim(body.substr(0, eq)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (cfg.values_.count(key)) throw ConfigError(where + ": duplicate key " + key);
    cfg.values_[key] = std::string(trim(body.substr(eq + 1)));
  }
  return cfg;
}

ConfigFile ConfigFile::parse_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse(in, path);
}

bool ConfigFile::has(const std::string& key) const { return values_.count(key) > 0; }

void ConfigFile::set(const std::string& key, std::string value) { values_[key] = std::move(value); }

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  used_.insert(key);
  return it->second;
}

std::string ConfigFile::require_string(const std::string& key) const {
  if (!has(key)) throw ConfigError("missing key " + key);
  return get_string(key, {});
}

long long ConfigFile::get_int(const std::string& key, long long fallback) const {
  return has(key) ? parse_number<long long>(key, get_string(key, {})) : fallback;
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? parse_number<std::uint64_t>(key, get_string(key, {})) : fallback;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_number<double>(key, get_string(key, {})) : fallback;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto v = get_string(key, {});
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

std::vector<std::string> ConfigFile::get_list(const std::string& key, const std::vector<std::string>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::string> out;
  std::string_view rest = get_string(key, {});
  while (true) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

void ConfigFile::check_all_used() const {
  for (const auto& [key, value] : values_) {
    if (!used_.count(key)) throw ConfigError("unknown config key " + key);
  }
}

}  // namespace ape
