#include "dbhdist/config.hpp"

#include <algorithm>
#include <charconv>

#include "dbhdist/csv.hpp"
#include "dbhdist/error.hpp"

namespace dbhdist {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& source) {
  Config c;
  std::size_t pos = 0;
  int line = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string l = trim(raw);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    const std::string where = source + " line " + std::to_string(line);
    if (eq == std::string::npos) throw ValidationError(where + ": expected key = value");
    const std::string key = trim(std::string_view(l).substr(0, eq));
    const std::string value = trim(std::string_view(l).substr(eq + 1));
    if (key.empty()) throw ValidationError(where + ": empty key");
    if (c.has(key)) {
      throw ValidationError(where + ": duplicate key '" + key + "' (first set at " + c.origin_[key] + ")");
    }
    c.values_[key] = value;
    c.origin_[key] = where;
    c.order_.push_back(key);
  }
  return c;
}

Config Config::read(const std::filesystem::path& path) {
  Config c = parse(read_file(path), path.string());
  c.base_ = path.parent_path();
  return c;
}

void Config::set(const std::string& key, const std::string& value) {
  if (!has(key)) order_.push_back(key);
  values_[key] = value;
  origin_[key] = "override";
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "' is not of the form key=value");
  }
  set(trim(std::string_view(assignment).substr(0, eq)), trim(std::string_view(assignment).substr(eq + 1)));
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string Config::require(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) throw ValidationError("missing required setting '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  return parse_double(values_.at(key), "setting '" + key + "'");
}

long long Config::get_int(const std::string& key, long long fallback) const {
  if (!has(key)) return fallback;
  return parse_int(values_.at(key), "setting '" + key + "'");
}

std::uint64_t Config::get_seed(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = values_.at(key);
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ValidationError("setting '" + key + "': seed must be an unsigned 64-bit integer, got '" + v + "'");
  }
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = values_.at(key);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ValidationError("setting '" + key + "': expected a boolean, got '" + v + "'");
}

std::optional<std::filesystem::path> Config::get_path(const std::string& key) const {
  if (!has(key) || values_.at(key).empty()) return std::nullopt;
  std::filesystem::path p = values_.at(key);
  if (p.is_relative() && !base_.empty()) p = (base_ / p).lexically_normal();
  return p;
}

std::string Config::canonical(const std::vector<std::string>& exclude) const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (std::find(exclude.begin(), exclude.end(), k) == exclude.end()) out += k + "=" + v + "\n";
  }
  return out;
}

void Config::check_keys(const std::vector<std::string>& known,
                        const std::vector<std::string>& prefixes) const {
  for (const auto& [k, v] : values_) {
    if (std::find(known.begin(), known.end(), k) != known.end()) continue;
    if (std::any_of(prefixes.begin(), prefixes.end(),
                    [&](const std::string& p) { return k.rfind(p, 0) == 0; })) {
      continue;
    }
    throw ValidationError("unknown setting '" + k + "' (" + origin_.at(k) + ")");
  }
}

}  // namespace dbhdist
