#ifndef DBHDIST_CONFIG_HPP
#define DBHDIST_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dbhdist {

/// Line-oriented key = value settings. '#' starts a comment; keys are
/// unique within a file; command-line overrides replace file values.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& source);
  static Config read(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  /// "key=value"; throws ValidationError otherwise.
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::optional<std::filesystem::path> get_path(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  /// Keys in the order they were first set.
  const std::vector<std::string>& keys() const { return order_; }
  /// Sorted "key=value" lines; the basis of the config hash.
  std::string canonical(const std::vector<std::string>& exclude = {}) const;
  /// Rejects keys that are neither listed nor start with one of `prefixes`.
  void check_keys(const std::vector<std::string>& known,
                  const std::vector<std::string>& prefixes = {}) const;
  /// Relative paths are resolved against this directory (the config file's).
  std::filesystem::path base_dir() const { return base_; }
  void set_base_dir(std::filesystem::path base) { base_ = std::move(base); }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> origin_;
  std::vector<std::string> order_;
  std::filesystem::path base_;
};

}  // namespace dbhdist

#endif  // DBHDIST_CONFIG_HPP
