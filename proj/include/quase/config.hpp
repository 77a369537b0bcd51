#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace quase {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Key-value run configuration: one `key = value` per line, '#' comments.
// The config hash identifies a pipeline; every artifact embeds it and stages
// fail fast on mismatch. The seed is excluded from the hash and recorded
// separately so it stays visible per artifact.
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string get_string(const std::string& key) const;  // throws when missing
  std::string get_string(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  int get_int(const std::string& key, int def) const;
  bool get_bool(const std::string& key, bool def) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& def) const;

  std::uint64_t seed() const { return get_u64("seed", 42); }

  // Sorted `key=value` lines.
  std::string canonical() const;
  // FNV-1a 64 hex over canonical() minus the seed entry.
  std::string hash() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Rejects keys outside `allowed` (config-schema error).
  void validate_keys(const std::set<std::string>& allowed) const;

 private:
  std::map<std::string, std::string> entries_;
};

std::uint64_t fnv1a64(const std::string& data);
std::string to_hex(std::uint64_t v);

}  // namespace quase
