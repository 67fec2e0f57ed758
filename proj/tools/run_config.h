#pragma once

// Flat key=value run configuration. Values are resolved in the order
// defaults < --config file < LEXSPEC_<KEY> environment variables < flags.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lexspec::cli {

struct KeySpec {
  std::string name;
  std::string default_value;
  std::string help;
};

// Every key any command understands.
const std::vector<KeySpec>& known_keys();
const KeySpec* find_key(std::string_view name);

// LEXSPEC_ followed by the upper-cased key.
std::string env_name(std::string_view key);

class RunConfig {
 public:
  RunConfig();

  // Lines "key = value"; '#' starts a comment. Unknown keys are rejected.
  void load_file(const std::filesystem::path& path);
  // Reads LEXSPEC_<KEY> for every known key.
  void apply_environment();
  void set(const std::string& key, std::string value);

  const std::string& get(const std::string& key) const;
  bool has_value(const std::string& key) const { return !get(key).empty(); }
  std::string require(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  // Comma-separated list; empty items are dropped.
  std::vector<std::string> get_list(const std::string& key) const;

  // "key=value" lines for `keys`, sorted by key.
  std::string format(const std::vector<std::string>& keys) const;
  void write(const std::filesystem::path& path, const std::vector<std::string>& keys) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace lexspec::cli
