#pragma once

/// Key-value configuration with documented keys and defaults.
/// Precedence: built-in defaults < config file < command-line overrides.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "clara/errors.hpp"
#include "clara/pipeline.hpp"

namespace clara {

struct ConfigKeyDef {
  const char* name;
  const char* default_value;
  const char* help;
};

class Config {
 public:
  Config();  // all keys at their defaults

  static const std::vector<ConfigKeyDef>& key_defs();
  /// One "key = default — help" line per key, for --help output.
  static std::string help_text();

  /// File format: "key = value" lines, '#' comments, blank lines ignored.
  void load_file(const std::filesystem::path& path);

  /// Throws ConfigError for unknown keys, listing every valid key.
  void set(const std::string& key, const std::string& value);
  /// Accepts "key=value".
  void set_override(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Bounds/thresholds/model settings from config; component flags stay off
  /// (they come from the method selection).
  PipelineConfig pipeline_config() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace clara
