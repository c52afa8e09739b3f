#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace inloop::cli {

// Malformed configuration or command line: exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable input or unwritable output: exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueKind { real, count, text, flag, list };

struct KeySpec {
  std::string name;
  ValueKind kind = ValueKind::real;
  std::optional<std::string> fallback;  // documented default, echoed in the manifest
  std::string help;
};

struct Entry {
  std::string value;
  std::string origin;  // "run.cfg:3", "run.json: field 'eta'", "--eta", "default"
};

// key = value lines with '#' comments, or a flat JSON object.
std::map<std::string, Entry> parse_key_value(std::string_view text, const std::string& name);
std::map<std::string, Entry> parse_json(std::string_view text, const std::string& name);
// Chooses the format from the extension or a leading '{'. Throws IoError if unreadable.
std::map<std::string, Entry> load_config(const std::filesystem::path& path);

// Resolved parameters of one subcommand.
class Settings {
 public:
  Settings(std::string subcommand, std::vector<KeySpec> keys);

  const std::string& subcommand() const { return subcommand_; }
  const std::vector<KeySpec>& keys() const { return keys_; }

  // Config entries; rejects unknown keys and a mismatched "subcommand" entry.
  void merge_config(const std::map<std::string, Entry>& entries);
  // Command-line values override the config.
  void set_flag(const std::string& key, const std::string& value);
  // Fills documented defaults for keys still unset.
  void apply_defaults();
  // Sets a key that had no value, with a computed default.
  void set_default(const std::string& key, double value);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const Entry& entry(const std::string& key) const;

  double real(const std::string& key) const;
  std::uint64_t count(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;

  // Throws ConfigError naming the key.
  void require(const std::string& key) const;
  // Exactly one of the two keys must be set.
  void require_one_of(const std::string& a, const std::string& b) const;

  // Every resolved key with its typed value plus "subcommand"; feeding this back as a
  // config reproduces the run.
  nlohmann::json manifest() const;

 private:
  const KeySpec& spec(const std::string& key) const;

  std::string subcommand_;
  std::vector<KeySpec> keys_;
  std::map<std::string, Entry> entries_;
};

// %.17g, which reads back to the same double.
std::string exact(double value);

}  // namespace inloop::cli
