#include "settings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace inloop::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::string diagnostic(const Entry& e, const std::string& key, const std::string& what) {
  return e.origin + ": field '" + key + "': " + what + ", got '" + e.value + "'";
}

}  // namespace

std::string exact(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::map<std::string, Entry> parse_key_value(std::string_view text, const std::string& name) {
  std::map<std::string, Entry> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (!valid_key(key)) throw ConfigError(where + ": invalid key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": field '" + key + "' has no value");
    if (auto it = out.find(key); it != out.end()) {
      throw ConfigError(where + ": duplicate key '" + key + "' (first set at " +
                        it->second.origin + ")");
    }
    out.emplace(key, Entry{value, where});
  }
  return out;
}

std::map<std::string, Entry> parse_json(std::string_view text, const std::string& name) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(name + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(name + ": top level must be a JSON object");
  std::map<std::string, Entry> out;
  for (const auto& [key, value] : doc.items()) {
    const std::string where = name + ": field '" + key + "'";
    if (!valid_key(key)) throw ConfigError(where + ": invalid key");
    std::string rendered;
    if (value.is_string()) {
      rendered = value.get<std::string>();
    } else if (value.is_number_float()) {
      rendered = exact(value.get<double>());
    } else if (value.is_number() || value.is_boolean()) {
      rendered = value.dump();
    } else if (value.is_array()) {
      for (const auto& item : value) {
        if (!item.is_number()) throw ConfigError(where + ": arrays may hold numbers only");
        if (!rendered.empty()) rendered += ',';
        rendered += item.is_number_float() ? exact(item.get<double>()) : item.dump();
      }
    } else {
      throw ConfigError(where + ": expected a number, string, boolean or number array");
    }
    out.emplace(key, Entry{rendered, name});
  }
  return out;
}

std::map<std::string, Entry> load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const std::string name = path.string();
  auto first = text.find_first_not_of(" \t\r\n");
  if (path.extension() == ".json" || (first != std::string::npos && text[first] == '{')) {
    return parse_json(text, name);
  }
  return parse_key_value(text, name);
}

Settings::Settings(std::string subcommand, std::vector<KeySpec> keys)
    : subcommand_(std::move(subcommand)), keys_(std::move(keys)) {}

const KeySpec& Settings::spec(const std::string& key) const {
  for (const auto& k : keys_) {
    if (k.name == key) return k;
  }
  throw ConfigError("unknown key '" + key + "' for " + subcommand_);
}

void Settings::merge_config(const std::map<std::string, Entry>& entries) {
  if (auto it = entries.find("subcommand"); it != entries.end() && it->second.value != subcommand_) {
    throw ConfigError(it->second.origin + ": config is for '" + it->second.value + "', not '" +
                      subcommand_ + "'");
  }
  for (const auto& [key, e] : entries) {
    if (key == "subcommand") continue;
    if (std::none_of(keys_.begin(), keys_.end(), [&](const KeySpec& k) { return k.name == key; })) {
      throw ConfigError(e.origin + ": unknown key '" + key + "' for " + subcommand_);
    }
    entries_[key] = e;
  }
}

void Settings::set_flag(const std::string& key, const std::string& value) {
  spec(key);
  entries_[key] = Entry{value, "--" + key};
}

void Settings::apply_defaults() {
  for (const auto& k : keys_) {
    if (k.fallback && !has(k.name)) entries_[k.name] = Entry{*k.fallback, "default"};
  }
}

void Settings::set_default(const std::string& key, double value) {
  spec(key);
  if (!has(key)) entries_[key] = Entry{exact(value), "default"};
}

const Entry& Settings::entry(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing required field '" + key + "'");
  return it->second;
}

double Settings::real(const std::string& key) const {
  const Entry& e = entry(key);
  double v = 0.0;
  const char* b = e.value.data();
  const char* end = b + e.value.size();
  auto [p, ec] = std::from_chars(b, end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) {
    throw ConfigError(diagnostic(e, key, "expected a finite number"));
  }
  return v;
}

std::uint64_t Settings::count(const std::string& key) const {
  const Entry& e = entry(key);
  std::uint64_t v = 0;
  const char* b = e.value.data();
  const char* end = b + e.value.size();
  auto [p, ec] = std::from_chars(b, end, v);
  if (ec != std::errc() || p != end) {
    throw ConfigError(diagnostic(e, key, "expected a nonnegative integer"));
  }
  return v;
}

const std::string& Settings::text(const std::string& key) const { return entry(key).value; }

bool Settings::flag(const std::string& key) const {
  const Entry& e = entry(key);
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  throw ConfigError(diagnostic(e, key, "expected true or false"));
}

std::vector<double> Settings::list(const std::string& key) const {
  const Entry& e = entry(key);
  std::vector<double> out;
  std::string_view rest = e.value;
  while (true) {
    auto comma = rest.find(',');
    std::string_view item = trim(rest.substr(0, comma));
    double v = 0.0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size() || !std::isfinite(v)) {
      throw ConfigError(diagnostic(e, key, "expected a comma-separated list of numbers"));
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

void Settings::require(const std::string& key) const {
  if (!has(key)) throw ConfigError("missing required field '" + key + "' for " + subcommand_);
}

void Settings::require_one_of(const std::string& a, const std::string& b) const {
  if (has(a) == has(b)) {
    throw ConfigError(subcommand_ + " needs exactly one of '" + a + "' and '" + b + "'");
  }
}

nlohmann::json Settings::manifest() const {
  nlohmann::json out = nlohmann::json::object();
  out["subcommand"] = subcommand_;
  for (const auto& k : keys_) {
    if (!has(k.name)) continue;
    switch (k.kind) {
      case ValueKind::real: out[k.name] = real(k.name); break;
      case ValueKind::count: out[k.name] = count(k.name); break;
      case ValueKind::text: out[k.name] = text(k.name); break;
      case ValueKind::flag: out[k.name] = flag(k.name); break;
      case ValueKind::list: out[k.name] = list(k.name); break;
    }
  }
  return out;
}

}  // namespace inloop::cli
