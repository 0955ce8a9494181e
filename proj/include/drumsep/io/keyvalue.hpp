// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Line-oriented `key = value` files. '#' starts a comment line; keys are
// dotted identifiers; values run to end of line with surrounding blanks
// trimmed. Later occurrences of a key override earlier ones.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "drumsep/common.hpp"

namespace drumsep::io {

class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text,
                            const std::string& name = "<config>") {
    KeyValueFile kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError(name + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
      const std::string key = trim(t.substr(0, eq));
      if (key.empty())
        throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
      kv.set(key, trim(t.substr(eq + 1)));
    }
    return kv;
  }

  static KeyValueFile load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
  }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
  }
  std::string get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
  }

  double get_double(const std::string& key) const {
    return to_double(key, get(key));
  }
  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }
  long long get_int(const std::string& key) const {
    const std::string& v = get(key);
    long long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    return out;
  }
  long long get_int_or(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }
  bool get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
  }
  bool get_bool_or(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
  }

  /// Throws on any key outside `known`.
  void reject_unknown(const std::set<std::string>& known) const {
    for (const auto& k : order_)
      if (!known.count(k)) throw ConfigError("unknown configuration key '" + k + "'");
  }

  const std::vector<std::string>& keys() const { return order_; }

  std::string dump() const {
    std::string out;
    for (const auto& k : order_) out += k + " = " + values_.at(k) + "\n";
    return out;
  }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << dump();
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }
  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
  }

  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

}  // namespace drumsep::io
