#pragma once

// Text formats: CSV tables with fixed 17-significant-digit floats, flat
// key/value sidecars, and a small TOML subset for scenario files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mgeqoe/core.hpp"
#include "mgeqoe/trajectory.hpp"

namespace mgeqoe {

/// Scientific notation with 17 significant digits; round-trips exactly.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

inline std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(s);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!s.empty() && s.back() == delim) out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (trim(s.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::Io, context + ": cannot parse number '" + s + "'");
}

/// Binary mode keeps LF line endings on every platform.
inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  return out;
}

// -----------------------------------------------------------------------------
// Key/value sidecars

using KeyValues = std::map<std::string, std::string>;

inline void write_key_values(const std::filesystem::path& path, const KeyValues& kv) {
  auto out = open_output(path);
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

inline KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "'");
  KeyValues kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Io, "'" + path.string() + "': expected key = value, got '" + line + "'");
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    kv[trim(line.substr(0, eq))] = value;
  }
  return kv;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".meta");
  return p;
}

// -----------------------------------------------------------------------------
// Trajectory CSV: epoch,kind,x1..x6

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  auto out = open_output(path);
  out << "epoch,kind,x1,x2,x3,x4,x5,x6\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << format_double(traj.epochs[i]) << ',' << to_string(traj.kind);
    for (int k = 0; k < 6; ++k) out << ',' << format_double(traj.states[i][k]);
    out << '\n';
  }
}

inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "epoch,kind,x1,x2,x3,x4,x5,x6") {
    fail(ErrorCode::Io, "'" + path.string() + "': expected header epoch,kind,x1,x2,x3,x4,x5,x6");
  }
  Trajectory traj;
  bool first = true;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 8) fail(ErrorCode::Io, ctx + ": expected 8 fields");
    const auto kind = parse_kind(f[1]);
    if (!kind) fail(ErrorCode::Io, ctx + ": unknown kind '" + f[1] + "'");
    if (first) {
      traj.kind = *kind;
      first = false;
    } else if (*kind != traj.kind) {
      fail(ErrorCode::Io, ctx + ": kind changes within a trajectory");
    }
    traj.epochs.push_back(parse_double(f[0], ctx));
    Vec6 s;
    for (int k = 0; k < 6; ++k) s[k] = parse_double(f[2 + k], ctx);
    traj.states.push_back(s);
  }
  if (traj.empty()) fail(ErrorCode::Io, "'" + path.string() + "' holds no states");
  traj.validate();
  const auto meta = sidecar_path(path);
  if (std::filesystem::exists(meta)) {
    const KeyValues kv = read_key_values(meta);
    if (auto it = kv.find("center"); it != kv.end()) {
      const auto body = parse_body(it->second);
      if (!body) fail(ErrorCode::Io, "'" + meta.string() + "': unknown center '" + it->second + "'");
      traj.center = *body;
    }
  }
  return traj;
}

// -----------------------------------------------------------------------------
// Scenario files: a TOML subset. Tables ([name]), key = value with strings,
// numbers, booleans and flat arrays; keys are flattened to "table.key".

using ConfigValue = std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>>;

class ConfigTable {
 public:
  static ConfigTable parse(std::istream& in, const std::string& source = "<config>") {
    ConfigTable t;
    std::string line;
    std::string table;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string ctx = source + ":" + std::to_string(line_no);
      line = trim(strip_comment(line));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(ErrorCode::Config, ctx + ": malformed table header");
        table = trim(line.substr(1, line.size() - 2));
        if (table.empty()) fail(ErrorCode::Config, ctx + ": empty table name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(ErrorCode::Config, ctx + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) fail(ErrorCode::Config, ctx + ": empty key");
      const std::string full = table.empty() ? key : table + "." + key;
      if (t.values_.count(full)) fail(ErrorCode::Config, ctx + ": duplicate key '" + full + "'");
      t.values_[full] = parse_value(trim(line.substr(eq + 1)), ctx);
    }
    return t;
  }

  static ConfigTable load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Config, "cannot open '" + path.string() + "'");
    return parse(in, path.string());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  double number(const std::string& key) const { return get<double>(key, "a number"); }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }
  bool boolean(const std::string& key, bool fallback) const { return has(key) ? get<bool>(key, "a boolean") : fallback; }
  std::string string(const std::string& key) const { return get<std::string>(key, "a string"); }
  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }
  std::vector<double> numbers(const std::string& key) const { return get<std::vector<double>>(key, "a number array"); }
  std::vector<std::string> strings(const std::string& key) const {
    return get<std::vector<std::string>>(key, "a string array");
  }
  Vec3 vec3(const std::string& key) const {
    const auto v = numbers(key);
    if (v.size() != 3) fail(ErrorCode::Config, "'" + key + "' must have three components");
    return {v[0], v[1], v[2]};
  }

  const std::map<std::string, ConfigValue>& values() const { return values_; }

 private:
  template <class T>
  const T& get(const std::string& key, const char* what) const {
    const auto it = values_.find(key);
    if (it == values_.end()) fail(ErrorCode::Config, "missing key '" + key + "'");
    if (const T* p = std::get_if<T>(&it->second)) return *p;
    fail(ErrorCode::Config, "'" + key + "' must be " + what);
  }

  static std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
  }

  static ConfigValue parse_value(const std::string& s, const std::string& ctx) {
    if (s.empty()) fail(ErrorCode::Config, ctx + ": missing value");
    if (s.front() == '"') {
      if (s.size() < 2 || s.back() != '"') fail(ErrorCode::Config, ctx + ": unterminated string");
      return s.substr(1, s.size() - 2);
    }
    if (s == "true") return true;
    if (s == "false") return false;
    if (s.front() == '[') {
      if (s.back() != ']') fail(ErrorCode::Config, ctx + ": unterminated array");
      const std::string body = trim(s.substr(1, s.size() - 2));
      if (body.empty()) return std::vector<double>{};
      const auto items = split(body, ',');
      if (trim(items.front()).front() == '"') {
        std::vector<std::string> out;
        for (const auto& item : items) {
          const std::string v = trim(item);
          if (v.size() < 2 || v.front() != '"' || v.back() != '"') fail(ErrorCode::Config, ctx + ": mixed array");
          out.push_back(v.substr(1, v.size() - 2));
        }
        return out;
      }
      std::vector<double> out;
      for (const auto& item : items) out.push_back(parse_number(trim(item), ctx));
      return out;
    }
    return parse_number(s, ctx);
  }

  static double parse_number(const std::string& s, const std::string& ctx) {
    std::string cleaned;
    for (char c : s) {
      if (c != '_') cleaned.push_back(c);
    }
    try {
      std::size_t pos = 0;
      const double v = std::stod(cleaned, &pos);
      if (pos == cleaned.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::Config, ctx + ": cannot parse value '" + s + "'");
  }

  std::map<std::string, ConfigValue> values_;
};

/// Constants override file: mu_earth_km3s2, mu_moon_km3s2, mu_sun_km3s2, l_star_km.
inline BodyConstants read_constants(const std::filesystem::path& path, BodyConstants base = {}) {
  const ConfigTable t = ConfigTable::load(path);
  for (const auto& [key, value] : t.values()) {
    if (key != "mu_earth_km3s2" && key != "mu_moon_km3s2" && key != "mu_sun_km3s2" && key != "l_star_km") {
      fail(ErrorCode::Config, "'" + path.string() + "': unknown constant '" + key + "'");
    }
  }
  base.mu_earth = t.number("mu_earth_km3s2", base.mu_earth);
  base.mu_moon = t.number("mu_moon_km3s2", base.mu_moon);
  base.mu_sun = t.number("mu_sun_km3s2", base.mu_sun);
  base.l_star_km = t.number("l_star_km", base.l_star_km);
  try {
    base.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Config, "'" + path.string() + "': " + e.what());
  }
  return base;
}

}  // namespace mgeqoe
