#include "meshsim/config.hpp"

#include <algorithm>

#include "meshsim/errors.hpp"
#include "meshsim/io.hpp"

namespace meshsim::config {

Config Config::parse(std::string_view text, std::string source) {
  Config cfg;
  cfg.source_ = std::move(source);
  cfg.text_ = std::string(text);
  cfg.sections_.push_back(Section{"", 0, {}});
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = io::trim(raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = cfg.source_ + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      const std::string name = io::trim(std::string_view(line).substr(1, line.size() - 2));
      if (name.empty()) throw ConfigError(where + "empty section name");
      if (cfg.has_section(name)) throw ConfigError(where + "duplicate section [" + name + "]");
      cfg.sections_.push_back(Section{name, line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    Entry e;
    e.key = io::trim(std::string_view(line).substr(0, eq));
    e.value = io::trim(std::string_view(line).substr(eq + 1));
    e.line = line_no;
    if (e.key.empty()) throw ConfigError(where + "missing key");
    auto& sec = cfg.sections_.back();
    for (const auto& other : sec.entries) {
      if (other.key == e.key) {
        throw ConfigError(where + "duplicate key '" + e.key + "' (first set on line " +
                          std::to_string(other.line) + ")");
      }
    }
    sec.entries.push_back(std::move(e));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  return parse(io::read_file(path), path.string());
}

bool Config::has_section(std::string_view section) const {
  return std::any_of(sections_.begin(), sections_.end(),
                     [&](const Section& s) { return s.name == section; });
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& s : sections_) {
    if (!s.name.empty()) out.push_back(s.name);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> Config::entries(std::string_view section) const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : sections_) {
    if (s.name != section) continue;
    for (const auto& e : s.entries) {
      e.used = true;
      out.emplace_back(e.key, e.value);
    }
  }
  return out;
}

const Config::Entry* Config::find(std::string_view section, std::string_view key) const {
  for (const auto& s : sections_) {
    if (s.name != section) continue;
    for (const auto& e : s.entries) {
      if (e.key == key) return &e;
    }
  }
  return nullptr;
}

void Config::fail(std::string_view section, std::string_view key, std::string_view reason) const {
  const Entry* e = find(section, key);
  std::string msg = source_;
  if (e) msg += ":" + std::to_string(e->line);
  msg += ": [" + std::string(section) + "] " + std::string(key) + ": " + std::string(reason);
  throw ConfigError(msg);
}

std::optional<std::string> Config::get(std::string_view section, std::string_view key) const {
  const Entry* e = find(section, key);
  if (!e) return std::nullopt;
  e->used = true;
  return e->value;
}

std::string Config::get_string(std::string_view section, std::string_view key,
                               std::string def) const {
  auto v = get(section, key);
  return v ? *v : def;
}

double Config::get_double(std::string_view section, std::string_view key, double def) const {
  auto v = get_optional_double(section, key);
  return v ? *v : def;
}

std::optional<double> Config::get_optional_double(std::string_view section,
                                                  std::string_view key) const {
  auto v = get(section, key);
  if (!v) return std::nullopt;
  try {
    return io::parse_double(*v, key);
  } catch (const FormatError&) {
    fail(section, key, "expected a number, got '" + *v + "'");
  }
}

std::int64_t Config::get_int(std::string_view section, std::string_view key,
                             std::int64_t def) const {
  auto v = get(section, key);
  if (!v) return def;
  try {
    return io::parse_int(*v, key);
  } catch (const FormatError&) {
    fail(section, key, "expected an integer, got '" + *v + "'");
  }
}

bool Config::get_bool(std::string_view section, std::string_view key, bool def) const {
  auto v = get(section, key);
  if (!v) return def;
  if (*v == "on" || *v == "true" || *v == "yes" || *v == "1") return true;
  if (*v == "off" || *v == "false" || *v == "no" || *v == "0") return false;
  fail(section, key, "expected on|off, got '" + *v + "'");
}

void Config::reject_unknown() const {
  for (const auto& s : sections_) {
    for (const auto& e : s.entries) {
      if (!e.used) {
        throw ConfigError(source_ + ":" + std::to_string(e.line) + ": unknown key '" + e.key +
                          "'" + (s.name.empty() ? std::string(" outside any section")
                                                : " in [" + s.name + "]"));
      }
    }
  }
}

}  // namespace meshsim::config
