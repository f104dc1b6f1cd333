#pragma once

// Flat key = value configuration with [section] headers and # comments.
// Every read marks its key as used; reject_unknown() then turns any key
// nobody asked for into an error that names file, line and key.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace meshsim::config {

class Config {
 public:
  /// Throws ConfigError on malformed lines or duplicate keys.
  static Config parse(std::string_view text, std::string source);
  /// Throws ConfigError if the file cannot be read.
  static Config load(const std::filesystem::path& path);

  const std::string& source() const { return source_; }
  const std::string& text() const { return text_; }

  bool has_section(std::string_view section) const;
  /// Section names in order of first appearance.
  std::vector<std::string> sections() const;
  /// Keys of a section in file order; marks them used.
  std::vector<std::pair<std::string, std::string>> entries(std::string_view section) const;

  std::optional<std::string> get(std::string_view section, std::string_view key) const;
  std::string get_string(std::string_view section, std::string_view key, std::string def) const;
  double get_double(std::string_view section, std::string_view key, double def) const;
  std::int64_t get_int(std::string_view section, std::string_view key, std::int64_t def) const;
  bool get_bool(std::string_view section, std::string_view key, bool def) const;
  std::optional<double> get_optional_double(std::string_view section, std::string_view key) const;

  /// ConfigError for the first key (in file order) that was never read.
  void reject_unknown() const;

  /// ConfigError naming the key, e.g. "desk.cfg:12: [traffic] n_cells: must be >= 1".
  [[noreturn]] void fail(std::string_view section, std::string_view key,
                         std::string_view reason) const;

 private:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
    mutable bool used = false;
  };
  struct Section {
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
  };
  const Entry* find(std::string_view section, std::string_view key) const;

  std::string source_;
  std::string text_;
  std::vector<Section> sections_;
};

}  // namespace meshsim::config
