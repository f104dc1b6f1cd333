#pragma once

// Text I/O shared by the file formats: shortest round-trip number
// formatting, fixed-precision display, and a comma-separated writer that
// always emits LF line endings and `NA` for undefined values.

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace meshsim::io {

/// Shortest representation that parses back to the same double.
std::string format_double(double x);

/// Fixed notation with the given number of decimals; NaN becomes "NA".
std::string format_fixed(double x, int decimals);

/// Integer with thousands separators, e.g. 46900 -> "46,900".
std::string format_grouped(double x);

double parse_double(std::string_view text, std::string_view what);
std::int64_t parse_int(std::string_view text, std::string_view what);

std::vector<std::string> split(std::string_view line, char sep);
std::string trim(std::string_view s);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& header(const std::vector<std::string>& columns);
  CsvWriter& cell(std::string_view text);
  CsvWriter& cell(double x);  // shortest round-trip, NaN -> NA
  CsvWriter& cell(std::int64_t x);
  CsvWriter& cell(int x) { return cell(static_cast<std::int64_t>(x)); }
  CsvWriter& cell(std::size_t x) { return cell(static_cast<std::int64_t>(x)); }
  CsvWriter& na();
  void end_row();

 private:
  void sep();
  std::ostream& out_;
  bool row_started_ = false;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// 64-bit FNV-1a; used for manifest content hashes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t x);

}  // namespace meshsim::io
