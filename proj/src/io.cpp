#include "meshsim/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "meshsim/errors.hpp"

namespace meshsim::io {

std::string format_double(double x) {
  if (std::isnan(x)) return "NA";
  char buf[64];
  // Whole numbers below 2^53 print as plain integers (14000000, not 1.4e+07).
  if (std::isfinite(x) && x == std::trunc(x) && std::abs(x) < 0x1p53) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, 0);
    return std::string(buf, end);
  }
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::string format_fixed(double x, int decimals) {
  if (std::isnan(x)) return "NA";
  char buf[128];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, decimals);
  std::string s(buf, end);
  if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string format_grouped(double x) {
  const long long v = std::llround(x);
  std::string digits = std::to_string(v < 0 ? -v : v);
  std::string out;
  const int n = static_cast<int>(digits.size());
  for (int i = 0; i < n; ++i) {
    if (i > 0 && (n - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return v < 0 ? "-" + out : out;
}

double parse_double(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw FormatError(std::string(what) + ": expected a number, got '" + t + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw FormatError(std::string(what) + ": expected an integer, got '" + t + "'");
  }
  return v;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

CsvWriter& CsvWriter::header(const std::vector<std::string>& columns) {
  for (const auto& c : columns) cell(c);
  end_row();
  return *this;
}

void CsvWriter::sep() {
  if (row_started_) out_ << ',';
  row_started_ = true;
}

CsvWriter& CsvWriter::cell(std::string_view text) {
  sep();
  out_ << text;
  return *this;
}

CsvWriter& CsvWriter::cell(double x) {
  sep();
  out_ << format_double(x);
  return *this;
}

CsvWriter& CsvWriter::cell(std::int64_t x) {
  sep();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::na() {
  sep();
  out_ << "NA";
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  row_started_ = false;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw ConfigError("short write to " + path.string());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << x;
  return os.str();
}

}  // namespace meshsim::io
