#pragma once

// Helpers shared by the comma-separated text formats (scribbles, seeds, control points).

#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "segd/error.hpp"
#include "segd/volume_io.hpp"

namespace segd::detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Non-empty, comment-stripped lines split on commas, with 1-based line numbers.
template <class Fn>
void for_each_record(std::string_view text, Fn&& fn) {
  int line_no = 0;
  while (!text.empty()) {
    std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    while (true) {
      std::size_t comma = line.find(',');
      fields.push_back(trim(line.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    fn(line_no, fields);
  }
}

[[noreturn]] inline void bad_line(int line_no, const std::string& what) {
  throw FormatError("line " + std::to_string(line_no) + ": " + what);
}

inline int to_int(std::string_view s, int line_no) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) bad_line(line_no, "expected an integer, got '" + std::string(s) + "'");
  return v;
}

inline double to_double(std::string_view s, int line_no) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
    bad_line(line_no, "expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

inline std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string read_text(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace segd::detail
