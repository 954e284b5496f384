#include "segd/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "segd/error.hpp"

namespace segd {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw InvalidArgument("config key '" + key + "' has invalid value '" + value + "'");
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(line_no) + " is not key=value");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(line_no) + " has an empty key");
    kv.values_[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void KeyValues::read(const std::string& key, double& out) const {
  auto it = values_.find(key);
  if (it == values_.end()) return;
  consumed_.insert(key);
  try {
    std::size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) bad_value(key, it->second);
    out = v;
  } catch (const std::logic_error&) {
    bad_value(key, it->second);
  }
}

void KeyValues::read(const std::string& key, int& out) const {
  auto it = values_.find(key);
  if (it == values_.end()) return;
  consumed_.insert(key);
  const std::string& s = it->second;
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) bad_value(key, s);
  out = v;
}

void KeyValues::read(const std::string& key, unsigned long long& out) const {
  auto it = values_.find(key);
  if (it == values_.end()) return;
  consumed_.insert(key);
  const std::string& s = it->second;
  unsigned long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) bad_value(key, s);
  out = v;
}

void KeyValues::read(const std::string& key, bool& out) const {
  auto it = values_.find(key);
  if (it == values_.end()) return;
  consumed_.insert(key);
  const std::string& s = it->second;
  if (s == "1" || s == "true" || s == "yes" || s == "on") {
    out = true;
  } else if (s == "0" || s == "false" || s == "no" || s == "off") {
    out = false;
  } else {
    bad_value(key, s);
  }
}

void KeyValues::read(const std::string& key, std::string& out) const {
  auto it = values_.find(key);
  if (it == values_.end()) return;
  consumed_.insert(key);
  out = it->second;
}

void KeyValues::reject_unconsumed() const {
  for (const auto& [key, value] : values_) {
    if (!consumed_.count(key)) throw InvalidArgument("unknown config key '" + key + "'");
  }
}

}  // namespace segd
