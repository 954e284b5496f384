#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

namespace segd {

// Plain-text key=value settings. '#' starts a comment; blank lines are ignored.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text);
  static KeyValues load(const std::filesystem::path& path);

  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const { return values_; }

  // Typed readers leave `out` untouched when the key is absent and mark the key consumed.
  void read(const std::string& key, double& out) const;
  void read(const std::string& key, int& out) const;
  void read(const std::string& key, bool& out) const;
  void read(const std::string& key, std::string& out) const;
  void read(const std::string& key, unsigned long long& out) const;

  // Throws InvalidArgument naming the first key no reader consumed.
  void reject_unconsumed() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

}  // namespace segd
