#ifndef UAVLOC_CONFIG_HPP
#define UAVLOC_CONFIG_HPP

#include <map>
#include <optional>
#include <string>

namespace uavloc {

// Key-value config file:
//   # comment
//   key = value
// Keys are case-sensitive; whitespace around key and value is trimmed.
class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  // Throw ConfigError when the key is missing or unparseable.
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key, double dflt) const;
  long get_int(const std::string& key, long dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;

  std::string serialize() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::optional<std::string> find(const std::string& key) const;
  std::map<std::string, std::string> entries_;
};

}  // namespace uavloc

#endif
