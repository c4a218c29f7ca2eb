#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace tigh {

// Flat key=value run configuration. Every recognized key has a default; a key
// that is not in the schema is rejected, whether it comes from the file, the
// environment, or code. Environment variables override file values using the
// mapping graph.d_max_km -> TIGHNARI_GRAPH_D_MAX_KM.
class RunConfig {
 public:
  static RunConfig defaults();

  // defaults, overlaid with the file (if non-empty path), then environment.
  static RunConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  long long integer(const std::string& key) const;
  bool flag(const std::string& key) const;                 // 0/1/true/false
  std::pair<int, int> dims2(const std::string& key) const;  // "3x2"
  std::vector<int> dims(const std::string& key) const;      // "4x19x12"
  std::vector<int> int_list(const std::string& key) const;  // "2,6"
  std::vector<std::string> str_list(const std::string& key) const;

  const std::map<std::string, std::string>& items() const { return kv_; }

  static std::string env_name(const std::string& key);

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace tigh
