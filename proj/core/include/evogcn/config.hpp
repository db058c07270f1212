#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace evogcn {

// Flat `key = value` run configuration: a defaults table, optional config
// file, and command-line overrides. Unknown keys are rejected everywhere;
// the fully resolved table can be echoed back out for reproducibility.
class RunConfig {
 public:
  static RunConfig defaults();

  // '#' comments and blank lines allowed; everything else is `key = value`.
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  const std::string& str(const std::string& key) const;
  long long integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  std::vector<double> real_list(const std::string& key) const;  // comma-separated

  void write(const std::string& path) const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  static const std::map<std::string, std::string>& descriptions();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace evogcn
