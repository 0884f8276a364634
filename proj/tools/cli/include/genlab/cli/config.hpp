#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "genlab/datasets.hpp"

namespace genlab::cli {

// Bad configuration or command-line input (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `key = value` lines, `#` comments, namespaced keys. Every key is checked
// against a fixed schema: unknown keys, keys belonging to another model
// family and malformed values are rejected with a message naming the key.
// Defaults are filled in so the resolved map is a complete echo of the run.
class Config {
 public:
  static Config parse(std::istream& in);
  static Config parse_string(const std::string& text);
  static Config load(const std::string& path);
  // Re-validates an already resolved map (checkpoint echo).
  static Config from_map(const std::map<std::string, std::string>& values);

  const std::map<std::string, std::string>& values() const { return values_; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& model() const { return values_.at("model"); }
  std::uint64_t seed() const;

  std::string str(const std::string& key) const;
  double real(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::size_t> counts(const std::string& key) const;

  data::DatasetSpec dataset() const;

 private:
  void resolve();
  std::map<std::string, std::string> values_;
};

extern const std::vector<std::string> kModelKinds;

}  // namespace genlab::cli
