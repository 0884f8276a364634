#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "genlab/rng.hpp"
#include "genlab/tensor.hpp"

namespace genlab::cli {

inline constexpr int kCheckpointVersion = 1;

// Unrecognised format_version (exit code 4).
class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally invalid checkpoint (exit code 2).
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  std::string kind;
  std::size_t data_dim = 0;
  std::map<std::string, std::string> config;          // resolved config echo
  std::map<std::string, std::vector<double>> arrays;  // schedule / ladder
  Rng::State rng;
  std::vector<NamedTensor> tensors;

  const Tensor& tensor(const std::string& name) const;
};

// Field order: format_version, kind, data_dim, config, arrays, rng, tensors.
// Floats use %.17g; NumericError on non-finite values.
std::string to_json(const Checkpoint& c);
Checkpoint from_json(const std::string& text);

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace genlab::cli
