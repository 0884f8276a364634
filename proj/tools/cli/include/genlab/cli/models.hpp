#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "genlab/cli/checkpoint.hpp"
#include "genlab/cli/config.hpp"
#include "genlab/rng.hpp"
#include "genlab/tensor.hpp"

namespace genlab::cli {

struct Table {
  std::vector<std::string> header;
  Tensor rows;
};

// Uniform face over the model families for the commands.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::size_t dim() const = 0;
  // Fits to data; returns per-step metrics (first columns step, loss).
  virtual Table train(const Tensor& data, Rng& rng) = 0;
  virtual Tensor sample(std::size_t n, Rng& rng) const = 0;
  // Per-example metrics; ConfigError for families without one.
  virtual Table eval(const Tensor& x, Rng& rng) const = 0;

  virtual std::vector<NamedTensor> tensors() const = 0;
  virtual std::map<std::string, std::vector<double>> arrays() const { return {}; }
  // Restores trained values; CheckpointError on a name or shape mismatch.
  virtual void load(const Checkpoint& ck) = 0;
};

std::unique_ptr<Model> make_model(const Config& cfg, std::size_t dim, Rng& init_rng);

Checkpoint make_checkpoint(const Model& m, const Config& cfg, const Rng::State& rng);
// Rebuilds the architecture from the config echo and loads the tensors.
std::unique_ptr<Model> restore_model(const Checkpoint& ck);

}  // namespace genlab::cli
