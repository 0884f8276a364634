#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genlab/autodiff.hpp"
#include "genlab/rng.hpp"

namespace genlab::nn {

enum class Activation { kTanh, kSoftplus, kIdentity };

ad::Var activate(const ad::Var& x, Activation act);
std::string_view to_string(Activation act);
Activation activation_from_string(std::string_view name);

using NamedParameters = std::vector<std::pair<std::string, ad::Var>>;

// Fully connected network y = act_out(... act(x W0 + b0) ... W_L + b_L).
// Weights are stored input-major (in × out) so a batch of row vectors
// multiplies from the left. Copies share parameters; use clone() for an
// independent network.
class Mlp {
 public:
  struct Options {
    Activation hidden = Activation::kTanh;
    Activation output = Activation::kIdentity;
    // Multiplier on the initial weights of the last layer (0 gives a network
    // that starts out constant at its output bias).
    double output_init_scale = 1.0;
  };

  Mlp() = default;
  Mlp(std::vector<std::size_t> widths, Rng& rng);
  Mlp(std::vector<std::size_t> widths, Rng& rng, Options options);

  ad::Var forward(const ad::Var& x) const;
  // Evaluation without recording a graph.
  Tensor operator()(const Tensor& x) const;

  std::size_t input_dim() const { return widths_.front(); }
  std::size_t output_dim() const { return widths_.back(); }
  std::size_t num_layers() const { return weights_.size(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  const Options& options() const { return options_; }
  std::size_t parameter_count() const;

  const ad::Var& weight(std::size_t layer) const { return weights_.at(layer); }
  const ad::Var& bias(std::size_t layer) const { return biases_.at(layer); }

  std::vector<ad::Var> parameters() const;
  NamedParameters named_parameters(std::string_view prefix) const;
  Mlp clone() const;

 private:
  std::vector<std::size_t> widths_;
  Options options_;
  std::vector<ad::Var> weights_;
  std::vector<ad::Var> biases_;
};

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First-order minimiser: sgd p <- p - lr g; adam uses bias-corrected moments.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {});

  void step(std::span<const ad::Var> params, std::span<const Tensor> grads);
  void step(std::span<const ad::Var> params, const ad::Gradients& grads);

  const OptimizerConfig& config() const { return config_; }
  std::size_t steps_taken() const { return t_; }

 private:
  OptimizerConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::size_t t_ = 0;
};

// Concatenates parameter lists.
std::vector<ad::Var> join(std::initializer_list<std::span<const ad::Var>> lists);

}  // namespace genlab::nn
