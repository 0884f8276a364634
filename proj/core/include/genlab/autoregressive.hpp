#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "genlab/autodiff.hpp"
#include "genlab/nn.hpp"
#include "genlab/rng.hpp"

namespace genlab::ar {

// Connectivity between layers from unit degrees (each in 1..d): entry (o, i)
// is 1 when out_degrees[o] > in_degrees[i] (strict, final layer) or
// out_degrees[o] ≥ in_degrees[i] (hidden layers). Shape out × in.
Tensor mask_matrix(std::size_t d, const std::vector<std::size_t>& in_degrees,
                   const std::vector<std::size_t>& out_degrees, bool strict);

// y = x (W ⊙ Mᵀ) + b with a fixed binary mask.
class MaskedDense {
 public:
  // mask is out × in; weights are stored in × out like nn::Mlp.
  MaskedDense(Tensor mask, Rng& rng);

  ad::Var forward(const ad::Var& x) const;
  // out × in dependency pattern.
  Tensor dependency() const { return transpose(mask_t_); }
  std::size_t in_dim() const { return mask_t_.rows(); }
  std::size_t out_dim() const { return mask_t_.cols(); }
  const ad::Var& weight() const { return weight_; }
  const ad::Var& bias() const { return bias_; }

 private:
  Tensor mask_t_;  // in × out
  ad::Var weight_;
  ad::Var bias_;
};

struct ArConfig {
  std::size_t dim = 2;
  std::vector<std::size_t> hidden = {64};
  nn::Activation activation = nn::Activation::kTanh;
  // order[i] is the data coordinate modelled i-th; empty means 0..d−1.
  std::vector<std::size_t> order;
};

// Gaussian conditionals p(x_{o_i} | x_{o_1..o_{i−1}}) = N(μ_i, σ_i²) from one
// masked network; log σ is clamped to [−6, 4].
class ArModel {
 public:
  ArModel(const ArConfig& config, Rng& rng);

  struct Conditionals {
    ad::Var mean;       // n×d, ordered coordinates
    ad::Var log_sigma;  // n×d
  };
  // x in data coordinates.
  Conditionals conditionals(const ad::Var& x) const;
  // Per-row log density (n×1).
  ad::Var log_prob(const ad::Var& x) const;

  std::size_t dim() const { return order_.size(); }
  const std::vector<std::size_t>& order() const { return order_; }
  const std::vector<MaskedDense>& layers() const { return layers_; }
  std::vector<ad::Var> parameters() const;
  nn::NamedParameters named_parameters() const;

 private:
  std::vector<std::size_t> order_;
  Tensor to_ordered_;  // x · P reorders data columns
  nn::Activation activation_;
  std::vector<MaskedDense> layers_;
};

std::vector<double> ar_logpdf(const ArModel& model, const Tensor& x);

// n sequential draws (d network passes each); noise = false returns the
// chain of conditional means.
Tensor ar_sample(const ArModel& model, std::size_t n, Rng& rng, bool noise = true);

struct FitOptions {
  std::size_t steps = 3000;
  std::size_t batch = 128;
};
std::vector<double> ar_fit(ArModel& model, const Tensor& data, const FitOptions& options, nn::Optimizer& opt,
                           Rng& rng);

}  // namespace genlab::ar
