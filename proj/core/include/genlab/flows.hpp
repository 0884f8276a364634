#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "genlab/autodiff.hpp"
#include "genlab/nn.hpp"
#include "genlab/rng.hpp"

namespace genlab::flows {

// Output of a layer or stack applied to a batch: transformed rows and the
// per-row log|det J| (n×1).
struct Pass {
  ad::Var y;
  ad::Var logdet;
};

// û = raw_u + [m(wᵀu) − wᵀu] w/‖w‖² with m(a) = −1 + softplus(a), so that
// wᵀû > −1. ContractError when w = 0.
ad::Var planar_constrain(const ad::Var& raw_u, const ad::Var& w);
Tensor planar_constrain(const Tensor& raw_u, const Tensor& w);

// y = x + û tanh(wᵀx + b). Forward only: its inverse has no closed form.
class PlanarLayer {
 public:
  PlanarLayer(Tensor raw_u, Tensor w, double b);
  static PlanarLayer random(std::size_t dim, Rng& rng, double scale = 1.0);

  Pass forward(const ad::Var& x) const;
  std::size_t dim() const { return w_.cols(); }
  ad::Var u_hat() const { return planar_constrain(raw_u_, w_); }
  std::vector<ad::Var> parameters() const { return {raw_u_, w_, b_}; }
  nn::NamedParameters named_parameters(const std::string& prefix) const;

 private:
  ad::Var raw_u_;  // 1×d
  ad::Var w_;      // 1×d
  ad::Var b_;      // 1×1
};

// x = (x₁, x₂) split at d₁: y₁ = x₁, y₂ = x₂ ⊙ exp(s(x₁)) + t(x₁).
class CouplingLayer {
 public:
  struct Options {
    std::vector<std::size_t> hidden = {64};
    nn::Activation activation = nn::Activation::kTanh;
    // Clamp s to [−5, 5] before exponentiating.
    bool clamp_scale = true;
    // Zero the last layer of s and t so the layer starts as the identity.
    bool zero_init = true;
  };

  CouplingLayer(std::size_t dim, std::size_t split, Rng& rng, const Options& options);
  CouplingLayer(std::size_t split, nn::Mlp scale_net, nn::Mlp shift_net, bool clamp_scale = true);

  Pass forward(const ad::Var& x) const;
  // Returns x and the per-row log|det| of the inverse map (−Σ s).
  Pass inverse(const ad::Var& y) const;

  std::size_t dim() const { return split_ + scale_.output_dim(); }
  std::size_t split() const { return split_; }
  const nn::Mlp& scale_net() const { return scale_; }
  const nn::Mlp& shift_net() const { return shift_; }
  std::vector<ad::Var> parameters() const;
  nn::NamedParameters named_parameters(const std::string& prefix) const;

 private:
  ad::Var scale_of(const ad::Var& x1) const;

  std::size_t split_ = 1;
  nn::Mlp scale_;
  nn::Mlp shift_;
  bool clamp_ = true;
};

// y_j = x_{perm[j]}. ContractError unless perm is a bijection of {0..d−1}.
class PermutationLayer {
 public:
  explicit PermutationLayer(std::vector<std::size_t> perm);
  static PermutationLayer reverse(std::size_t dim);

  Pass forward(const ad::Var& x) const;
  Pass inverse(const ad::Var& y) const;
  std::size_t dim() const { return perm_.size(); }
  const std::vector<std::size_t>& perm() const { return perm_; }

 private:
  std::vector<std::size_t> perm_;
  Tensor matrix_;  // x · P permutes columns
};

// Elementwise y = x ⊙ exp(s) + t with learnable s and t (1×d each); the only
// invertible layer available in one dimension.
class AffineLayer {
 public:
  explicit AffineLayer(std::size_t dim);
  AffineLayer(Tensor log_scale, Tensor shift);

  Pass forward(const ad::Var& x) const;
  Pass inverse(const ad::Var& y) const;
  std::size_t dim() const { return log_scale_.cols(); }
  const ad::Var& log_scale() const { return log_scale_; }
  const ad::Var& shift() const { return shift_; }
  std::vector<ad::Var> parameters() const { return {log_scale_, shift_}; }
  nn::NamedParameters named_parameters(const std::string& prefix) const;

 private:
  ad::Var log_scale_;
  ad::Var shift_;
};

using Layer = std::variant<PlanarLayer, CouplingLayer, PermutationLayer, AffineLayer>;

// x = f_K ∘ ⋯ ∘ f_1(z) with z ~ N(0, I_d).
class FlowStack {
 public:
  explicit FlowStack(std::size_t dim);

  // DimensionError when the layer's dimension differs from the stack's.
  void add(Layer layer);
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return layers_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }

  // Base to data space with the accumulated forward log-det.
  Pass forward(const ad::Var& z) const;
  // Data to base space with the accumulated log-det of the inverse.
  // ContractError when a planar layer is present.
  Pass inverse(const ad::Var& x) const;
  // Per-row log p(x) (n×1).
  ad::Var log_prob(const ad::Var& x) const;

  std::vector<ad::Var> parameters() const;
  nn::NamedParameters named_parameters() const;

 private:
  std::size_t dim_;
  std::vector<Layer> layers_;
};

// n_pairs × (coupling on the first ⌊d/2⌋ coordinates, reversal).
FlowStack make_coupling_stack(std::size_t dim, std::size_t n_pairs, Rng& rng,
                              const CouplingLayer::Options& options = {});

std::vector<double> flow_logpdf(const FlowStack& stack, const Tensor& x);
Tensor flow_sample(const FlowStack& stack, std::size_t n, Rng& rng);

struct FitOptions {
  std::size_t steps = 3000;
  std::size_t batch = 128;
};
// Minimises mean −log p over minibatches; returns the per-step loss.
std::vector<double> flow_fit(FlowStack& stack, const Tensor& data, const FitOptions& options,
                             nn::Optimizer& opt, Rng& rng);

}  // namespace genlab::flows
