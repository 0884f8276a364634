#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "genlab/autodiff.hpp"
#include "genlab/linalg.hpp"
#include "genlab/nn.hpp"
#include "genlab/ppca.hpp"
#include "genlab/rng.hpp"

namespace genlab::vae {

struct VaeConfig {
  std::size_t data_dim = 2;
  std::size_t latent_dim = 2;
  std::vector<std::size_t> hidden = {64};
  nn::Activation activation = nn::Activation::kTanh;
  double decoder_var = 0.1;
  // Decoder is a single affine map z W + b (the linear-Gaussian model).
  bool linear_decoder = false;
};

// Encoder q(z|x) = N(μ(x), diag σ(x)²) emitting [μ, log σ]; decoder
// p(x|z) = N(μ_dec(z), σ²_dec I) with a fixed scalar variance.
class VaeModel {
 public:
  VaeModel(const VaeConfig& config, Rng& rng);
  VaeModel(nn::Mlp encoder, nn::Mlp decoder, double decoder_var);

  struct Encoding {
    ad::Var mean;       // n×k
    ad::Var log_sigma;  // n×k, clamped to [log 1e-4, log 1e4]
    ad::Var sigma;      // n×k
  };
  Encoding encode(const ad::Var& x) const;
  ad::Var decode(const ad::Var& z) const;

  std::size_t data_dim() const { return decoder_.output_dim(); }
  std::size_t latent_dim() const { return decoder_.input_dim(); }
  double decoder_var() const { return decoder_var_; }
  const nn::Mlp& encoder() const { return encoder_; }
  const nn::Mlp& decoder() const { return decoder_; }
  bool has_linear_decoder() const;

  std::vector<ad::Var> parameters() const;
  nn::NamedParameters named_parameters() const;

 private:
  nn::Mlp encoder_;
  nn::Mlp decoder_;
  double decoder_var_ = 0.1;
};

// z = μ + σ ⊙ ε. Throws ContractError when any σ ≤ 0.
ad::Var reparam_sample(const ad::Var& mu, const ad::Var& sigma, const ad::Var& eps);

// Per-row terms of a single-draw estimate (n×1 each).
struct ElboTerms {
  ad::Var reconstruction;  // log p(x | z)
  ad::Var kl;              // KL(q(z|x) ‖ N(0, I)), analytic
};
ElboTerms elbo_terms(const VaeModel& model, const ad::Var& x, const Tensor& eps);

// Per-row ELBO: reconstruction averaged over n_mc draws minus analytic KL.
std::vector<double> elbo(const VaeModel& model, const Tensor& x, std::size_t n_mc, Rng& rng);

// Mean over rows of −(reconstruction − β·KL) with one draw per row.
ad::Var negative_elbo(const VaeModel& model, const Tensor& batch, double beta, Rng& rng);

struct StepStats {
  double loss = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
};
// One optimizer step on encoder and decoder. NumericError on a non-finite loss.
StepStats train_step(VaeModel& model, const Tensor& batch, double beta, nn::Optimizer& opt, Rng& rng);

// Decoder means at z ~ N(0, I) plus N(0, σ²_dec) noise.
Tensor generate(const VaeModel& model, std::size_t n, Rng& rng);

// The linear decoder read as PPCA parameters (W = weightᵀ, μ = bias).
ppca::PpcaParams as_linear_gaussian(const VaeModel& model);

// The three ELBO forms for p(x|z) = N(Wz + μ, α²I), p(z) = N(0, I) and a
// diagonal q, each evaluated in closed form.
struct LinearGaussianElbo {
  double joint = 0.0;      // E_q[log p(x, z)] + H[q]
  double posterior = 0.0;  // log p(x) − KL(q ‖ p(z|x))
  double prior = 0.0;      // E_q[log p(x|z)] − KL(q ‖ p(z))
  double loglik = 0.0;     // log p(x)
};
LinearGaussianElbo linear_gaussian_elbo(const ppca::PpcaParams& p, std::span<const double> x,
                                        const linalg::DiagGaussian& q);

}  // namespace genlab::vae
