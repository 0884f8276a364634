#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "genlab/autodiff.hpp"
#include "genlab/nn.hpp"
#include "genlab/rng.hpp"

namespace genlab::gan {

// Batch maps n×d → n×1: discriminator logits (before the ±15 clamp) or critic
// scores.
using ScalarNet = std::function<ad::Var(const ad::Var& x)>;

class Generator {
 public:
  Generator(std::size_t latent_dim, std::size_t data_dim, std::vector<std::size_t> hidden, Rng& rng,
            nn::Activation activation = nn::Activation::kTanh);
  explicit Generator(nn::Mlp net);

  ad::Var generate(const ad::Var& z) const { return net_.forward(z); }
  // G(z) for z ~ N(0, I); keeps the graph so losses reach G's parameters.
  ad::Var sample(std::size_t n, Rng& rng) const;
  Tensor sample_values(std::size_t n, Rng& rng) const;

  std::size_t latent_dim() const { return net_.input_dim(); }
  std::size_t data_dim() const { return net_.output_dim(); }
  const nn::Mlp& net() const { return net_; }
  std::vector<ad::Var> parameters() const { return net_.parameters(); }

 private:
  nn::Mlp net_;
};

// Logit network d → 1; probabilities are sigmoid of the logit clamped to ±15.
class Discriminator {
 public:
  Discriminator(std::size_t data_dim, std::vector<std::size_t> hidden, Rng& rng,
                nn::Activation activation = nn::Activation::kTanh);
  explicit Discriminator(nn::Mlp net);

  ad::Var logits(const ad::Var& x) const;
  Tensor prob(const Tensor& x) const;
  ScalarNet logit_fn() const;
  const nn::Mlp& net() const { return net_; }
  std::vector<ad::Var> parameters() const { return net_.parameters(); }

 private:
  nn::Mlp net_;
};

// Unbounded real-valued critic d → 1.
class Critic {
 public:
  Critic(std::size_t data_dim, std::vector<std::size_t> hidden, Rng& rng,
         nn::Activation activation = nn::Activation::kTanh);
  explicit Critic(nn::Mlp net);

  ad::Var score(const ad::Var& x) const { return net_.forward(x); }
  ScalarNet fn() const;
  const nn::Mlp& net() const { return net_; }
  std::vector<ad::Var> parameters() const { return net_.parameters(); }

 private:
  nn::Mlp net_;
};

// log D = −softplus(−l), log(1 − D) = −softplus(l) with l clamped to ±15.
ad::Var log_d(const ad::Var& logits);
ad::Var log_one_minus_d(const ad::Var& logits);

// E_real[log D] + E_fake[log(1 − D)], D given by clamped logits.
ad::Var gan_value(const ScalarNet& logits, const ad::Var& real, const ad::Var& fake);
// E_fake[−log D]
ad::Var nonsat_gen_loss(const ScalarNet& logits, const ad::Var& fake);
// E_fake[log(1 − D)], the generator's side of the minimax game.
ad::Var minimax_gen_loss(const ScalarNet& logits, const ad::Var& fake);

using Density1d = std::function<double(double)>;

// p(x)/(p(x) + q(x)); ContractError when both vanish.
double optimal_discriminator(const Density1d& p, const Density1d& q, double x);

struct QuadratureGrid {
  double lo = -10.0;
  double hi = 10.0;
  std::size_t n = 4001;
};
// ½KL(p‖m) + ½KL(q‖m), trapezoid rule. NumericError when either density's
// mass on the grid is off by more than 1%.
double js_divergence(const Density1d& p, const Density1d& q, const QuadratureGrid& grid);

// E_real[f] − E_fake[f]
ad::Var wgan_value(const ScalarNet& critic, const ad::Var& real, const ad::Var& fake);

// λ E[(‖∇f(x̂)‖ − 1)²] with x̂ = u x_real + (1 − u) x_fake, one u ~ U(0, 1)
// per row pair. Differentiable with respect to the critic's parameters.
ad::Var gradient_penalty(const ScalarNet& critic, const Tensor& real, const Tensor& fake, double lambda,
                         Rng& rng);

enum class GenLoss { kMinimax, kNonSaturating };

struct GanOptions {
  std::size_t steps = 2000;
  std::size_t batch = 128;
  GenLoss loss = GenLoss::kNonSaturating;
};
struct GanTraces {
  std::vector<double> d_loss;  // −gan_value after the D step
  std::vector<double> g_loss;
};
// Alternates one discriminator ascent step and one generator step.
GanTraces train_gan(Generator& g, Discriminator& d, const Tensor& data, const GanOptions& options,
                    const nn::OptimizerConfig& opt, Rng& rng);

struct WganOptions {
  std::size_t steps = 2000;  // generator steps
  std::size_t batch = 128;
  double lambda = 10.0;
  std::size_t n_critic = 5;
};
struct WganTraces {
  std::vector<double> critic_value;  // wgan_value at the last critic step of each round
  std::vector<double> g_loss;
};
WganTraces train_wgan_gp(Generator& g, Critic& c, const Tensor& data, const WganOptions& options,
                         const nn::OptimizerConfig& opt, Rng& rng);

// Critic-only training between two fixed sample sets (a Wasserstein-1
// estimate); returns the dual value trace.
std::vector<double> fit_critic(Critic& c, const Tensor& real, const Tensor& fake, std::size_t steps,
                               std::size_t batch, double lambda, const nn::OptimizerConfig& opt, Rng& rng);

// 1-D Gaussian kernel density estimate with Silverman's bandwidth
// 1.06 σ̂ n^{−1/5}.
class GaussianKde {
 public:
  explicit GaussianKde(std::vector<double> samples);
  double bandwidth() const { return h_; }
  double operator()(double x) const;

 private:
  std::vector<double> samples_;
  double h_ = 1.0;
};

}  // namespace genlab::gan
