#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "genlab/autodiff.hpp"
#include "genlab/nn.hpp"
#include "genlab/rng.hpp"

namespace genlab::ddpm {

// β_t, α_t = 1 − β_t, ᾱ_t = Π_{s≤t} α_s and β̃_t = (1 − ᾱ_{t−1}) / (1 − ᾱ_t) β_t
// for t = 1..T, with ᾱ_0 = 1. Accessors take the 1-based step index.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  explicit NoiseSchedule(std::vector<double> betas);

  std::size_t steps() const { return beta_.size(); }
  double beta(std::size_t t) const { return beta_.at(t - 1); }
  double alpha(std::size_t t) const { return 1.0 - beta_.at(t - 1); }
  // t = 0 gives 1.
  double alpha_bar(std::size_t t) const { return t == 0 ? 1.0 : alpha_bar_.at(t - 1); }
  double beta_tilde(std::size_t t) const { return beta_tilde_.at(t - 1); }
  const std::vector<double>& betas() const { return beta_; }

 private:
  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
  std::vector<double> beta_tilde_;
};

// Linear interpolation from β_start to β_end over T steps.
NoiseSchedule make_schedule(std::size_t T, double beta_start = 1e-4, double beta_end = 0.02);
// The (1e-4, 0.02) endpoints multiplied by 1000/T, so short chains still end
// near N(0, I) (ᾱ_T ≈ 4e-5 for every T ≥ 21). ContractError for T ≤ 20.
NoiseSchedule scaled_schedule(std::size_t T);

// x_t = √ᾱ_t x0 + √(1 − ᾱ_t) ε for 0 ≤ t ≤ T.
Tensor forward_sample(const NoiseSchedule& s, const Tensor& x0, std::size_t t, const Tensor& eps);

struct ReversePosterior {
  Tensor mean;
  double var = 0.0;
};
// q(x_{t−1} | x_t, x0) for 1 ≤ t ≤ T (t = 1 collapses onto x0 with zero variance).
ReversePosterior reverse_posterior(const NoiseSchedule& s, const Tensor& x_t, const Tensor& x0,
                                   std::size_t t);
// (1/√α_t)(x_t − β_t/√(1 − ᾱ_t) ε)
Tensor reverse_posterior_from_eps(const NoiseSchedule& s, const Tensor& x_t, const Tensor& eps,
                                  std::size_t t);
// KL(N(a, vI) ‖ N(b, vI)) = ‖a − b‖² / (2v), summed over all entries.
double equal_variance_kl(const Tensor& a, const Tensor& b, double var);

// Noise predictor ε̂(x_t, t) over a batch; t holds one step index per row.
using EpsPredictor = std::function<ad::Var(const ad::Var& x_t, std::span<const std::size_t> t)>;

// Mlp on [x_t, t/T, sin(2^j π t/T), cos(2^j π t/T) for j = 0..3].
class EpsNet {
 public:
  static constexpr std::size_t kTimeFeatures = 9;

  EpsNet() = default;
  EpsNet(std::size_t dim, std::size_t steps, std::vector<std::size_t> hidden, Rng& rng,
         nn::Activation activation = nn::Activation::kTanh);
  EpsNet(nn::Mlp net, std::size_t steps);

  ad::Var forward(const ad::Var& x_t, std::span<const std::size_t> t) const;
  EpsPredictor predictor() const;
  static Tensor time_features(std::span<const std::size_t> t, std::size_t steps);

  std::size_t dim() const { return net_.output_dim(); }
  std::size_t steps() const { return steps_; }
  const nn::Mlp& net() const { return net_; }
  std::vector<ad::Var> parameters() const { return net_.parameters(); }

 private:
  nn::Mlp net_;
  std::size_t steps_ = 0;
};

// Mean over rows of ‖ε − ε̂(x_t, t)‖² with t uniform on {1..T} (drawn first,
// one per row) and ε ~ N(0, I).
ad::Var loss_simple(const EpsPredictor& net, const NoiseSchedule& s, const Tensor& x0, Rng& rng);

struct TrainOptions {
  std::size_t steps = 5000;
  std::size_t batch = 128;
};
// Minibatch training; returns the per-step loss.
std::vector<double> train(EpsNet& net, const NoiseSchedule& s, const Tensor& data,
                          const TrainOptions& options, nn::Optimizer& opt, Rng& rng);

struct SampleOptions {
  // Add √β̃_1 noise at the last step instead of returning the mean.
  bool final_noise = false;
};
// Ancestral sampling from x_T ~ N(0, I) with reverse variance β̃_t.
Tensor sample(const EpsPredictor& net, const NoiseSchedule& s, std::size_t n, std::size_t dim, Rng& rng,
              const SampleOptions& options = {});

// Exponential moving average of a trace (for smoothed loss comparisons).
std::vector<double> smooth(std::span<const double> trace, double decay = 0.99);

}  // namespace genlab::ddpm
