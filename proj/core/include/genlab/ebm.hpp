#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "genlab/autodiff.hpp"
#include "genlab/nn.hpp"
#include "genlab/rng.hpp"
#include "genlab/score.hpp"

namespace genlab::ebm {

// Batch energy n×d → n×1.
using EnergyFn = std::function<ad::Var(const ad::Var& x)>;

class EnergyNet {
 public:
  EnergyNet(std::size_t dim, std::vector<std::size_t> hidden, Rng& rng,
            nn::Activation activation = nn::Activation::kSoftplus);
  explicit EnergyNet(nn::Mlp net);

  ad::Var energy(const ad::Var& x) const { return net_.forward(x); }
  EnergyFn fn() const;
  std::size_t dim() const { return net_.input_dim(); }
  const nn::Mlp& net() const { return net_; }
  std::vector<ad::Var> parameters() const { return net_.parameters(); }

 private:
  nn::Mlp net_;
};

// −E(x) per row (n×1); log p up to the unknown −log Z.
Tensor unnorm_logpdf(const EnergyFn& energy, const Tensor& x);

// −∇_x E(x) per row (n×d).
Tensor ebm_score(const EnergyFn& energy, const Tensor& x);

// Langevin chains driven by ebm_score; same contract as score::langevin_sample.
Tensor ebm_langevin(const EnergyFn& energy, const Tensor& x0, std::size_t n_steps, double step, Rng& rng,
                    const score::LangevinOptions& options = {});

// −E_data[∇_θ E] + E_model[∇_θ E], one tensor per parameter (the ascent
// direction of the log-likelihood).
std::vector<Tensor> contrastive_grad(const EnergyFn& energy, std::span<const ad::Var> params,
                                     const Tensor& data, const Tensor& model_samples);

// Mean over rows of ½‖∇E‖² − ΔE with the Laplacian taken exactly by d
// reverse passes. Requires d ≤ 8.
double sm_energy_objective(const EnergyFn& energy, const Tensor& samples);

struct TrainOptions {
  std::size_t steps = 2000;
  std::size_t batch = 128;
  std::size_t langevin_steps = 100;
  double langevin_step = 0.01;
  // Weight of the mean E(x)² penalty on data and model samples.
  double regulariser = 1e-4;
};
// Contrastive training with persistent chains: each batch's chains start from
// the previous batch's final samples. Returns the per-step contrastive loss
// E_data[E] − E_model[E].
std::vector<double> train_contrastive(EnergyNet& net, const Tensor& data, const TrainOptions& options,
                                      nn::Optimizer& opt, Rng& rng);

}  // namespace genlab::ebm
