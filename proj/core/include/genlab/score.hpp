#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "genlab/autodiff.hpp"
#include "genlab/ddpm.hpp"
#include "genlab/linalg.hpp"
#include "genlab/nn.hpp"
#include "genlab/rng.hpp"

namespace genlab::score {

// −Σ⁻¹(x − μ). NumericError when Σ is not positive definite.
std::vector<double> gaussian_score(std::span<const double> mu, const Tensor& cov, std::span<const double> x);
// Σ_k r_k(x) · (−Σ_k⁻¹(x − μ_k)).
std::vector<double> gmm_score(std::vector<double> weights, std::vector<linalg::MvGaussian> components,
                              std::span<const double> x);

// Batch score field: n×d points to n×d scores.
using ScoreField = std::function<Tensor(const Tensor& x)>;
// Noise-conditional batch field s(x, σ).
using LevelField = std::function<Tensor(const Tensor& x, double level)>;

// Applies a per-point score to each row.
ScoreField pointwise(std::function<std::vector<double>(std::span<const double>)> f);

struct LangevinOptions {
  std::size_t burn_in = 0;
  // Return every post-burn-in state (stacked step-major) instead of the
  // final states only.
  bool keep_chain = false;
  // Turn off the √(2ε)ξ term (deterministic gradient ascent).
  bool noise = true;
};

// x ← x + ε s(x) + √(2ε) ξ applied to every row of x0 in lockstep.
// NumericError when any state's norm exceeds 1e6.
Tensor langevin_sample(const ScoreField& score, const Tensor& x0, std::size_t n_steps, double step,
                       Rng& rng, const LangevinOptions& options = {});

// Mean over rows of ‖a(x) − b(x)‖².
double fisher_divergence(const ScoreField& model, const ScoreField& truth, const Tensor& samples);

// Differentiable score model s(x).
using ScoreFn = std::function<ad::Var(const ad::Var& x)>;
// Mean over rows of ½‖s(x)‖² + ∇·s(x), the divergence taken exactly as the
// Jacobian trace with d reverse passes. Requires d ≤ 8.
double sm_objective_exact(const ScoreFn& s, const Tensor& samples);
ad::Var sm_objective_exact_var(const ScoreFn& s, const Tensor& samples);

// Noise-conditional model s(x, σ_i) with one level per row.
using ConditionalScoreFn = std::function<ad::Var(const ad::Var& x, std::span<const double> levels)>;

// Mean over rows of ‖s(x + ε, σ) + ε/σ²‖² with ε ~ N(0, σ²I).
ad::Var dsm_objective(const ConditionalScoreFn& s, const Tensor& x0, double sigma, Rng& rng);

class SigmaLadder {
 public:
  SigmaLadder() = default;
  // Throws ContractError unless strictly decreasing and positive.
  explicit SigmaLadder(std::vector<double> sigmas);
  static SigmaLadder geometric(double sigma_max, double sigma_min, std::size_t levels);

  std::size_t size() const { return sigmas_.size(); }
  double operator[](std::size_t k) const { return sigmas_.at(k); }
  const std::vector<double>& sigmas() const { return sigmas_; }

 private:
  std::vector<double> sigmas_;
};

enum class Weighting {
  kNone,          // the plain average over levels
  kSigmaSquared,  // each level's term multiplied by σ_k²
};

// Per row: level k uniform over the ladder, then the DSM term at σ_k. The
// normal draws precede the level draws, so a one-level ladder reproduces
// dsm_objective under the same stream.
ad::Var ms_dsm_objective(const ConditionalScoreFn& s, const Tensor& x0, const SigmaLadder& ladder, Rng& rng,
                         Weighting weighting = Weighting::kNone);

// Mlp on [x, log σ] → d.
class ScoreNet {
 public:
  ScoreNet() = default;
  ScoreNet(std::size_t dim, std::vector<std::size_t> hidden, Rng& rng,
           nn::Activation activation = nn::Activation::kSoftplus);
  explicit ScoreNet(nn::Mlp net);

  ad::Var forward(const ad::Var& x, std::span<const double> levels) const;
  ConditionalScoreFn conditional() const;
  LevelField field() const;

  std::size_t dim() const { return net_.output_dim(); }
  const nn::Mlp& net() const { return net_; }
  std::vector<ad::Var> parameters() const { return net_.parameters(); }

 private:
  nn::Mlp net_;
};

struct TrainOptions {
  std::size_t steps = 3000;
  std::size_t batch = 128;
  Weighting weighting = Weighting::kSigmaSquared;
};
std::vector<double> train_ms_dsm(ScoreNet& net, const Tensor& data, const SigmaLadder& ladder,
                                 const TrainOptions& options, nn::Optimizer& opt, Rng& rng);

// x ~ N(0, σ₁²I), then steps_per_level Langevin steps at each level with
// ε_k = ε₀ σ_k² / σ_K².
Tensor annealed_langevin(const LevelField& score, const SigmaLadder& ladder, std::size_t steps_per_level,
                         double eps0, std::size_t n, std::size_t dim, Rng& rng);

// Time-conditional batch field s(x, t).
using TimeField = std::function<Tensor(const Tensor& x, double t)>;

struct ReverseSdeOptions {
  double horizon = 5.0;
  std::size_t n_steps = 500;
  std::function<double(double t)> g = [](double) { return 1.0; };
  // Forward drift f(x, t); empty means the OU drift −½ g(t)² x.
  std::function<Tensor(const Tensor& x, double t)> drift;
};

// Euler–Maruyama on dX = [f − g² s(X, t)] dt + g dW̄ from t = horizon down to
// 0, starting at X ~ N(0, I).
Tensor reverse_sde_sample(const TimeField& score, const ReverseSdeOptions& options, std::size_t n,
                          std::size_t dim, Rng& rng);

// ∇_{x_t} log q(x_t | x0) = −ε/√(1 − ᾱ_t) with ε recovered from x_t and x0.
Tensor ddpm_conditional_score(const ddpm::NoiseSchedule& s, const Tensor& x_t, const Tensor& x0,
                              std::size_t t);

}  // namespace genlab::score
