#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "genlab/rng.hpp"
#include "genlab/tensor.hpp"

namespace genlab::ppca {

// x = W z + μ + ε, z ~ N(0, I_k), ε ~ N(0, α² I_d).
struct PpcaParams {
  Tensor W;                 // d×k loadings
  std::vector<double> mu;   // d
  double noise_var = 1.0;   // α²

  std::size_t dim() const { return W.rows(); }
  std::size_t latent_dim() const { return W.cols(); }
  void validate() const;
  // C = W Wᵀ + α² I
  Tensor marginal_covariance() const;
  // M = Wᵀ W + α² I
  Tensor m_matrix() const;
};

// log N(x; μ, W Wᵀ + α² I)
double marginal_logpdf(const PpcaParams& p, std::span<const double> x);
double average_loglik(const PpcaParams& p, const Tensor& data);

struct Posterior {
  std::vector<double> mean;  // M⁻¹ Wᵀ (x − μ)
  Tensor cov;                // α² M⁻¹
};
Posterior posterior(const PpcaParams& p, std::span<const double> x);

// Sufficient statistics of the E-step over a dataset.
struct Moments {
  Tensor ez;       // n×k, row i = E[z | x_i]
  Tensor sum_ezz;  // k×k, Σ_i E[z zᵀ | x_i]
};
Moments e_step(const PpcaParams& p, const Tensor& data);

// Σ_i E_q[log p(x_i | z_i)] under fixed moments; the prior term does not
// depend on the parameters and is omitted.
double expected_complete_loglik(const PpcaParams& p, const Tensor& data, const Moments& m);

// Closed-form maximiser of expected_complete_loglik given moments computed at
// parameters whose μ equals the data mean.
PpcaParams m_step(const Tensor& data, const Moments& m, std::optional<double> fixed_noise_var = {});

struct EmStep {
  PpcaParams params;
  double avg_loglik_before = 0.0;
};
EmStep em_step(const PpcaParams& p, const Tensor& data, std::optional<double> fixed_noise_var = {});

struct FitOptions {
  std::size_t max_iters = 200;
  double tol = 1e-8;
  // Holds α² fixed (zero-noise studies).
  std::optional<double> fixed_noise_var;
};

struct FitResult {
  PpcaParams params;
  // Average log-likelihood before each step followed by the final value.
  std::vector<double> loglik_trace;
};

// W: random orthonormal columns times the data's per-dimension std;
// μ: data mean; α²: half the mean per-dimension variance.
PpcaParams initialize(const Tensor& data, std::size_t k, Rng& rng);
FitResult fit_em(const Tensor& data, std::size_t k, const FitOptions& options, Rng& rng);
FitResult fit_em(const Tensor& data, PpcaParams init, const FitOptions& options);

Tensor sample(const PpcaParams& p, std::size_t n, Rng& rng);

// Largest principal angle (radians) between span(A) and span(B).
double max_principal_angle(const Tensor& a, const Tensor& b);

}  // namespace genlab::ppca
