#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "genlab/rng.hpp"
#include "genlab/tensor.hpp"

namespace genlab::linalg {

// Eigendecomposition S = U diag(λ) Uᵀ of a symmetric matrix.
// Eigenvalues descend; each column of U has its largest-magnitude component
// positive.
struct SymEigen {
  std::vector<double> values;
  Tensor vectors;  // d×d, eigenvectors as columns

  Tensor reconstruct() const;
};

// (1/n) Σ (x − x̄)(x − x̄)ᵀ over the rows of data.
Tensor covariance(const Tensor& data);

// Cyclic Jacobi rotations. Stops when the off-diagonal Frobenius norm drops
// below 1e-12·max(1, ‖S‖_F); throws NumericError after 100 sweeps without
// convergence and ContractError when S is not symmetric within 1e-10.
SymEigen sym_eigen(const Tensor& s);

// Inverse and log-determinant of a symmetric positive-definite matrix via
// sym_eigen. NumericError when the smallest eigenvalue is not positive.
Tensor inverse_spd(const Tensor& s);
double logdet_spd(const Tensor& s);
// Symmetric square root of a positive-semidefinite matrix (negative
// eigenvalues clamped to 0).
Tensor sqrt_psd(const Tensor& s);

struct PcaModel {
  Tensor mean;        // 1×d
  Tensor components;  // d×k, orthonormal columns
  std::vector<double> eigenvalues;  // all d, descending, clamped at 0
  double explained_variance_ratio = 0.0;

  std::size_t dim() const { return components.rows(); }
  std::size_t rank() const { return components.cols(); }
};

PcaModel pca_fit(const Tensor& data, std::size_t k);
// Rows of x to latent rows z = (x − mean) U_k.
Tensor pca_project(const PcaModel& model, const Tensor& x);
// Latent rows back to data space: mean + z U_kᵀ.
Tensor pca_reconstruct(const PcaModel& model, const Tensor& z);

struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> var;

  void validate() const;
};

double gaussian_logpdf(std::span<const double> x, std::span<const double> mean, const Tensor& cov);
double gaussian_logpdf(std::span<const double> x, const DiagGaussian& q);
double gaussian_logpdf_1d(double x, double mean, double var);

// Full-covariance Gaussian with the eigendecomposition cached.
class MvGaussian {
 public:
  MvGaussian(std::vector<double> mean, const Tensor& cov);

  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const Tensor& covariance() const { return cov_; }
  double logpdf(std::span<const double> x) const;
  // -Σ⁻¹(x − μ)
  std::vector<double> score(std::span<const double> x) const;
  Tensor sample(std::size_t n, Rng& rng) const;

 private:
  std::vector<double> mean_;
  Tensor cov_;
  SymEigen eig_;
  Tensor sqrt_cov_;
  double log_norm_ = 0.0;
};

// Σ_k w_k N(x; μ_k, Σ_k) with cached component factorisations.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<MvGaussian> components);

  std::size_t dim() const { return components_.front().dim(); }
  std::size_t size() const { return components_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<MvGaussian>& components() const { return components_; }
  double logpdf(std::span<const double> x) const;
  // Posterior component probabilities r_k(x).
  std::vector<double> responsibilities(std::span<const double> x) const;
  // Σ_k r_k(x) · (−Σ_k⁻¹ (x − μ_k))
  std::vector<double> score(std::span<const double> x) const;
  // Draws a component index then a Gaussian sample; a single-component
  // mixture consumes the stream exactly like that component's sample().
  Tensor sample(std::size_t n, Rng& rng) const;

 private:
  std::vector<double> weights_;
  std::vector<MvGaussian> components_;
};

// Σ ½(μ² + σ² − 1 − log σ²): KL(q ‖ N(0, I)).
double kl_diag_to_standard(const DiagGaussian& q);
// KL(N(m1, S1) ‖ N(m2, S2)).
double kl_gaussian(std::span<const double> m1, const Tensor& s1, std::span<const double> m2,
                   const Tensor& s2);

}  // namespace genlab::linalg
