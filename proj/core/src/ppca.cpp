#include "genlab/ppca.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "genlab/errors.hpp"
#include "genlab/linalg.hpp"

namespace genlab::ppca {
namespace {

// A (AᵀA)^{-1/2}: orthonormal basis of span(A).
Tensor orthonormalize(const Tensor& a) {
  const linalg::SymEigen e = linalg::sym_eigen(matmul(transpose(a), a));
  const std::size_t k = e.values.size();
  Tensor inv_sqrt(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t m = 0; m < k; ++m) {
        if (e.values[m] <= 0.0) throw NumericError("orthonormalize: rank-deficient columns");
        acc += e.vectors(i, m) * e.vectors(j, m) / std::sqrt(e.values[m]);
      }
      inv_sqrt(i, j) = acc;
    }
  return matmul(a, inv_sqrt);
}

}  // namespace

void PpcaParams::validate() const {
  require(noise_var > 0.0, "ppca: noise variance must be positive");
  require(W.cols() <= W.rows(), "ppca: latent dim must not exceed data dim");
  if (mu.size() != W.rows()) throw DimensionError("ppca: mean length does not match W rows");
}

Tensor PpcaParams::marginal_covariance() const {
  Tensor c = matmul(W, transpose(W));
  for (std::size_t i = 0; i < c.rows(); ++i) c(i, i) += noise_var;
  return c;
}

Tensor PpcaParams::m_matrix() const {
  Tensor m = matmul(transpose(W), W);
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += noise_var;
  return m;
}

double marginal_logpdf(const PpcaParams& p, std::span<const double> x) {
  p.validate();
  if (x.size() != p.dim()) throw ContractError("ppca marginal: dimension mismatch");
  return linalg::gaussian_logpdf(x, p.mu, p.marginal_covariance());
}

double average_loglik(const PpcaParams& p, const Tensor& data) {
  p.validate();
  if (data.cols() != p.dim()) throw ContractError("ppca loglik: dimension mismatch");
  require(data.rows() >= 1, "ppca loglik: empty data");
  const linalg::MvGaussian g(p.mu, p.marginal_covariance());
  double s = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) s += g.logpdf(data.row(i));
  return s / static_cast<double>(data.rows());
}

Posterior posterior(const PpcaParams& p, std::span<const double> x) {
  p.validate();
  if (x.size() != p.dim()) throw ContractError("ppca posterior: dimension mismatch");
  const Tensor minv = linalg::inverse_spd(p.m_matrix());
  const std::size_t d = p.dim(), k = p.latent_dim();
  std::vector<double> wtx(k, 0.0);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < d; ++i) wtx[j] += p.W(i, j) * (x[i] - p.mu[i]);
  Posterior post;
  post.mean.assign(k, 0.0);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) post.mean[a] += minv(a, b) * wtx[b];
  post.cov = minv * p.noise_var;
  return post;
}

Moments e_step(const PpcaParams& p, const Tensor& data) {
  p.validate();
  if (data.cols() != p.dim()) throw ContractError("ppca e-step: dimension mismatch");
  const std::size_t n = data.rows(), d = p.dim(), k = p.latent_dim();
  const Tensor minv = linalg::inverse_spd(p.m_matrix());
  // Rows of (x − μ) W M⁻¹ are E[z|x]ᵀ (M⁻¹ is symmetric).
  Tensor centered = data;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) centered(i, j) -= p.mu[j];
  Moments m;
  m.ez = matmul(matmul(centered, p.W), minv);
  m.sum_ezz = minv * (p.noise_var * static_cast<double>(n));
  const Tensor outer = matmul(transpose(m.ez), m.ez);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) m.sum_ezz(a, b) += outer(a, b);
  return m;
}

double expected_complete_loglik(const PpcaParams& p, const Tensor& data, const Moments& m) {
  p.validate();
  const std::size_t n = data.rows(), d = p.dim(), k = p.latent_dim();
  const Tensor wtw = matmul(transpose(p.W), p.W);
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r2 = 0.0, cross = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = data(i, j) - p.mu[j];
      r2 += c * c;
      double wz = 0.0;
      for (std::size_t a = 0; a < k; ++a) wz += p.W(j, a) * m.ez(i, a);
      cross += wz * c;
    }
    quad += r2 - 2.0 * cross;
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) quad += m.sum_ezz(a, b) * wtw(b, a);
  const double nd = static_cast<double>(n * d);
  return -0.5 * nd * std::log(2.0 * std::numbers::pi * p.noise_var) - 0.5 * quad / p.noise_var;
}

PpcaParams m_step(const Tensor& data, const Moments& m, std::optional<double> fixed_noise_var) {
  const std::size_t n = data.rows(), d = data.cols(), k = m.ez.cols();
  PpcaParams out;
  const Tensor mean = column_means(data);
  out.mu.assign(mean.data().begin(), mean.data().end());
  Tensor centered = data;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) centered(i, j) -= out.mu[j];
  // W' = [Σ (x − μ') E[z]ᵀ] [Σ E[z zᵀ]]⁻¹
  const Tensor xz = matmul(transpose(centered), m.ez);
  out.W = matmul(xz, linalg::inverse_spd(m.sum_ezz));
  if (fixed_noise_var) {
    out.noise_var = *fixed_noise_var;
  } else {
    const Tensor wtw = matmul(transpose(out.W), out.W);
    double acc = 0.0;
    for (double v : centered.data()) acc += v * v;
    // Σ E[z]ᵀ W'ᵀ (x − μ') = tr(W'ᵀ Σ (x − μ') E[z]ᵀ)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t a = 0; a < k; ++a) acc -= 2.0 * out.W(j, a) * xz(j, a);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) acc += m.sum_ezz(a, b) * wtw(b, a);
    out.noise_var = acc / static_cast<double>(n * d);
  }
  if (!(out.noise_var > 0.0) || !out.W.all_finite()) {
    throw NumericError("ppca m-step: degenerate update (noise variance " +
                       std::to_string(out.noise_var) + ")");
  }
  return out;
}

EmStep em_step(const PpcaParams& p, const Tensor& data, std::optional<double> fixed_noise_var) {
  require(data.rows() >= 1, "ppca em_step: empty data");
  EmStep r;
  r.avg_loglik_before = average_loglik(p, data);
  r.params = m_step(data, e_step(p, data), fixed_noise_var);
  return r;
}

PpcaParams initialize(const Tensor& data, std::size_t k, Rng& rng) {
  const std::size_t d = data.cols();
  require(data.rows() >= 1, "ppca init: empty data");
  require(k >= 1 && k <= d, "ppca init: latent dim must satisfy 1 <= k <= d");
  const Tensor cov = linalg::covariance(data);
  const double mean_var = trace(cov) / static_cast<double>(d);
  PpcaParams p;
  const Tensor mean = column_means(data);
  p.mu.assign(mean.data().begin(), mean.data().end());
  p.W = orthonormalize(rng.normal(d, k)) * std::sqrt(std::max(mean_var, 1e-12));
  p.noise_var = 0.5 * std::max(mean_var, 1e-12);
  return p;
}

FitResult fit_em(const Tensor& data, std::size_t k, const FitOptions& options, Rng& rng) {
  PpcaParams init = initialize(data, k, rng);
  if (options.fixed_noise_var) init.noise_var = *options.fixed_noise_var;
  return fit_em(data, std::move(init), options);
}

FitResult fit_em(const Tensor& data, PpcaParams init, const FitOptions& options) {
  FitResult r;
  r.params = std::move(init);
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    EmStep s = em_step(r.params, data, options.fixed_noise_var);
    r.loglik_trace.push_back(s.avg_loglik_before);
    r.params = std::move(s.params);
    const std::size_t m = r.loglik_trace.size();
    if (m >= 2 && std::abs(r.loglik_trace[m - 1] - r.loglik_trace[m - 2]) < options.tol) break;
  }
  r.loglik_trace.push_back(average_loglik(r.params, data));
  return r;
}

Tensor sample(const PpcaParams& p, std::size_t n, Rng& rng) {
  p.validate();
  const std::size_t d = p.dim(), k = p.latent_dim();
  const double alpha = std::sqrt(p.noise_var);
  Tensor x(n, d);
  std::vector<double> z(k);
  for (std::size_t r = 0; r < n; ++r) {
    for (auto& v : z) v = rng.normal();
    for (std::size_t j = 0; j < d; ++j) {
      double wz = 0.0;
      for (std::size_t a = 0; a < k; ++a) wz += p.W(j, a) * z[a];
      x(r, j) = wz + p.mu[j] + alpha * rng.normal();
    }
  }
  return x;
}

double max_principal_angle(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) throw DimensionError("principal angles: ambient dimension mismatch");
  const Tensor qa = orthonormalize(a), qb = orthonormalize(b);
  const Tensor m = matmul(transpose(qa), qb);
  const linalg::SymEigen e = linalg::sym_eigen(matmul(transpose(m), m));
  // Smallest singular value of QaᵀQb is the cosine of the largest angle.
  const double s = std::sqrt(std::clamp(e.values.back(), 0.0, 1.0));
  return std::acos(std::min(1.0, s));
}

}  // namespace genlab::ppca
