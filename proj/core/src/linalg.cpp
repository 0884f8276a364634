#include "genlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>

#include "genlab/errors.hpp"

namespace genlab::linalg {
namespace {

constexpr int kMaxSweeps = 100;
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double frobenius(const Tensor& a) { return std::sqrt(squared_norm(a.data())); }

double off_diagonal_norm(const Tensor& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

void check_square(const Tensor& s, const char* op) {
  if (s.rows() != s.cols()) throw DimensionError(std::string(op) + ": matrix must be square");
}

SymEigen positive_definite_eigen(const Tensor& s, const char* op) {
  SymEigen e = sym_eigen(s);
  const double top = e.values.empty() ? 0.0 : std::abs(e.values.front());
  if (e.values.empty() || e.values.back() <= 1e-13 * top || e.values.back() <= 0.0) {
    throw NumericError(std::string(op) + ": covariance is not positive definite");
  }
  return e;
}

}  // namespace

Tensor SymEigen::reconstruct() const {
  const std::size_t d = values.size();
  Tensor out(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += vectors(i, k) * values[k] * vectors(j, k);
      out(i, j) = s;
    }
  return out;
}

Tensor covariance(const Tensor& data) {
  if (data.rows() == 0) throw ContractError("covariance: empty data");
  const std::size_t n = data.rows(), d = data.cols();
  const Tensor mean = column_means(data);
  Tensor cov(d, d);
  std::vector<double> centered(d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) centered[j] = data(r, j) - mean(0, j);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) cov(i, j) += centered[i] * centered[j];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      cov(i, j) *= inv_n;
      cov(j, i) = cov(i, j);
    }
  return cov;
}

SymEigen sym_eigen(const Tensor& s) {
  check_square(s, "sym_eigen");
  const std::size_t d = s.rows();
  const double scale = std::max(1.0, max_abs(s));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (std::abs(s(i, j) - s(j, i)) > 1e-10 * scale) {
        throw ContractError("sym_eigen: matrix is not symmetric");
      }
  if (!s.all_finite()) throw NumericError("sym_eigen: non-finite entries");

  Tensor a = s;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) a(i, j) = a(j, i) = 0.5 * (s(i, j) + s(j, i));
  Tensor v = Tensor::identity(d);
  const double tol = 1e-12 * std::max(1.0, frobenius(a));

  int sweep = 0;
  while (off_diagonal_norm(a) >= tol) {
    if (++sweep > kMaxSweeps) throw NumericError("sym_eigen: no convergence after 100 sweeps");
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  SymEigen out;
  out.values.resize(d);
  out.vectors = Tensor(d, d);
  for (std::size_t c = 0; c < d; ++c) {
    const std::size_t src = order[c];
    out.values[c] = a(src, src);
    std::size_t arg = 0;
    for (std::size_t k = 1; k < d; ++k)
      if (std::abs(v(k, src)) > std::abs(v(arg, src))) arg = k;
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < d; ++k) out.vectors(k, c) = sign * v(k, src);
  }
  return out;
}

Tensor inverse_spd(const Tensor& s) {
  const SymEigen e = positive_definite_eigen(s, "inverse_spd");
  const std::size_t d = e.values.size();
  Tensor out(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += e.vectors(i, k) * e.vectors(j, k) / e.values[k];
      out(i, j) = out(j, i) = acc;
    }
  return out;
}

double logdet_spd(const Tensor& s) {
  const SymEigen e = positive_definite_eigen(s, "logdet_spd");
  double ld = 0.0;
  for (double l : e.values) ld += std::log(l);
  return ld;
}

Tensor sqrt_psd(const Tensor& s) {
  const SymEigen e = sym_eigen(s);
  const std::size_t d = e.values.size();
  Tensor out(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k)
        acc += e.vectors(i, k) * std::sqrt(std::max(0.0, e.values[k])) * e.vectors(j, k);
      out(i, j) = acc;
    }
  return out;
}

PcaModel pca_fit(const Tensor& data, std::size_t k) {
  const std::size_t d = data.cols();
  require(k >= 1 && k <= d, "pca_fit: k must satisfy 1 <= k <= d");
  SymEigen e = sym_eigen(covariance(data));
  for (double& l : e.values) l = std::max(0.0, l);
  PcaModel m;
  m.mean = column_means(data);
  m.components = Tensor(d, k);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < k; ++j) m.components(i, j) = e.vectors(i, j);
  const double total = std::accumulate(e.values.begin(), e.values.end(), 0.0);
  const double kept = std::accumulate(e.values.begin(), e.values.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
  // Zero-variance data: nothing is left unexplained.
  m.explained_variance_ratio = total > 0.0 ? kept / total : 1.0;
  m.eigenvalues = std::move(e.values);
  return m;
}

Tensor pca_project(const PcaModel& model, const Tensor& x) {
  if (x.cols() != model.dim()) throw ContractError("pca_project: dimension mismatch");
  Tensor centered = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) centered(r, j) -= model.mean(0, j);
  return matmul(centered, model.components);
}

Tensor pca_reconstruct(const PcaModel& model, const Tensor& z) {
  if (z.cols() != model.rank()) throw ContractError("pca_reconstruct: dimension mismatch");
  Tensor x = matmul(z, transpose(model.components));
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) x(r, j) += model.mean(0, j);
  return x;
}

void DiagGaussian::validate() const {
  if (mean.size() != var.size()) throw DimensionError("diag gaussian: mean/var length mismatch");
  for (double v : var) require(v > 0.0, "diag gaussian: variances must be positive");
}

double gaussian_logpdf(std::span<const double> x, std::span<const double> mean, const Tensor& cov) {
  if (x.size() != mean.size() || cov.rows() != x.size()) {
    throw DimensionError("gaussian_logpdf: dimension mismatch");
  }
  return MvGaussian(std::vector<double>(mean.begin(), mean.end()), cov).logpdf(x);
}

double gaussian_logpdf(std::span<const double> x, const DiagGaussian& q) {
  q.validate();
  if (x.size() != q.mean.size()) throw DimensionError("gaussian_logpdf: dimension mismatch");
  double lp = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) lp += gaussian_logpdf_1d(x[i], q.mean[i], q.var[i]);
  return lp;
}

double gaussian_logpdf_1d(double x, double mean, double var) {
  if (!(var > 0.0)) throw NumericError("gaussian_logpdf: variance must be positive");
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}

MvGaussian::MvGaussian(std::vector<double> mean, const Tensor& cov)
    : mean_(std::move(mean)), cov_(cov), eig_(positive_definite_eigen(cov, "gaussian")) {
  if (cov.rows() != mean_.size()) throw DimensionError("gaussian: mean/cov dimension mismatch");
  double logdet = 0.0;
  for (double l : eig_.values) logdet += std::log(l);
  log_norm_ = -0.5 * (static_cast<double>(mean_.size()) * kLog2Pi + logdet);
  sqrt_cov_ = sqrt_psd(cov);
}

double MvGaussian::logpdf(std::span<const double> x) const {
  const std::size_t d = mean_.size();
  if (x.size() != d) throw DimensionError("gaussian logpdf: dimension mismatch");
  double maha = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double proj = 0.0;
    for (std::size_t i = 0; i < d; ++i) proj += eig_.vectors(i, k) * (x[i] - mean_[i]);
    maha += proj * proj / eig_.values[k];
  }
  return log_norm_ - 0.5 * maha;
}

std::vector<double> MvGaussian::score(std::span<const double> x) const {
  const std::size_t d = mean_.size();
  if (x.size() != d) throw DimensionError("gaussian score: dimension mismatch");
  std::vector<double> proj(d, 0.0), out(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < d; ++i) proj[k] += eig_.vectors(i, k) * (x[i] - mean_[i]);
    proj[k] /= eig_.values[k];
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) out[i] -= eig_.vectors(i, k) * proj[k];
  return out;
}

Tensor MvGaussian::sample(std::size_t n, Rng& rng) const {
  const std::size_t d = mean_.size();
  Tensor z = rng.normal(n, d);
  Tensor x = matmul(z, sqrt_cov_);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) x(r, j) += mean_[j];
  return x;
}

double kl_diag_to_standard(const DiagGaussian& q) {
  q.validate();
  double kl = 0.0;
  for (std::size_t i = 0; i < q.mean.size(); ++i) {
    kl += 0.5 * (q.mean[i] * q.mean[i] + q.var[i] - 1.0 - std::log(q.var[i]));
  }
  return kl;
}

double kl_gaussian(std::span<const double> m1, const Tensor& s1, std::span<const double> m2,
                   const Tensor& s2) {
  const std::size_t d = m1.size();
  if (m2.size() != d || s1.rows() != d || s2.rows() != d) {
    throw DimensionError("kl_gaussian: dimension mismatch");
  }
  const Tensor s2inv = inverse_spd(s2);
  double tr = 0.0, maha = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      tr += s2inv(i, j) * s1(j, i);
      maha += (m2[i] - m1[i]) * s2inv(i, j) * (m2[j] - m1[j]);
    }
  return 0.5 * (tr + maha - static_cast<double>(d) + logdet_spd(s2) - logdet_spd(s1));
}

}  // namespace genlab::linalg

namespace genlab::linalg {

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<MvGaussian> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  require(!components_.empty(), "mixture: need at least one component");
  require(weights_.size() == components_.size(), "mixture: weights/components count mismatch");
  double total = 0.0;
  for (double w : weights_) {
    require(w >= 0.0, "mixture: weights must be non-negative");
    total += w;
  }
  require(std::abs(total - 1.0) < 1e-9, "mixture: weights must sum to 1");
  for (const auto& c : components_)
    if (c.dim() != components_.front().dim()) throw DimensionError("mixture: component dims differ");
}

std::vector<double> GaussianMixture::responsibilities(std::span<const double> x) const {
  std::vector<double> lp(components_.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < components_.size(); ++k) {
    lp[k] = weights_[k] > 0.0 ? std::log(weights_[k]) + components_[k].logpdf(x)
                              : -std::numeric_limits<double>::infinity();
    top = std::max(top, lp[k]);
  }
  double z = 0.0;
  for (double& v : lp) z += (v = std::exp(v - top));
  for (double& v : lp) v /= z;
  return lp;
}

double GaussianMixture::logpdf(std::span<const double> x) const {
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> lp(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    lp[k] = weights_[k] > 0.0 ? std::log(weights_[k]) + components_[k].logpdf(x)
                              : -std::numeric_limits<double>::infinity();
    top = std::max(top, lp[k]);
  }
  double z = 0.0;
  for (double v : lp) z += std::exp(v - top);
  return top + std::log(z);
}

std::vector<double> GaussianMixture::score(std::span<const double> x) const {
  const std::vector<double> r = responsibilities(x);
  std::vector<double> out(dim(), 0.0);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    if (r[k] == 0.0) continue;
    const std::vector<double> s = components_[k].score(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += r[k] * s[i];
  }
  return out;
}

Tensor GaussianMixture::sample(std::size_t n, Rng& rng) const {
  if (components_.size() == 1) return components_.front().sample(n, rng);
  const std::size_t d = dim();
  Tensor out(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const double u = rng.uniform();
    std::size_t k = 0;
    double acc = weights_[0];
    while (u >= acc && k + 1 < weights_.size()) acc += weights_[++k];
    const Tensor x = components_[k].sample(1, rng);
    std::copy(x.data().begin(), x.data().end(), out.row(r).begin());
  }
  return out;
}

}  // namespace genlab::linalg
