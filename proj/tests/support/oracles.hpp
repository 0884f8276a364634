#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "genlab/tensor.hpp"

namespace oracle {

// Composite trapezoid rule on n equal intervals.
inline double trapezoid(const std::function<double(double)>& f, double lo, double hi, std::size_t n) {
  const double h = (hi - lo) / static_cast<double>(n);
  double acc = 0.5 * (f(lo) + f(hi));
  for (std::size_t i = 1; i < n; ++i) acc += f(lo + h * static_cast<double>(i));
  return acc * h;
}

inline double normal_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

inline double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_var(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

// Naive triple-loop product, independent of the library's matmul.
inline genlab::Tensor naive_matmul(const genlab::Tensor& a, const genlab::Tensor& b) {
  genlab::Tensor c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

// Central-difference Jacobian of a row map R^d -> R^m evaluated at x.
inline genlab::Tensor numeric_jacobian(const std::function<std::vector<double>(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-6) {
  const std::size_t d = x.size();
  const std::size_t m = f(x).size();
  genlab::Tensor j(m, d);
  for (std::size_t c = 0; c < d; ++c) {
    const double x0 = x[c];
    x[c] = x0 + h;
    const auto fp = f(x);
    x[c] = x0 - h;
    const auto fm = f(x);
    x[c] = x0;
    for (std::size_t r = 0; r < m; ++r) j(r, c) = (fp[r] - fm[r]) / (2.0 * h);
  }
  return j;
}

// Determinant by Gaussian elimination with partial pivoting.
inline double determinant(genlab::Tensor a) {
  const std::size_t n = a.rows();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    if (a(p, c) == 0.0) return 0.0;
    if (p != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a(p, k), a(c, k));
      det = -det;
    }
    det *= a(c, c);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      for (std::size_t k = c; k < n; ++k) a(r, k) -= f * a(c, k);
    }
  }
  return det;
}

}  // namespace oracle
